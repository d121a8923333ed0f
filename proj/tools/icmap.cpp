// icmap: synthetic scenes, online mapping pipeline, evaluation, smoothing sweep, rendering.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "icmap/icmap.hpp"

namespace fs = std::filesystem;
using namespace icmap;

namespace {

// Runs task(i) for i in [0, n) on up to `jobs` threads; rethrows the first failure by index.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& task) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto threads = static_cast<std::size_t>(std::clamp<int>(jobs, 1, 64));
  if (threads <= 1 || n <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < std::min(threads, n); ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::optional<PerceptionRange> parse_range(const std::string& text) {
  const auto x = text.find_first_of("xX");
  if (x == std::string::npos) return std::nullopt;
  try {
    std::size_t a = 0, b = 0;
    const std::string ls = text.substr(0, x), ws = text.substr(x + 1);
    const double l = std::stod(ls, &a), w = std::stod(ws, &b);
    if (a != ls.size() || b != ws.size() || !(l > 0.0) || !(w > 0.0)) return std::nullopt;
    return PerceptionRange{l, w};
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

const auto kRangeValidator = CLI::Validator(
    [](std::string& s) -> std::string {
      return parse_range(s) ? std::string() : "range must look like LENGTHxWIDTH with positive numbers, e.g. 100x50";
    },
    "LxW");

const auto kGridValidator = CLI::Validator(
    [](std::string& s) -> std::string {
      try {
        parse_s_grid(s);
      } catch (const Error& e) {
        return e.what();
      }
      return {};
    },
    "START:STOP:STEP");

std::vector<double> parse_thresholds(const std::string& text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = text.find(',', pos);
    const std::string tok = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (tok.empty() || used != tok.size() || !(v > 0.0)) throw CLI::ValidationError("--thresholds", "bad threshold '" + tok + "'");
    out.push_back(v);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

const auto kThresholdValidator = CLI::Validator(
    [](std::string& s) -> std::string {
      try {
        parse_thresholds(s);
      } catch (const CLI::ValidationError& e) {
        return e.what();
      }
      return {};
    },
    "T1,T2,...");

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("icmap");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("IC_MAPPER_LOG")) {
    const std::string v(env);
    if (v == "error") spdlog::set_level(spdlog::level::err);
    else if (v == "warn") spdlog::set_level(spdlog::level::warn);
    else if (v == "info") spdlog::set_level(spdlog::level::info);
    else if (v == "debug") spdlog::set_level(spdlog::level::debug);
    else spdlog::warn("ignoring IC_MAPPER_LOG={} (expected error, warn, info or debug)", v);
  }
}

std::string stem_of(const std::string& path) {
  std::string stem = fs::path(path).filename().string();
  for (const char* ext : {".json", ".scene"}) {
    if (stem.size() > std::string(ext).size() && stem.ends_with(ext)) stem.resize(stem.size() - std::string(ext).size());
  }
  return stem;
}

std::string format_row(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

// Listed for --help; the file itself is expanded before parsing.
std::string& config_path_placeholder() {
  static std::string path;
  return path;
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  SceneConfig scene;
  std::string out;
  std::string range = "100x50";
  std::string curvature = "straight";
  double road_length = 0.0;
  int count = 1;
  int jobs = 1;
};

void add_synth(CLI::App& app, SynthArgs& a, std::function<void()>& action) {
  auto* sub = app.add_subcommand("synth", "Generate synthetic scene files");
  sub->add_option("--config", config_path_placeholder(), "key = value file with any of the options below (command-line flags win)");
  sub->add_option("--out", a.out, "Output scene file (a directory when --count > 1)")->required();
  sub->add_option("--seed", a.scene.seed, "Random seed (scene k uses seed + k)");
  sub->add_option("--count", a.count, "Number of scenes")->check(CLI::PositiveNumber);
  sub->add_option("--range", a.range, "Perception range LxW in meters")->check(kRangeValidator);
  sub->add_option("--lanes", a.scene.lanes)->check(CLI::PositiveNumber);
  sub->add_option("--lane-width", a.scene.lane_width)->check(CLI::PositiveNumber);
  sub->add_option("--curvature", a.curvature)->check(CLI::IsMember({"straight", "arc", "s_curve"}));
  sub->add_option("--radius", a.scene.radius, "Curvature radius for arc and s_curve")->check(CLI::PositiveNumber);
  sub->add_option("--crossings", a.scene.crossings)->check(CLI::NonNegativeNumber);
  sub->add_option("--crossing-width", a.scene.crossing_width)->check(CLI::PositiveNumber);
  sub->add_option("--frames", a.scene.frames)->check(CLI::NonNegativeNumber);
  sub->add_option("--frame-spacing", a.scene.frame_spacing, "Ego travel between frames (m)")->check(CLI::PositiveNumber);
  sub->add_option("--frame-dt", a.scene.frame_dt, "Time between frames (s)")->check(CLI::PositiveNumber);
  sub->add_option("--road-length", a.road_length, "Defaults to the ego travel distance")->check(CLI::NonNegativeNumber);
  sub->add_option("--points", a.scene.points_per_instance, "Points per detected polyline");
  sub->add_option("--embedding-dim", a.scene.embedding_dim);
  sub->add_option("--jitter", a.scene.noise.jitter);
  sub->add_option("--dropout", a.scene.noise.dropout);
  sub->add_option("--fp-rate", a.scene.noise.fp_rate);
  sub->add_option("--split", a.scene.noise.split);
  sub->add_option("--embedding-sigma", a.scene.noise.embedding_sigma);
  sub->add_option("--tp-score-mean", a.scene.noise.tp_score_mean);
  sub->add_option("--tp-score-sigma", a.scene.noise.tp_score_sigma);
  sub->add_option("--fp-score-mean", a.scene.noise.fp_score_mean);
  sub->add_option("--fp-score-sigma", a.scene.noise.fp_score_sigma);
  sub->add_option("--jobs", a.jobs)->check(CLI::PositiveNumber);
  action = [&a] {
    SceneConfig cfg = a.scene;
    cfg.range = *parse_range(a.range);
    cfg.curvature = a.curvature == "arc" ? Curvature::kArc : a.curvature == "s_curve" ? Curvature::kSCurve : Curvature::kStraight;
    cfg.road_length = a.road_length > 0.0 ? a.road_length : std::max(1, cfg.frames - 1) * cfg.frame_spacing;
    cfg.validate();
    if (a.count > 1) fs::create_directories(a.out);
    parallel_for(static_cast<std::size_t>(a.count), a.jobs, [&](std::size_t k) {
      SceneConfig c = cfg;
      c.seed = cfg.seed + k;
      const Scene scene = build_scene(c);
      const std::string path = a.count > 1 ? (fs::path(a.out) / (scene.scene_id + ".json")).string() : a.out;
      write_scene(scene, path);
      spdlog::info("wrote {} ({} instances, {} frames)", path, scene.gt.size(), scene.frames.size());
    });
  };
}

// ---------------------------------------------------------------------------

struct PipelineArgs {
  PipelineConfig config;
  bool no_fusion = false;
};

void add_pipeline_options(CLI::App* sub, PipelineArgs& p) {
  auto& c = p.config;
  sub->add_option("--theta", c.association.theta, "Affinity threshold");
  sub->add_option("--tau", c.association.tau, "Geometric affinity scale (m)");
  sub->add_option("--w-geo", c.association.w_geo);
  sub->add_option("--w-feat", c.association.w_feat);
  sub->add_option("--max-age", c.association.max_age, "Frames a missed track is kept");
  sub->add_option("--score-threshold", c.score_threshold, "Detections scoring below are ignored");
  sub->add_option("--n-sample", c.n_sample, "History points sampled per instance");
  sub->add_option("--expand", c.expand, "Patch expansion for history sampling (m)");
  sub->add_option("--fusion-radius", c.fusion_radius);
  sub->add_option("--fusion-weight", c.fusion_weight);
  sub->add_option("--s", c.fit.s, "Smoothing parameter for polyline merging");
  sub->add_option("--degree", c.fit.degree);
  sub->add_option("--out-spacing", c.fit.out_spacing);
  sub->add_option("--control-spacing", c.fit.control_spacing);
  sub->add_flag("--no-fusion", p.no_fusion, "Skip the history fusion stage");
}

struct RunArgs {
  std::vector<std::string> scenes;
  std::string map, trace, out_dir;
  PipelineArgs pipeline;
  int jobs = 1;
};

void add_run(CLI::App& app, RunArgs& a, std::function<void()>& action) {
  auto* sub = app.add_subcommand("run", "Run the mapping pipeline on scene files");
  sub->add_option("--config", config_path_placeholder(), "key = value file with any of the options below (command-line flags win)");
  sub->add_option("scenes", a.scenes, "Scene files")->required()->check(CLI::ExistingFile);
  sub->add_option("--map", a.map, "Output map file (single scene)");
  sub->add_option("--trace", a.trace, "Output trace file (single scene)");
  sub->add_option("--out-dir", a.out_dir, "Directory for <scene>.map.json and <scene>.trace.json");
  sub->add_option("--jobs", a.jobs)->check(CLI::PositiveNumber);
  add_pipeline_options(sub, a.pipeline);
  action = [&a] {
    if (a.out_dir.empty() && (a.scenes.size() != 1 || a.map.empty())) {
      throw CLI::ValidationError("run", "use --map/--trace with one scene, or --out-dir");
    }
    PipelineConfig cfg = a.pipeline.config;
    cfg.fusion = !a.pipeline.no_fusion;
    cfg.validate();
    if (!a.out_dir.empty()) fs::create_directories(a.out_dir);
    parallel_for(a.scenes.size(), a.jobs, [&](std::size_t k) {
      const Scene scene = read_scene(a.scenes[k]);
      const auto result = run_pipeline(scene, cfg, [&](int frame, InstanceId id, MergeOutcome outcome) {
        if (outcome == MergeOutcome::kReplacedDisjoint) {
          spdlog::warn("{} frame {}: crossing {} does not overlap its stored polygon; replaced", scene.scene_id, frame, id);
        }
      });
      std::string map_path = a.map, trace_path = a.trace;
      if (!a.out_dir.empty()) {
        const std::string stem = stem_of(a.scenes[k]);
        map_path = (fs::path(a.out_dir) / (stem + ".map.json")).string();
        trace_path = (fs::path(a.out_dir) / (stem + ".trace.json")).string();
      }
      save_map(result.map, map_path, scene.scene_id);
      if (!trace_path.empty()) write_trace(result.trace, trace_path);
      spdlog::info("{}: {} frames, {} instances", scene.scene_id, scene.frames.size(), result.map.size());
    });
  };
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  std::vector<std::string> scenes, maps, traces;
  std::string thresholds;
  std::string report;
  std::string matching = "greedy";
  double mot_threshold = kDefaultMotThreshold;
  bool mot = false;
  int jobs = 1;
};

void print_report(const EvalReport& rep) {
  std::printf("scenes: %zu\n", rep.scenes);
  std::printf("%-14s", "class");
  for (double t : rep.thresholds) std::printf("  AP@%-5s", format_row("%.2g", t).c_str());
  std::printf("  %8s  %8s", "AP", "CD");
  if (rep.mot_overall) std::printf("  %8s  %8s  %5s", "MOTA", "MOTP", "IDS");
  std::printf("\n");
  auto opt = [](const std::optional<double>& v) { return v ? format_row("%8.4f", *v) : std::string("       -"); };
  for (ElementClass c : kAllClasses) {
    const ClassReport& cr = rep.classes[class_index(c)];
    std::printf("%-14s", std::string(class_name(c)).c_str());
    for (std::size_t k = 0; k < rep.thresholds.size(); ++k) {
      std::printf("  %8s", k < cr.ap_by_threshold.size() ? format_row("%8.4f", cr.ap_by_threshold[k]).c_str() : "       -");
    }
    std::printf("  %s  %s", opt(cr.ap).c_str(), opt(cr.cd).c_str());
    if (rep.mot_overall) std::printf("  %8.4f  %8.4f  %5zu", cr.mot.mota(), cr.mot.motp(), cr.mot.id_switches);
    std::printf("\n");
  }
  std::printf("mAP %s  mCD %s", opt(rep.map).c_str(), opt(rep.mcd).c_str());
  if (rep.mot_overall) {
    std::printf("  MOTA %.4f  MOTP %.4f  IDS %zu", rep.mot_overall->mota(), rep.mot_overall->motp(), rep.mot_overall->id_switches);
  }
  std::printf("\n");
}

void add_eval(CLI::App& app, EvalArgs& a, std::function<void()>& action) {
  auto* sub = app.add_subcommand("eval", "Evaluate predicted maps and traces against scene ground truth");
  sub->add_option("--config", config_path_placeholder(), "key = value file with any of the options below (command-line flags win)");
  sub->add_option("--scene", a.scenes, "Scene files")->required()->check(CLI::ExistingFile);
  sub->add_option("--map", a.maps, "Predicted map files, one per scene")->required()->check(CLI::ExistingFile);
  sub->add_option("--trace", a.traces, "Trace files, one per scene");
  sub->add_option("--thresholds", a.thresholds, "Comma separated AP thresholds (m); defaults by range")
      ->check(kThresholdValidator);
  sub->add_flag("--mot", a.mot, "Compute CLEAR-MOT metrics (needs traces)");
  sub->add_option("--mot-threshold", a.mot_threshold, "MOT match gate (m)")->check(CLI::PositiveNumber);
  sub->add_option("--ap-matching", a.matching)->check(CLI::IsMember({"greedy", "hungarian"}));
  sub->add_option("--report", a.report, "Write the report document here");
  sub->add_option("--jobs", a.jobs)->check(CLI::PositiveNumber);
  action = [&a] {
    if (a.maps.size() != a.scenes.size()) throw CLI::ValidationError("eval", "need one --map per --scene");
    if (!a.traces.empty() && a.traces.size() != a.scenes.size()) throw CLI::ValidationError("eval", "need one --trace per --scene");
    if (a.mot && a.traces.empty()) throw Error(ErrorCode::kInvalidArgument, "--mot requires --trace files");

    struct Loaded {
      Scene scene;
      GlobalMap map;
      std::optional<Trace> trace;
    };
    std::vector<Loaded> loaded(a.scenes.size());
    parallel_for(a.scenes.size(), a.jobs, [&](std::size_t k) {
      loaded[k].scene = read_scene(a.scenes[k]);
      loaded[k].map = load_map(a.maps[k]).map;
      if (!a.traces.empty()) {
        if (!fs::exists(a.traces[k])) throw Error(ErrorCode::kInvalidArgument, "trace file '" + a.traces[k] + "' does not exist");
        loaded[k].trace = read_trace(a.traces[k]);
      }
    });

    EvalOptions opts;
    opts.mot = a.mot;
    opts.mot_threshold = a.mot_threshold;
    opts.matching = a.matching == "hungarian" ? ApMatching::kHungarian : ApMatching::kGreedy;
    if (!a.thresholds.empty()) {
      opts.thresholds = parse_thresholds(a.thresholds);
    } else if (!loaded.empty() && loaded.front().scene.range == kSmallRange) {
      opts.thresholds.assign(kSmallRangeThresholds.begin(), kSmallRangeThresholds.end());
    }
    Evaluator ev(opts);
    for (const Loaded& l : loaded) ev.add(l.scene, l.map, l.trace);
    const EvalReport rep = ev.report();
    if (!a.report.empty()) write_text_file(a.report, dump(report_to_json(rep)));
    print_report(rep);
  };
}

// ---------------------------------------------------------------------------

struct SweepArgs {
  std::string scene;
  std::string grid = "0:2:0.1";
  std::string table, svg;
  double sigma = 0.3;
  int seeds = 50;
  std::uint64_t seed = 0;
  int jobs = 1;
};

void add_sweep(CLI::App& app, SweepArgs& a, std::function<void()>& action) {
  auto* sub = app.add_subcommand("sweep-s", "Sweep the smoothing parameter on a scene or the noisy sine fixture");
  sub->add_option("--config", config_path_placeholder(), "key = value file with any of the options below (command-line flags win)");
  sub->add_option("scene", a.scene, "Scene file; the built-in fixture when omitted")->check(CLI::ExistingFile);
  sub->add_option("--s", a.grid, "Grid start:stop:step")->check(kGridValidator);
  sub->add_option("--sigma", a.sigma, "Point noise (m)")->check(CLI::NonNegativeNumber);
  sub->add_option("--seeds", a.seeds, "Fixture noise seeds")->check(CLI::PositiveNumber);
  sub->add_option("--seed", a.seed, "Noise seed for scene sweeps");
  sub->add_option("--table", a.table, "Write the table here instead of standard output");
  sub->add_option("--svg", a.svg, "Write a line chart here");
  sub->add_option("--jobs", a.jobs)->check(CLI::PositiveNumber);
  action = [&a] {
    const auto grid = parse_s_grid(a.grid);
    std::vector<SweepRow> rows(grid.size());
    std::optional<Scene> scene;
    if (!a.scene.empty()) scene = read_scene(a.scene);
    SineFixture fx;
    fx.sigma = a.sigma;
    fx.seeds = a.seeds;
    parallel_for(grid.size(), a.jobs, [&](std::size_t k) {
      const std::vector<double> one{grid[k]};
      rows[k] = scene ? sweep_scene(*scene, one, a.sigma, a.seed).front() : sweep_fixture(fx, one).front();
    });
    std::string text = "s,cd_divider,cd_boundary\n";
    for (const SweepRow& r : rows) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "%.4f,%.6f,%.6f\n", r.s, r.cd_divider, r.cd_boundary);
      text += buf;
    }
    if (a.table.empty()) std::fputs(text.c_str(), stdout);
    else write_text_file(a.table, text);
    if (!a.svg.empty()) write_text_file(a.svg, render_sweep_svg(rows));
  };
}

// ---------------------------------------------------------------------------

struct RenderArgs {
  std::vector<std::string> maps;
  std::string gt, out;
};

void add_render(CLI::App& app, RenderArgs& a, std::function<void()>& action) {
  auto* sub = app.add_subcommand("render", "Draw map files as SVG");
  sub->add_option("maps", a.maps, "Map files")->required()->check(CLI::ExistingFile);
  sub->add_option("--gt", a.gt, "Scene or map file drawn as a dashed ground-truth layer")->check(CLI::ExistingFile);
  sub->add_option("--out", a.out, "Output SVG")->required();
  action = [&a] {
    std::vector<GlobalMap> maps;
    for (const auto& m : a.maps) maps.push_back(load_map(m).map);
    std::optional<GlobalMap> gt;
    if (!a.gt.empty()) {
      const Json j = detail::parse_text(read_text_file(a.gt), ErrorCode::kMapFormatError, a.gt);
      gt = j.contains("frames") ? scene_from_json(j, a.gt).gt : map_from_json(j, a.gt).map;
    }
    std::vector<SvgLayer> layers;
    if (gt) layers.push_back({"gt", &*gt, true});
    for (std::size_t k = 0; k < maps.size(); ++k) layers.push_back({"map" + std::to_string(k), &maps[k], false});
    write_text_file(a.out, render_svg(layers));
  };
}


// Expands `--config FILE` (key = value lines, parsed by CLI11) into flags placed
// right after the subcommand name, so explicit flags later on the line override them.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  for (std::size_t i = 1; i < args.size(); ++i) {
    std::string file;
    std::size_t span = 0;
    if (args[i] == "--config" && i + 1 < args.size()) {
      file = args[i + 1];
      span = 2;
    } else if (args[i].rfind("--config=", 0) == 0) {
      file = args[i].substr(9);
      span = 1;
    } else {
      continue;
    }
    if (!fs::exists(file)) throw CLI::FileError::Missing(file);
    std::vector<std::string> flags;
    for (const CLI::ConfigItem& item : CLI::ConfigINI().from_file(file)) {
      if (item.name == "++" || item.name == "--") continue;  // section markers
      std::string name = item.name;
      std::replace(name.begin(), name.end(), '_', '-');
      if (item.inputs.size() == 1 && (item.inputs[0] == "true" || item.inputs[0] == "false")) {
        if (item.inputs[0] == "true") flags.push_back("--" + name);
        continue;
      }
      for (const std::string& v : item.inputs) {
        flags.push_back("--" + name);
        flags.push_back(v);
      }
    }
    args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i + span));
    args.insert(args.begin() + 2, flags.begin(), flags.end());
    break;
  }
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Online vectorized HD map construction toolkit"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  std::function<void()> synth, run, eval, sweep, render;
  SynthArgs synth_args;
  RunArgs run_args;
  EvalArgs eval_args;
  SweepArgs sweep_args;
  RenderArgs render_args;
  add_synth(app, synth_args, synth);
  add_run(app, run_args, run);
  add_eval(app, eval_args, eval);
  add_sweep(app, sweep_args, sweep);
  add_render(app, render_args, render);

  try {
    std::vector<std::string> args(argv, argv + argc);
    args = expand_config(std::move(args));
    std::reverse(args.begin(), args.end());
    args.pop_back();  // program name
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "synth") synth();
    else if (name == "run") run();
    else if (name == "eval") eval();
    else if (name == "sweep-s") sweep();
    else render();
  } catch (const CLI::ValidationError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
