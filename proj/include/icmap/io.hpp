#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "icmap/error.hpp"
#include "icmap/instance.hpp"
#include "icmap/mapstore.hpp"
#include "icmap/metrics.hpp"
#include "icmap/synth.hpp"

namespace icmap {

inline constexpr int kFormatVersion = 1;

using Json = nlohmann::ordered_json;

namespace detail {

inline Json class_vocabulary() {
  Json v = Json::array();
  for (ElementClass c : kAllClasses) v.push_back(class_name(c));
  return v;
}

// Field access that reports the json path on failure.
class Reader {
 public:
  Reader(ErrorCode code, std::string file) : code_(code), file_(std::move(file)) {}

  [[noreturn]] void fail(const std::string& path, const std::string& what) const {
    throw Error(code_, file_ + ": " + path + ": " + what);
  }

  const Json& field(const Json& obj, const std::string& key, const std::string& path) const {
    if (!obj.is_object()) fail(path, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) fail(path, "missing field '" + key + "'");
    return *it;
  }

  double number(const Json& j, const std::string& path) const {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
  }

  std::uint64_t uint(const Json& j, const std::string& path) const {
    if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long long>() >= 0)) {
      fail(path, "expected a non-negative integer");
    }
    return j.get<std::uint64_t>();
  }

  int integer(const Json& j, const std::string& path) const {
    if (!j.is_number_integer()) fail(path, "expected an integer");
    return j.get<int>();
  }

  std::string string(const Json& j, const std::string& path) const {
    if (!j.is_string()) fail(path, "expected a string");
    return j.get<std::string>();
  }

  const Json& array(const Json& j, const std::string& path) const {
    if (!j.is_array()) fail(path, "expected an array");
    return j;
  }

  ElementClass cls(const Json& j, const std::string& path) const {
    const std::string name = string(j, path);
    auto c = parse_class(name);
    if (!c) fail(path, "unknown class '" + name + "'");
    return *c;
  }

  Points points(const Json& j, const std::string& path) const {
    Points out;
    for (std::size_t i = 0; i < array(j, path).size(); ++i) {
      const std::string p = path + "[" + std::to_string(i) + "]";
      const Json& xy = j[i];
      if (!xy.is_array() || xy.size() != 2) fail(p, "expected [x, y]");
      out.push_back({number(xy[0], p + "[0]"), number(xy[1], p + "[1]")});
    }
    return out;
  }

  std::vector<double> vector(const Json& j, const std::string& path) const {
    std::vector<double> out;
    for (std::size_t i = 0; i < array(j, path).size(); ++i) out.push_back(number(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
  }

  void version(const Json& root) const {
    const int v = integer(field(root, "format_version", "$"), "format_version");
    if (v != kFormatVersion) {
      throw Error(ErrorCode::kUnsupportedVersion, file_ + ": format_version " + std::to_string(v) +
                                                      " is not supported (expected " + std::to_string(kFormatVersion) + ")");
    }
  }

  void vocabulary(const Json& root) const {
    auto it = root.find("classes");
    if (it == root.end()) return;
    if (*it != class_vocabulary()) fail("classes", "class vocabulary " + it->dump() + " does not match " + class_vocabulary().dump());
  }

  // Geometry validity errors become format errors with the instance path.
  MapInstance checked(MapInstance inst, const std::string& path) const {
    try {
      validate_instance(inst);
    } catch (const Error& e) {
      fail(path, e.what());
    }
    return inst;
  }

 private:
  ErrorCode code_;
  std::string file_;
};

inline Json points_json(const Points& pts) {
  Json a = Json::array();
  for (const Vec2& p : pts) a.push_back(Json::array({p.x, p.y}));
  return a;
}

inline Json parse_text(const std::string& text, ErrorCode code, const std::string& file) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(code, file + ": " + e.what());
  }
}

}  // namespace detail

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kInvalidArgument, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kInvalidArgument, "cannot write '" + path + "'");
  out << text;
  if (!out) throw Error(ErrorCode::kInvalidArgument, "write to '" + path + "' failed");
}

inline std::string dump(const Json& j) { return j.dump(1, ' ') + "\n"; }

// ---------------------------------------------------------------------------
// Map files

inline Json map_to_json(const GlobalMap& map, const std::string& scene_id = "") {
  Json root;
  root["format_version"] = kFormatVersion;
  root["scene_id"] = scene_id;
  root["classes"] = detail::class_vocabulary();
  Json insts = Json::array();
  for (const auto& [id, e] : map.entries) {
    insts.push_back({{"id", id},
                     {"class", class_name(e.instance.cls)},
                     {"points", detail::points_json(e.instance.points)},
                     {"last_update", e.last_update}});
  }
  root["instances"] = std::move(insts);
  return root;
}

struct LoadedMap {
  std::string scene_id;
  GlobalMap map;
};

inline LoadedMap map_from_json(const Json& root, const std::string& file = "<map>") {
  const detail::Reader r(ErrorCode::kMapFormatError, file);
  r.version(root);
  r.vocabulary(root);
  LoadedMap out;
  if (root.contains("scene_id")) out.scene_id = r.string(root["scene_id"], "scene_id");
  const Json& insts = r.array(r.field(root, "instances", "$"), "instances");
  for (std::size_t i = 0; i < insts.size(); ++i) {
    const std::string p = "instances[" + std::to_string(i) + "]";
    const Json& j = insts[i];
    MapInstance inst;
    const InstanceId id = r.uint(r.field(j, "id", p), p + ".id");
    inst.id = id;
    inst.cls = r.cls(r.field(j, "class", p), p + ".class");
    inst.points = r.points(r.field(j, "points", p), p + ".points");
    const int last = j.contains("last_update") ? r.integer(j["last_update"], p + ".last_update") : 0;
    if (out.map.contains(id)) r.fail(p + ".id", "duplicate id " + std::to_string(id));
    out.map.entries.emplace(id, MapEntry{r.checked(std::move(inst), p), last});
  }
  return out;
}

inline void save_map(const GlobalMap& map, const std::string& path, const std::string& scene_id = "") {
  write_text_file(path, dump(map_to_json(map, scene_id)));
}

inline LoadedMap load_map(const std::string& path) {
  return map_from_json(detail::parse_text(read_text_file(path), ErrorCode::kMapFormatError, path), path);
}

// ---------------------------------------------------------------------------
// Scene files

inline Json scene_to_json(const Scene& scene) {
  Json root;
  root["format_version"] = kFormatVersion;
  root["scene_id"] = scene.scene_id;
  root["classes"] = detail::class_vocabulary();
  root["range"] = {{"length", scene.range.length}, {"width", scene.range.width}};
  Json gt = Json::array();
  for (const auto& [id, e] : scene.gt.entries) {
    gt.push_back({{"id", id}, {"class", class_name(e.instance.cls)}, {"points", detail::points_json(e.instance.points)}});
  }
  root["gt"] = {{"instances", std::move(gt)}};
  Json frames = Json::array();
  for (const SceneFrame& f : scene.frames) {
    Json jf;
    jf["t"] = f.t;
    jf["ego_pose"] = {{"x", f.ego_pose.x}, {"y", f.ego_pose.y}, {"theta", f.ego_pose.theta}};
    Json local = Json::array();
    for (const MapInstance& g : f.gt_local) {
      local.push_back({{"id", g.id.value_or(0)}, {"class", class_name(g.cls)}, {"points", detail::points_json(g.points)}});
    }
    jf["gt_local"] = std::move(local);
    Json dets = Json::array();
    for (const MapInstance& d : f.detections) {
      Json jd{{"class", class_name(d.cls)}, {"score", d.score}, {"points", detail::points_json(d.points)}};
      if (d.embedding) jd["embedding"] = *d.embedding;
      dets.push_back(std::move(jd));
    }
    jf["detections"] = std::move(dets);
    frames.push_back(std::move(jf));
  }
  root["frames"] = std::move(frames);
  return root;
}

inline Scene scene_from_json(const Json& root, const std::string& file = "<scene>") {
  const detail::Reader r(ErrorCode::kSceneFormatError, file);
  r.version(root);
  r.vocabulary(root);
  Scene scene;
  if (root.contains("scene_id")) scene.scene_id = r.string(root["scene_id"], "scene_id");
  if (root.contains("range")) {
    const Json& range = root["range"];
    scene.range.length = r.number(r.field(range, "length", "range"), "range.length");
    scene.range.width = r.number(r.field(range, "width", "range"), "range.width");
    if (!(scene.range.length > 0.0) || !(scene.range.width > 0.0)) r.fail("range", "extents must be positive");
  }
  const Json& gt = r.array(r.field(r.field(root, "gt", "$"), "instances", "gt"), "gt.instances");
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const std::string p = "gt.instances[" + std::to_string(i) + "]";
    MapInstance inst;
    const InstanceId id = r.uint(r.field(gt[i], "id", p), p + ".id");
    inst.id = id;
    inst.cls = r.cls(r.field(gt[i], "class", p), p + ".class");
    inst.points = r.points(r.field(gt[i], "points", p), p + ".points");
    if (scene.gt.contains(id)) r.fail(p + ".id", "duplicate id " + std::to_string(id));
    scene.gt.entries.emplace(id, MapEntry{r.checked(std::move(inst), p), 0});
  }
  const Json& frames = r.array(r.field(root, "frames", "$"), "frames");
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const std::string p = "frame " + std::to_string(f);
    const Json& jf = frames[f];
    SceneFrame frame;
    frame.t = r.number(r.field(jf, "t", p), p + ".t");
    const Json& pose = r.field(jf, "ego_pose", p);
    frame.ego_pose = Pose2{r.number(r.field(pose, "x", p + ".ego_pose"), p + ".ego_pose.x"),
                           r.number(r.field(pose, "y", p + ".ego_pose"), p + ".ego_pose.y"),
                           r.number(r.field(pose, "theta", p + ".ego_pose"), p + ".ego_pose.theta")};
    if (jf.contains("gt_local")) {
      const Json& local = r.array(jf["gt_local"], p + ".gt_local");
      for (std::size_t i = 0; i < local.size(); ++i) {
        const std::string q = p + ".gt_local[" + std::to_string(i) + "]";
        MapInstance inst;
        inst.id = r.uint(r.field(local[i], "id", q), q + ".id");
        inst.cls = r.cls(r.field(local[i], "class", q), q + ".class");
        inst.points = r.points(r.field(local[i], "points", q), q + ".points");
        frame.gt_local.push_back(r.checked(std::move(inst), q));
      }
    }
    const Json& dets = r.array(r.field(jf, "detections", p), p + ".detections");
    for (std::size_t i = 0; i < dets.size(); ++i) {
      const std::string q = p + ".detections[" + std::to_string(i) + "]";
      MapInstance inst;
      inst.cls = r.cls(r.field(dets[i], "class", q), q + ".class");
      inst.score = dets[i].contains("score") ? r.number(dets[i]["score"], q + ".score") : 1.0;
      inst.points = r.points(r.field(dets[i], "points", q), q + ".points");
      if (dets[i].contains("embedding")) inst.embedding = r.vector(dets[i]["embedding"], q + ".embedding");
      frame.detections.push_back(r.checked(std::move(inst), q));
    }
    scene.frames.push_back(std::move(frame));
  }
  return scene;
}

inline void write_scene(const Scene& scene, const std::string& path) { write_text_file(path, dump(scene_to_json(scene))); }

inline Scene read_scene(const std::string& path) {
  return scene_from_json(detail::parse_text(read_text_file(path), ErrorCode::kSceneFormatError, path), path);
}

// ---------------------------------------------------------------------------
// Trace files

struct TraceFrame {
  double t = 0.0;
  std::size_t detection_count = 0;
  std::vector<AcceptedMatch> matches;
  std::vector<InstanceId> issued_ids;
  std::vector<MapInstance> outputs;  // ego frame, with ids and scores
};

struct Trace {
  std::string scene_id;
  Json config = Json::object();
  std::vector<TraceFrame> frames;
};

inline Json trace_to_json(const Trace& trace) {
  Json root;
  root["format_version"] = kFormatVersion;
  root["scene_id"] = trace.scene_id;
  root["classes"] = detail::class_vocabulary();
  root["config"] = trace.config;
  Json frames = Json::array();
  for (const TraceFrame& f : trace.frames) {
    Json matches = Json::array();
    for (const AcceptedMatch& m : f.matches) matches.push_back({{"det", m.det}, {"track_id", m.track_id}, {"affinity", m.affinity}});
    Json outputs = Json::array();
    for (const MapInstance& o : f.outputs) {
      outputs.push_back({{"id", o.id.value_or(0)},
                         {"class", class_name(o.cls)},
                         {"score", o.score},
                         {"points", detail::points_json(o.points)}});
    }
    frames.push_back({{"t", f.t},
                      {"detection_count", f.detection_count},
                      {"matches", std::move(matches)},
                      {"issued_ids", f.issued_ids},
                      {"outputs", std::move(outputs)}});
  }
  root["frames"] = std::move(frames);
  return root;
}

inline Trace trace_from_json(const Json& root, const std::string& file = "<trace>") {
  // Trace problems are reported as scene format errors: the trace is a per-frame companion of the scene.
  const detail::Reader r(ErrorCode::kSceneFormatError, file);
  r.version(root);
  r.vocabulary(root);
  Trace trace;
  if (root.contains("scene_id")) trace.scene_id = r.string(root["scene_id"], "scene_id");
  if (root.contains("config")) trace.config = root["config"];
  const Json& frames = r.array(r.field(root, "frames", "$"), "frames");
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const std::string p = "frame " + std::to_string(f);
    const Json& jf = frames[f];
    TraceFrame frame;
    frame.t = r.number(r.field(jf, "t", p), p + ".t");
    frame.detection_count = r.uint(r.field(jf, "detection_count", p), p + ".detection_count");
    const Json& matches = r.array(r.field(jf, "matches", p), p + ".matches");
    for (std::size_t i = 0; i < matches.size(); ++i) {
      const std::string q = p + ".matches[" + std::to_string(i) + "]";
      frame.matches.push_back({r.uint(r.field(matches[i], "det", q), q + ".det"),
                               r.uint(r.field(matches[i], "track_id", q), q + ".track_id"),
                               r.number(r.field(matches[i], "affinity", q), q + ".affinity")});
    }
    const Json& issued = r.array(r.field(jf, "issued_ids", p), p + ".issued_ids");
    for (std::size_t i = 0; i < issued.size(); ++i) frame.issued_ids.push_back(r.uint(issued[i], p + ".issued_ids"));
    const Json& outputs = r.array(r.field(jf, "outputs", p), p + ".outputs");
    for (std::size_t i = 0; i < outputs.size(); ++i) {
      const std::string q = p + ".outputs[" + std::to_string(i) + "]";
      MapInstance inst;
      inst.id = r.uint(r.field(outputs[i], "id", q), q + ".id");
      inst.cls = r.cls(r.field(outputs[i], "class", q), q + ".class");
      inst.score = r.number(r.field(outputs[i], "score", q), q + ".score");
      inst.points = r.points(r.field(outputs[i], "points", q), q + ".points");
      frame.outputs.push_back(r.checked(std::move(inst), q));
    }
    trace.frames.push_back(std::move(frame));
  }
  return trace;
}

inline void write_trace(const Trace& trace, const std::string& path) { write_text_file(path, dump(trace_to_json(trace))); }

inline Trace read_trace(const std::string& path) {
  return trace_from_json(detail::parse_text(read_text_file(path), ErrorCode::kSceneFormatError, path), path);
}

// ---------------------------------------------------------------------------
// Reports

inline Json mot_json(const MotCounts& m) {
  return {{"gt", m.gt},         {"fp", m.fp},         {"fn", m.fn}, {"id_switches", m.id_switches},
          {"matches", m.matches}, {"mota", m.mota()}, {"motp", m.motp()}};
}

inline Json report_to_json(const EvalReport& rep) {
  Json root;
  root["format_version"] = kFormatVersion;
  root["scenes"] = rep.scenes;
  root["thresholds"] = rep.thresholds;
  root["mot_match_threshold"] = rep.mot_match_threshold;
  Json classes = Json::object();
  for (ElementClass c : kAllClasses) {
    const ClassReport& cr = rep.classes[class_index(c)];
    Json jc;
    jc["ap_by_threshold"] = cr.ap_by_threshold;
    jc["ap"] = cr.ap ? Json(*cr.ap) : Json(nullptr);
    jc["cd"] = cr.cd ? Json(*cr.cd) : Json(nullptr);
    if (rep.mot_overall) jc["mot"] = mot_json(cr.mot);
    classes[std::string(class_name(c))] = std::move(jc);
  }
  root["classes"] = std::move(classes);
  root["mAP"] = rep.map ? Json(*rep.map) : Json(nullptr);
  root["mCD"] = rep.mcd ? Json(*rep.mcd) : Json(nullptr);
  root["mot"] = rep.mot_overall ? mot_json(*rep.mot_overall) : Json(nullptr);
  return root;
}

}  // namespace icmap
