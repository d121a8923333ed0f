#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "icmap/curvefit.hpp"
#include "icmap/error.hpp"
#include "icmap/geometry.hpp"
#include "icmap/instance.hpp"
#include "icmap/mapstore.hpp"
#include "icmap/metrics.hpp"
#include "icmap/synth.hpp"

namespace icmap {

struct SweepRow {
  double s = 0.0;
  double cd_divider = 0.0;
  double cd_boundary = 0.0;
};

/// Parses "start:stop:step" into an inclusive grid. Rounding keeps 0:2:0.1 at 21 values.
inline std::vector<double> parse_s_grid(const std::string& spec) {
  std::vector<double> parts;
  std::size_t pos = 0;
  for (int k = 0; k < 3; ++k) {
    const std::size_t end = spec.find(':', pos);
    if ((k < 2) == (end == std::string::npos)) throw Error(ErrorCode::kInvalidArgument, "s grid must look like start:stop:step");
    const std::string tok = spec.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (tok.empty() || used != tok.size() || !std::isfinite(v)) {
      throw Error(ErrorCode::kInvalidArgument, "bad number '" + tok + "' in s grid");
    }
    parts.push_back(v);
    pos = end + 1;
  }
  const double start = parts[0], stop = parts[1], step = parts[2];
  if (start < 0.0 || stop < start || !(step > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "s grid needs 0 <= start <= stop and step > 0");
  }
  const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
  std::vector<double> grid;
  for (std::size_t k = 0; k < count; ++k) grid.push_back(std::round((start + static_cast<double>(k) * step) * 1e9) / 1e9);
  return grid;
}

/// Noisy sine fixture: two overlapping noisy observations of a known curve,
/// merged, compared to the curve. One curve per class with its own shape.
struct SineFixture {
  double length = 60.0;
  double overlap = 12.0;
  double spacing = 1.0;
  double sigma = 0.3;
  double divider_amplitude = 2.0;
  double divider_wavelength = 40.0;
  double boundary_amplitude = 3.0;
  double boundary_wavelength = 60.0;
  int seeds = 50;
};

namespace detail {

inline Points sine_points(double amplitude, double wavelength, double x0, double x1, double spacing) {
  Points out;
  const auto n = static_cast<std::size_t>(std::lround((x1 - x0) / spacing)) + 1;
  for (std::size_t k = 0; k < n; ++k) {
    const double x = x0 + (x1 - x0) * static_cast<double>(k) / static_cast<double>(n - 1);
    out.push_back({x, amplitude * std::sin(2.0 * std::numbers::pi * x / wavelength)});
  }
  return out;
}

inline Points with_noise(Points pts, double sigma, std::mt19937_64& rng) {
  if (sigma <= 0.0) return pts;
  std::normal_distribution<double> g(0.0, sigma);
  for (Vec2& p : pts) p = p + Vec2{g(rng), g(rng)};
  return pts;
}

inline double sine_error(const SineFixture& fx, double amplitude, double wavelength, double s, std::uint64_t seed) {
  auto rng = make_rng({seed, 0x73696e65ULL});
  const double mid = 0.5 * fx.length;
  const Points truth = sine_points(amplitude, wavelength, 0.0, fx.length, 0.1);
  const Points a = with_noise(sine_points(amplitude, wavelength, 0.0, mid + 0.5 * fx.overlap, fx.spacing), fx.sigma, rng);
  const Points b = with_noise(sine_points(amplitude, wavelength, mid - 0.5 * fx.overlap, fx.length, fx.spacing), fx.sigma, rng);
  SmoothingFitParams params;
  params.s = s;
  const Polyline merged = merge_polylines(Polyline(a), Polyline(b), params);
  const CurveRef m{merged.points(), false}, t{truth, false};
  return curve_chamfer(std::span<const CurveRef>(&m, 1), std::span<const CurveRef>(&t, 1), kCurveSampleSpacing);
}

}  // namespace detail

inline std::vector<SweepRow> sweep_fixture(const SineFixture& fx, const std::vector<double>& grid) {
  std::vector<SweepRow> rows;
  for (double s : grid) {
    if (s < 0.0) throw Error(ErrorCode::kInvalidArgument, "s values must be >= 0");
    SweepRow row{s, 0.0, 0.0};
    for (int k = 0; k < fx.seeds; ++k) {
      const auto seed = static_cast<std::uint64_t>(k);
      row.cd_divider += detail::sine_error(fx, fx.divider_amplitude, fx.divider_wavelength, s, seed);
      row.cd_boundary += detail::sine_error(fx, fx.boundary_amplitude, fx.boundary_wavelength, s, seed + 1000003);
    }
    row.cd_divider /= fx.seeds;
    row.cd_boundary /= fx.seeds;
    rows.push_back(row);
  }
  return rows;
}

/// Scene sweep: every frame's ground-truth clip of each polyline (jittered by
/// `sigma`) is merged in sequence; the result is compared to the ground truth.
inline std::vector<SweepRow> sweep_scene(const Scene& scene, const std::vector<double>& grid, double sigma,
                                         std::uint64_t seed = 0) {
  std::vector<SweepRow> rows;
  for (double s : grid) {
    if (s < 0.0) throw Error(ErrorCode::kInvalidArgument, "s values must be >= 0");
    SmoothingFitParams params;
    params.s = s;
    auto rng = detail::make_rng({seed, 0x7377656570ULL});
    GlobalMap merged;
    for (std::size_t f = 0; f < scene.frames.size(); ++f) {
      const SceneFrame& frame = scene.frames[f];
      for (const MapInstance& g : frame.gt_local) {
        if (g.is_polygon()) continue;
        MapInstance det = transformed(g, frame.ego_pose, Direction::kEgoToWorld);
        det.points = detail::with_noise(det.points, sigma, rng);
        merge_instance(merged, det, static_cast<int>(f), params);
      }
    }
    SweepRow row{s, 0.0, 0.0};
    for (ElementClass cls : {ElementClass::kDivider, ElementClass::kBoundary}) {
      std::vector<CurveRef> p, g;
      for (const auto& [id, e] : merged.entries) if (e.instance.cls == cls) p.push_back(e.instance.curve());
      for (const auto& [id, e] : scene.gt.entries) if (e.instance.cls == cls) g.push_back(e.instance.curve());
      double cd = 0.0;
      if (!g.empty()) cd = p.empty() ? kMissingClassCd : curve_chamfer(p, g, kCurveSampleSpacing);
      (cls == ElementClass::kDivider ? row.cd_divider : row.cd_boundary) = cd;
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace icmap
