#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "evd/core.hpp"

namespace evd {

// Analytic scene with exact ground-truth frames, flow and tracks. Pixel
// (x, y) sits at integer coordinates; rotation is about the image center
// ((W-1)/2, (H-1)/2). Intensities stay inside [0.05, 0.95] so log-domain
// integration is well conditioned.
struct SceneSpec {
  enum class Kind { translating_gaussian, rotating_checkerboard, sinusoidal_grating_on_curved_path };

  Kind kind = Kind::translating_gaussian;
  int width = 64, height = 64;
  double duration = 0.5;

  // motion
  double velocity_x = 16.0, velocity_y = 8.0;  // px/s (translation)
  double angular_rate = 0.6;                  // rad/s (rotation)
  double path_amp_x = 5.0, path_amp_y = 3.0;   // px (curved path)
  double path_freq = 0.5;                      // Hz (curved path)

  // texture. Periods stay above the matcher's default search window so a
  // pattern never aliases onto its own translate.
  double sigma = 5.0;           // gaussian blob
  double checker_size = 16.0;   // px per square
  double grating_fx = 1.0 / 20.0, grating_fy = 1.0 / 26.0;  // cycles/px
  double base = 0.1, amplitude = 0.8;

  double center_x() const { return (width - 1) / 2.0; }
  double center_y() const { return (height - 1) / 2.0; }

  void validate() const {
    require(width > 0 && height > 0, "SceneSpec: geometry must be positive");
    require(duration > 0.0, "SceneSpec: duration must be positive");
  }

  // Translation-like scenes share a texture-offset decomposition.
  std::pair<double, double> offset(double t) const {
    switch (kind) {
      case Kind::translating_gaussian:
        return {velocity_x * t, velocity_y * t};
      case Kind::sinusoidal_grating_on_curved_path:
        return {path_amp_x * std::sin(2.0 * M_PI * path_freq * t),
                path_amp_y * (1.0 - std::cos(2.0 * M_PI * path_freq * t))};
      default:
        return {0.0, 0.0};
    }
  }
};

namespace detail {

inline double checker_texture(const SceneSpec& s, double u, double v) {
  const long cu = static_cast<long>(std::floor(u / s.checker_size));
  const long cv = static_cast<long>(std::floor(v / s.checker_size));
  const bool odd = ((cu + cv) & 1L) != 0;
  return odd ? s.base + s.amplitude : s.base + 0.05 * s.amplitude;
}

inline double scene_value(const SceneSpec& s, double x, double y, double t) {
  switch (s.kind) {
    case SceneSpec::Kind::translating_gaussian: {
      const auto [ox, oy] = s.offset(t);
      const double dx = x - s.center_x() - ox;
      const double dy = y - s.center_y() - oy;
      return s.base + s.amplitude * std::exp(-(dx * dx + dy * dy) / (2.0 * s.sigma * s.sigma));
    }
    case SceneSpec::Kind::rotating_checkerboard: {
      const double a = -s.angular_rate * t;  // texture-space position of (x, y)
      const double c = std::cos(a), sn = std::sin(a);
      const double rx = x - s.center_x(), ry = y - s.center_y();
      const double u = c * rx - sn * ry + s.center_x();
      const double v = sn * rx + c * ry + s.center_y();
      return checker_texture(s, u, v);
    }
    case SceneSpec::Kind::sinusoidal_grating_on_curved_path: {
      // Product of the two axis gratings; the 2D structure pins both motion
      // components, which a single 1D grating cannot.
      const auto [ox, oy] = s.offset(t);
      const double px = 2.0 * M_PI * s.grating_fx * (x - ox);
      const double py = 2.0 * M_PI * s.grating_fy * (y - oy);
      return 0.5 + (s.amplitude / 2.0 - 0.05) * std::sin(px) * std::sin(py);
    }
  }
  return 0.0;
}

}  // namespace detail

// Closed-form frame at time t. The gaussian and grating evaluate exactly at
// pixel centers; the checkerboard uses 4x supersampling to tame aliasing on
// its hard edges, which are the deliberate hard case for flow.
inline Frame render_scene(const SceneSpec& spec, double t) {
  spec.validate();
  require(t >= 0.0 && t <= spec.duration, "render_scene: time outside duration");
  Frame f(spec.height, spec.width, 1, 0.0, t);
  const bool supersample = spec.kind == SceneSpec::Kind::rotating_checkerboard;
  for (int y = 0; y < spec.height; ++y)
    for (int x = 0; x < spec.width; ++x) {
      if (supersample) {
        double sum = 0.0;
        for (double dy : {-0.25, 0.25})
          for (double dx : {-0.25, 0.25})
            sum += detail::scene_value(spec, x + dx, y + dy, t);
        f.at(y, x) = sum / 4.0;
      } else {
        f.at(y, x) = detail::scene_value(spec, x, y, t);
      }
    }
  return f;
}

inline FrameSequence render(const SceneSpec& spec, const std::vector<double>& times) {
  FrameSequence seq;
  for (double t : times) seq.frames.push_back(render_scene(spec, t));
  return seq;
}

// Track of the material point sitting at (x, y) at time t0, evaluated at t.
inline std::pair<double, double> track_point(const SceneSpec& spec, double x, double y,
                                             double t0, double t) {
  if (spec.kind == SceneSpec::Kind::rotating_checkerboard) {
    const double a = spec.angular_rate * (t - t0);
    const double c = std::cos(a), sn = std::sin(a);
    const double rx = x - spec.center_x(), ry = y - spec.center_y();
    return {c * rx - sn * ry + spec.center_x(), sn * rx + c * ry + spec.center_y()};
  }
  const auto [ox0, oy0] = spec.offset(t0);
  const auto [ox1, oy1] = spec.offset(t);
  return {x + (ox1 - ox0), y + (oy1 - oy0)};
}

// Dense displacement of every pixel from its position at t0 to time t.
inline GridD ground_truth_flow(const SceneSpec& spec, double t0, double t) {
  spec.validate();
  GridD flow(spec.height, spec.width, 2, 0.0);
  for (int y = 0; y < spec.height; ++y)
    for (int x = 0; x < spec.width; ++x) {
      const auto [px, py] = track_point(spec, x, y, t0, t);
      flow(y, x, 0) = px - x;
      flow(y, x, 1) = py - y;
    }
  return flow;
}

struct TrackSamples {
  std::vector<std::pair<int, int>> pixels;
  std::vector<double> times;
  std::vector<std::pair<double, double>> positions;  // [pixel][time] row-major

  const std::pair<double, double>& at(size_t pixel, size_t time) const {
    return positions[pixel * times.size() + time];
  }
};

// Trajectory samples anchored at times.front().
inline TrackSamples ground_truth_tracks(const SceneSpec& spec,
                                        const std::vector<std::pair<int, int>>& pixels,
                                        const std::vector<double>& times) {
  spec.validate();
  require(!times.empty(), "ground_truth_tracks: no sample times");
  TrackSamples out;
  out.pixels = pixels;
  out.times = times;
  out.positions.reserve(pixels.size() * times.size());
  for (const auto& [x, y] : pixels)
    for (double t : times)
      out.positions.push_back(track_point(spec, x, y, times.front(), t));
  return out;
}

// The three scenes used by the verification suites.
inline SceneSpec scene_translating_gaussian() {
  SceneSpec s;
  s.kind = SceneSpec::Kind::translating_gaussian;
  return s;
}

inline SceneSpec scene_rotating_checkerboard() {
  SceneSpec s;
  s.kind = SceneSpec::Kind::rotating_checkerboard;
  return s;
}

inline SceneSpec scene_grating_curved_path() {
  SceneSpec s;
  s.kind = SceneSpec::Kind::sinusoidal_grating_on_curved_path;
  return s;
}

inline std::vector<SceneSpec> default_scenes() {
  return {scene_translating_gaussian(), scene_rotating_checkerboard(),
          scene_grating_curved_path()};
}

inline std::string scene_kind_name(SceneSpec::Kind k) {
  switch (k) {
    case SceneSpec::Kind::translating_gaussian: return "translating_gaussian";
    case SceneSpec::Kind::rotating_checkerboard: return "rotating_checkerboard";
    case SceneSpec::Kind::sinusoidal_grating_on_curved_path:
      return "sinusoidal_grating_on_curved_path";
  }
  return "unknown";
}

inline SceneSpec::Kind scene_kind_from_name(const std::string& name) {
  if (name == "translating_gaussian") return SceneSpec::Kind::translating_gaussian;
  if (name == "rotating_checkerboard") return SceneSpec::Kind::rotating_checkerboard;
  if (name == "sinusoidal_grating_on_curved_path")
    return SceneSpec::Kind::sinusoidal_grating_on_curved_path;
  throw InputError("unknown scene kind: " + name);
}

}  // namespace evd
