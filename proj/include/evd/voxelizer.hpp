#pragma once

#include <cmath>
#include <vector>

#include "evd/core.hpp"
#include "evd/event_core.hpp"

namespace evd {

// Spatiotemporal event histogram with a bilinear kernel along time.
// data is laid out plane-major: [p][b][y][x] with p in {0, 1}. When polarity
// separated, plane 0 holds magnitudes from +1 events and plane 1 from -1
// events; otherwise a single signed plane.
struct EventVolume {
  int planes = 1;  // P
  int bins = 1;    // B
  int height = 0;
  int width = 0;
  bool polarity_separated = false;
  double t0 = 0.0, t1 = 0.0;
  std::vector<double> data;

  double& at(int p, int b, int y, int x) {
    return data[((static_cast<size_t>(p) * bins + b) * height + y) * width + x];
  }
  const double& at(int p, int b, int y, int x) const {
    return data[((static_cast<size_t>(p) * bins + b) * height + y) * width + x];
  }
  size_t size() const { return data.size(); }
};

// Bins the events of [t0, t1) into B temporal channels. An event at time t
// lands at bin coordinate (t - t0)/(t1 - t0) * (B - 1) and splits its unit
// mass between the two neighboring bins with weights 1-f and f. Coordinates
// that fall outside [0, B-1] by floating error clamp to the edge bin so no
// mass is lost.
inline EventVolume build_volume(const EventStream& stream, double t0, double t1, int bins,
                                bool polarity_separated) {
  require(std::isfinite(t0) && std::isfinite(t1) && t1 > t0,
          "build_volume: window duration must be positive");
  require(bins >= 1, "build_volume: bins must be >= 1");

  EventVolume vol;
  vol.planes = polarity_separated ? 2 : 1;
  vol.bins = bins;
  vol.height = stream.height();
  vol.width = stream.width();
  vol.polarity_separated = polarity_separated;
  vol.t0 = t0;
  vol.t1 = t1;
  vol.data.assign(static_cast<size_t>(vol.planes) * bins * vol.height * vol.width, 0.0);

  const double scale = (bins == 1) ? 0.0 : (bins - 1) / (t1 - t0);
  for (auto it = stream.lower_bound(t0); it != stream.end() && it->t < t1; ++it) {
    double u = (it->t - t0) * scale;
    if (u < 0.0) u = 0.0;
    if (u > bins - 1) u = bins - 1;
    int b0 = static_cast<int>(std::floor(u));
    if (b0 > bins - 2) b0 = bins - 1;  // u == B-1 exactly
    const double f = u - b0;
    const int plane = polarity_separated ? (it->polarity > 0 ? 0 : 1) : 0;
    const double sign = polarity_separated ? 1.0 : static_cast<double>(it->polarity);
    vol.at(plane, b0, it->y, it->x) += sign * (1.0 - f);
    if (f > 0.0 && b0 + 1 <= bins - 1) vol.at(plane, b0 + 1, it->y, it->x) += sign * f;
  }
  return vol;
}

// Scales so the maximum absolute value becomes 1; an all-zero volume passes
// through unchanged. Motion-branch volumes are normalized, synthesis-branch
// volumes are not.
inline EventVolume normalize_volume(const EventVolume& volume) {
  double m = 0.0;
  for (double v : volume.data) m = std::max(m, std::abs(v));
  if (m == 0.0) return volume;
  EventVolume out = volume;
  for (double& v : out.data) v /= m;
  return out;
}

}  // namespace evd
