#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "evd/core.hpp"
#include "evd/event_core.hpp"

namespace evd {

struct ContrastEstimate {
  ContrastThresholds thresholds;
  bool pos_defaulted = false;  // c_pos could not be identified and was copied
  bool neg_defaulted = false;  // from the solvable side (and vice versa)
  long pixels_used = 0;
};

namespace detail {

// Left-fold of signed threshold steps per pixel in stream order; the same
// fold order as integrate_pixel, so incremental sweeps reproduce it bitwise.
inline void accumulate_events(GridD& e, std::vector<Event>::const_iterator begin,
                              std::vector<Event>::const_iterator end,
                              const ContrastThresholds& th) {
  for (auto it = begin; it != end; ++it)
    e(it->y, it->x) += (it->polarity > 0) ? th.c_pos : -th.c_neg;
}

inline Frame integrated_frame(const Frame& initial, const GridD& e, double log_eps, double t) {
  Frame out(initial.height(), initial.width(), 1, 0.0, t);
  for (int y = 0; y < initial.height(); ++y)
    for (int x = 0; x < initial.width(); ++x) {
      // E == 0 short-circuits so a pixel without events reproduces the
      // initial value exactly instead of round-tripping through +/- log_eps.
      const double ev = e(y, x);
      const double v =
          ev == 0.0 ? initial.at(y, x) : (initial.at(y, x) + log_eps) * std::exp(ev) - log_eps;
      out.at(y, x) = clamp01(v);
    }
  return out;
}

}  // namespace detail

// Direct integration decode L(t) = (L(0) + eps) * exp(c * E) - eps, clamped
// to [0, 1]. Events are counted over the half-open window [t_begin, t).
inline Frame direct_integration(const Frame& initial, const EventStream& stream, double t,
                                const ContrastThresholds& th, double log_eps = 1e-3) {
  th.validate();
  require(initial.width() == stream.width() && initial.height() == stream.height(),
          "direct_integration: frame geometry does not match stream");
  require(initial.channels() == 1, "direct_integration: initial frame must be grayscale");
  require(t >= stream.t_begin() && t <= stream.t_end(),
          "direct_integration: query time outside stream span");
  GridD e(initial.height(), initial.width(), 1, 0.0);
  auto end = stream.lower_bound(t);  // [t_begin, t)
  detail::accumulate_events(e, stream.begin(), end, th);
  return detail::integrated_frame(initial, e, log_eps, t);
}

// Batched direct integration at the given query times. One sweep over the
// stream; results are bitwise identical to per-time direct_integration.
inline FrameSequence latent_frames(const Frame& initial, const EventStream& stream,
                                   const std::vector<double>& times,
                                   const ContrastThresholds& th, double log_eps = 1e-3) {
  th.validate();
  require(initial.width() == stream.width() && initial.height() == stream.height(),
          "latent_frames: frame geometry does not match stream");
  require(initial.channels() == 1, "latent_frames: initial frame must be grayscale");
  for (double t : times)
    require(t >= stream.t_begin() && t <= stream.t_end(),
            "latent_frames: query time outside stream span");

  std::vector<size_t> order(times.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return times[a] < times[b]; });

  FrameSequence out;
  out.frames.resize(times.size());
  GridD e(initial.height(), initial.width(), 1, 0.0);
  auto it = stream.begin();
  for (size_t k : order) {
    auto stop = stream.lower_bound(times[k]);
    detail::accumulate_events(e, it, stop, th);
    it = stop;
    out.frames[k] = detail::integrated_frame(initial, e, log_eps, times[k]);
  }
  return out;
}

// Least-squares contrast calibration from frame pairs and the event counts
// between their timestamps. Model per pixel: dlog(L + eps) = c_pos*N+ - c_neg*N-.
// Pixels without events carry no information and are excluded. When one
// polarity is absent (or the 2x2 normal matrix is singular) the solvable
// component is fitted and the other threshold defaults to it, flagged in the
// result.
inline ContrastEstimate estimate_contrast(
    const std::vector<std::pair<Frame, Frame>>& frame_pairs, const EventStream& stream,
    double log_eps = 1e-3) {
  require(!frame_pairs.empty(), "estimate_contrast: need at least one frame pair");

  double a11 = 0.0, a12 = 0.0, a22 = 0.0;  // normal matrix of (N+, -N-)
  double b1 = 0.0, b2 = 0.0;
  double sd = 0.0, sdy = 0.0;  // scalar fallback on (N+ - N-)
  long used = 0;

  for (const auto& [fa, fb] : frame_pairs) {
    require(fa.width() == stream.width() && fa.height() == stream.height() &&
                fb.width() == stream.width() && fb.height() == stream.height(),
            "estimate_contrast: frame geometry does not match stream");
    require(fa.channels() == 1 && fb.channels() == 1,
            "estimate_contrast: frames must be grayscale");
    require(fa.timestamp < fb.timestamp, "estimate_contrast: pair timestamps must increase");

    Grid<long> npos(fa.height(), fa.width(), 1, 0), nneg(fa.height(), fa.width(), 1, 0);
    for (auto it = stream.lower_bound(fa.timestamp);
         it != stream.end() && it->t < fb.timestamp; ++it) {
      if (it->polarity > 0)
        ++npos(it->y, it->x);
      else
        ++nneg(it->y, it->x);
    }
    for (int y = 0; y < fa.height(); ++y)
      for (int x = 0; x < fa.width(); ++x) {
        const long np = npos(y, x), nn = nneg(y, x);
        if (np == 0 && nn == 0) continue;
        const double dl =
            std::log(fb.at(y, x) + log_eps) - std::log(fa.at(y, x) + log_eps);
        const double p = static_cast<double>(np), n = static_cast<double>(nn);
        a11 += p * p;
        a12 += -p * n;
        a22 += n * n;
        b1 += p * dl;
        b2 += -n * dl;
        sd += (p - n) * (p - n);
        sdy += (p - n) * dl;
        ++used;
      }
  }
  if (used == 0) throw InputError("estimate_contrast: no events in any frame pair window");

  ContrastEstimate est;
  est.pixels_used = used;
  if (a22 == 0.0) {  // no negative events anywhere
    est.thresholds.c_pos = b1 / a11;
    est.thresholds.c_neg = est.thresholds.c_pos;
    est.neg_defaulted = true;
  } else if (a11 == 0.0) {
    est.thresholds.c_neg = b2 / a22;
    est.thresholds.c_pos = est.thresholds.c_neg;
    est.pos_defaulted = true;
  } else {
    const double det = a11 * a22 - a12 * a12;
    if (det > 1e-12 * a11 * a22) {
      est.thresholds.c_pos = (a22 * b1 - a12 * b2) / det;
      est.thresholds.c_neg = (a11 * b2 - a12 * b1) / det;
    } else {
      // Collinear counts: only a common scalar threshold is identifiable.
      if (sd == 0.0) throw NumericalError("estimate_contrast: degenerate event counts");
      est.thresholds.c_pos = est.thresholds.c_neg = sdy / sd;
      est.pos_defaulted = est.neg_defaulted = true;
    }
  }
  return est;
}

}  // namespace evd
