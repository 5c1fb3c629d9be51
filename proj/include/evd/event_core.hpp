#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "evd/core.hpp"

namespace evd {

// One polarity impulse. Coordinates are 0-based pixel indices, t in seconds.
struct Event {
  int x = 0;
  int y = 0;
  double t = 0.0;
  int polarity = 1;  // +1 or -1
};

// Per-polarity log-intensity step size of the sensor. The symmetric sensor
// model is the special case c_pos == c_neg.
struct ContrastThresholds {
  double c_pos = 0.2;
  double c_neg = 0.2;

  void validate() const {
    require(std::isfinite(c_pos) && c_pos > 0.0 && std::isfinite(c_neg) && c_neg > 0.0,
            "ContrastThresholds: both thresholds must be finite and > 0");
  }
};

// Time-sorted event sequence with sensor geometry. Immutable after construction.
class EventStream {
 public:
  EventStream(int width, int height, double t_begin, double t_end, std::vector<Event> events)
      : width_(width), height_(height), t_begin_(t_begin), t_end_(t_end),
        events_(std::move(events)) {
    require(width_ > 0 && height_ > 0, "EventStream: geometry must be positive");
    require(std::isfinite(t_begin_) && std::isfinite(t_end_) && t_begin_ >= 0.0 &&
                t_end_ >= t_begin_,
            "EventStream: need 0 <= t_begin <= t_end");
    double prev = t_begin_;
    for (const Event& e : events_) {
      require(e.x >= 0 && e.x < width_ && e.y >= 0 && e.y < height_,
              "EventStream: event coordinates out of geometry");
      require(e.polarity == 1 || e.polarity == -1, "EventStream: polarity must be +/-1");
      require(e.t >= prev, "EventStream: events must be sorted non-decreasing in t");
      require(e.t >= t_begin_ && e.t <= t_end_, "EventStream: event outside [t_begin, t_end]");
      prev = e.t;
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  double t_begin() const { return t_begin_; }
  double t_end() const { return t_end_; }
  size_t size() const { return events_.size(); }
  bool empty() const { return events_.empty(); }
  const std::vector<Event>& events() const { return events_; }
  auto begin() const { return events_.begin(); }
  auto end() const { return events_.end(); }

  // First event with t >= t0 (events are sorted by t).
  std::vector<Event>::const_iterator lower_bound(double t0) const {
    return std::lower_bound(events_.begin(), events_.end(), t0,
                            [](const Event& e, double t) { return e.t < t; });
  }

 private:
  int width_, height_;
  double t_begin_, t_end_;
  std::vector<Event> events_;
};

// Signed brightness change c_pos*N+ - c_neg*N- at one pixel over the half-open
// window [t0, t1). Adjacent windows therefore partition a stream exactly.
inline double integrate_pixel(const EventStream& stream, int x, int y, double t0, double t1,
                              const ContrastThresholds& th) {
  th.validate();
  require(x >= 0 && x < stream.width() && y >= 0 && y < stream.height(),
          "integrate_pixel: pixel out of bounds");
  require(t0 <= t1, "integrate_pixel: need t0 <= t1");
  long npos = 0, nneg = 0;
  for (auto it = stream.lower_bound(t0); it != stream.end() && it->t < t1; ++it) {
    if (it->x != x || it->y != y) continue;
    if (it->polarity > 0)
      ++npos;
    else
      ++nneg;
  }
  return th.c_pos * static_cast<double>(npos) - th.c_neg * static_cast<double>(nneg);
}

namespace detail {

// Emits the threshold crossings of one piecewise-linear log-intensity segment.
// The reference level advances by exactly one threshold per event, so the
// residual |l(t) - l_ref| stays below max(c_pos, c_neg) at segment boundaries.
inline void emit_segment_events(double ta, double tb, double la, double lb, double& l_ref,
                                const ContrastThresholds& th, int x, int y,
                                std::vector<Event>& out) {
  if (lb > la) {
    while (l_ref + th.c_pos <= lb) {
      const double level = l_ref + th.c_pos;
      const double tc = ta + (level - la) / (lb - la) * (tb - ta);
      out.push_back(Event{x, y, std::min(tc, tb), +1});
      l_ref = level;
    }
  } else if (lb < la) {
    while (l_ref - th.c_neg >= lb) {
      const double level = l_ref - th.c_neg;
      const double tc = ta + (level - la) / (lb - la) * (tb - ta);
      out.push_back(Event{x, y, std::min(tc, tb), -1});
      l_ref = level;
    }
  }
}

}  // namespace detail

// Frame sequence -> event stream under the linear-in-log generation model.
// Log intensity l(t) = log(L(t) + log_eps) is interpolated linearly between
// frames; a +1 (-1) event is emitted whenever l crosses the reference level
// plus c_pos (minus c_neg), at the interpolated crossing time. Output is
// sorted by time with row-major pixel order breaking ties, which makes the
// result reproducible bit for bit.
inline EventStream simulate_events(const FrameSequence& frames, const ContrastThresholds& th,
                                   double log_eps = 1e-3) {
  th.validate();
  require(std::isfinite(log_eps) && log_eps > 0.0, "simulate_events: log_eps must be > 0");
  require(frames.size() >= 2, "simulate_events: need at least 2 frames");
  const Frame& first = frames[0];
  require(first.channels() == 1, "simulate_events: frames must be grayscale");
  for (size_t i = 0; i < frames.size(); ++i) {
    const Frame& f = frames[i];
    require(f.width() == first.width() && f.height() == first.height() && f.channels() == 1,
            "simulate_events: frame geometry mismatch");
    require(f.values.all_finite(), "simulate_events: non-finite frame values");
    for (double v : f.values.data())
      require(v >= 0.0, "simulate_events: negative intensity");
    if (i > 0)
      require(f.timestamp > frames[i - 1].timestamp,
              "simulate_events: timestamps must be strictly increasing");
  }

  const int w = first.width(), h = first.height();
  std::vector<Event> all;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double l_ref = std::log(frames[0].at(y, x) + log_eps);
      double la = l_ref;
      for (size_t k = 1; k < frames.size(); ++k) {
        const double lb = std::log(frames[k].at(y, x) + log_eps);
        detail::emit_segment_events(frames[k - 1].timestamp, frames[k].timestamp, la, lb,
                                    l_ref, th, x, y, all);
        la = lb;
      }
    }
  }
  // Stable sort keeps each pixel's chronological order when crossing times
  // collapse to the same double.
  std::stable_sort(all.begin(), all.end(), [w](const Event& a, const Event& b) {
    if (a.t != b.t) return a.t < b.t;
    return a.y * w + a.x < b.y * w + b.x;
  });
  return EventStream(w, h, frames.frames.front().timestamp, frames.frames.back().timestamp,
                     std::move(all));
}

}  // namespace evd
