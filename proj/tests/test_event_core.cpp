#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "evd/event_core.hpp"

using namespace evd;
using Catch::Approx;

namespace {

EventStream make_stream(int w, int h, double t0, double t1, std::vector<Event> ev) {
  return EventStream(w, h, t0, t1, std::move(ev));
}

FrameSequence single_pixel_ramp(double l0, double delta, int steps, double log_eps) {
  // Intensity chosen so log(L + eps) ramps linearly from l0 by delta.
  FrameSequence seq;
  for (int i = 0; i <= steps; ++i) {
    const double t = static_cast<double>(i) / steps;
    Frame f(1, 1, 1, 0.0, t);
    f.at(0, 0) = std::exp(l0 + delta * t) - log_eps;
    seq.frames.push_back(f);
  }
  return seq;
}

FrameSequence random_video(std::mt19937& rng, int w, int h, int nframes) {
  std::uniform_real_distribution<double> u(0.05, 0.95);
  std::uniform_real_distribution<double> step(-0.25, 0.25);
  FrameSequence seq;
  Frame f(h, w, 1, 0.0, 0.0);
  for (double& v : f.values.data()) v = u(rng);
  seq.frames.push_back(f);
  for (int i = 1; i < nframes; ++i) {
    Frame g = seq.frames.back();
    g.timestamp = static_cast<double>(i) / (nframes - 1);
    for (double& v : g.values.data()) v = std::clamp(v * std::exp(step(rng)), 0.02, 0.98);
    seq.frames.push_back(g);
  }
  return seq;
}

}  // namespace

TEST_CASE("integrate_pixel on an empty window is zero", "[event_core]") {
  auto s = make_stream(4, 4, 0.0, 1.0, {});
  CHECK(integrate_pixel(s, 1, 1, 0.0, 1.0, {0.2, 0.2}) == 0.0);
}

TEST_CASE("integrate_pixel counts signed thresholds", "[event_core]") {
  auto s = make_stream(4, 4, 0.0, 1.0,
                       {{1, 2, 0.1, +1}, {1, 2, 0.2, +1}, {1, 2, 0.3, -1}, {1, 2, 0.4, +1},
                        {2, 2, 0.5, -1}});
  // 3 positive + 1 negative at (1,2) with c=0.2 -> 0.4
  CHECK(integrate_pixel(s, 1, 2, 0.0, 1.0, {0.2, 0.2}) == Approx(0.4).margin(1e-15));
}

TEST_CASE("integrate_pixel with asymmetric thresholds", "[event_core]") {
  std::vector<Event> ev;
  for (int i = 0; i < 2; ++i) ev.push_back({0, 0, 0.1 + 0.01 * i, +1});
  for (int i = 0; i < 3; ++i) ev.push_back({0, 0, 0.2 + 0.01 * i, -1});
  auto s = make_stream(2, 2, 0.0, 1.0, ev);
  // 0.25*2 - 0.20*3 = -0.10
  CHECK(integrate_pixel(s, 0, 0, 0.0, 1.0, {0.25, 0.20}) == Approx(-0.10).margin(1e-15));
}

TEST_CASE("integrate_pixel window is half-open", "[event_core]") {
  auto s = make_stream(2, 2, 0.0, 1.0, {{0, 0, 0.5, +1}});
  const ContrastThresholds th{0.2, 0.2};
  CHECK(integrate_pixel(s, 0, 0, 0.0, 0.5, th) == 0.0);   // event at t1 excluded
  CHECK(integrate_pixel(s, 0, 0, 0.5, 1.0, th) == 0.2);   // included at t0
  // Adjacent windows partition the stream.
  CHECK(integrate_pixel(s, 0, 0, 0.0, 0.5, th) + integrate_pixel(s, 0, 0, 0.5, 1.0, th) ==
        integrate_pixel(s, 0, 0, 0.0, 1.0, th));
}

TEST_CASE("integrate_pixel rejects bad arguments", "[event_core]") {
  auto s = make_stream(4, 4, 0.0, 1.0, {});
  CHECK_THROWS_AS(integrate_pixel(s, 4, 0, 0.0, 1.0, {0.2, 0.2}), InputError);
  CHECK_THROWS_AS(integrate_pixel(s, 0, -1, 0.0, 1.0, {0.2, 0.2}), InputError);
  CHECK_THROWS_AS(integrate_pixel(s, 0, 0, 1.0, 0.0, {0.2, 0.2}), InputError);
  CHECK_THROWS_AS(integrate_pixel(s, 0, 0, 0.0, 1.0, {0.0, 0.2}), InputError);
}

TEST_CASE("EventStream validates invariants", "[event_core]") {
  CHECK_THROWS_AS(make_stream(2, 2, 0.0, 1.0, {{5, 0, 0.5, +1}}), InputError);
  CHECK_THROWS_AS(make_stream(2, 2, 0.0, 1.0, {{0, 0, 0.5, 2}}), InputError);
  CHECK_THROWS_AS(make_stream(2, 2, 0.0, 1.0, {{0, 0, 0.9, 1}, {0, 0, 0.1, 1}}), InputError);
  CHECK_THROWS_AS(make_stream(2, 2, 0.0, 1.0, {{0, 0, 1.5, 1}}), InputError);
}

TEST_CASE("simulate_events of a constant video is empty", "[event_core]") {
  FrameSequence seq;
  for (int i = 0; i < 3; ++i) seq.frames.push_back(Frame(4, 4, 1, 0.5, 0.5 * i));
  auto s = simulate_events(seq, {0.2, 0.2});
  CHECK(s.empty());
  CHECK(s.t_begin() == 0.0);
  CHECK(s.t_end() == 1.0);
}

TEST_CASE("simulate_events of a linear log ramp crosses at analytic times", "[event_core]") {
  const double log_eps = 1e-3;
  // log intensity ramps by +0.75 over [0, 1]; c_pos = 0.2 -> crossings where
  // 0.75 t = 0.2 k, k = 1..3.
  auto seq = single_pixel_ramp(std::log(0.3), 0.75, 10, log_eps);
  auto s = simulate_events(seq, {0.2, 0.2}, log_eps);
  REQUIRE(s.size() == 3);
  int k = 1;
  for (const Event& e : s) {
    CHECK(e.polarity == +1);
    CHECK(e.t == Approx(0.2 * k / 0.75).epsilon(1e-9));
    ++k;
  }
}

TEST_CASE("simulate_events validates input", "[event_core]") {
  FrameSequence seq;
  seq.frames.push_back(Frame(2, 2, 1, 0.5, 0.0));
  CHECK_THROWS_AS(simulate_events(seq, {0.2, 0.2}), InputError);  // < 2 frames
  seq.frames.push_back(Frame(2, 2, 1, 0.5, 0.0));
  CHECK_THROWS_AS(simulate_events(seq, {0.2, 0.2}), InputError);  // non-increasing t
  seq.frames.back().timestamp = 1.0;
  seq.frames.push_back(Frame(2, 3, 1, 0.5, 2.0));
  CHECK_THROWS_AS(simulate_events(seq, {0.2, 0.2}), InputError);  // geometry mismatch
}

TEST_CASE("round trip: simulate then integrate stays within one threshold", "[event_core]") {
  std::mt19937 rng(7);
  const double log_eps = 1e-3;
  for (int trial = 0; trial < 5; ++trial) {
    const ContrastThresholds th{0.1 + 0.05 * trial, 0.2};
    auto video = random_video(rng, 6, 5, 12);
    auto s = simulate_events(video, th, log_eps);
    for (int y = 0; y < 5; ++y)
      for (int x = 0; x < 6; ++x) {
        const double l0 = std::log(video.frames.front().at(y, x) + log_eps);
        const double l1 = std::log(video.frames.back().at(y, x) + log_eps);
        const double e = integrate_pixel(s, x, y, s.t_begin(), s.t_end() + 1e-9, th);
        CHECK(std::abs(l1 - l0 - e) < std::max(th.c_pos, th.c_neg) + 1e-9);
      }
  }
}

TEST_CASE("halving thresholds never loses events", "[event_core]") {
  std::mt19937 rng(11);
  auto video = random_video(rng, 5, 4, 10);
  const ContrastThresholds big{0.3, 0.25}, small{0.15, 0.125};
  auto sb = simulate_events(video, big);
  auto ss = simulate_events(video, small);
  Grid<int> cb(4, 5, 1, 0), cs(4, 5, 1, 0);
  for (const Event& e : sb) ++cb(e.y, e.x);
  for (const Event& e : ss) ++cs(e.y, e.x);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 5; ++x) CHECK(cs(y, x) >= cb(y, x));
}

TEST_CASE("simulation is deterministic and sorted with row-major ties", "[event_core]") {
  std::mt19937 rng(3);
  auto video = random_video(rng, 6, 6, 8);
  auto a = simulate_events(video, {0.2, 0.2});
  auto b = simulate_events(video, {0.2, 0.2});
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a.events()[i].t == b.events()[i].t);
    CHECK(a.events()[i].x == b.events()[i].x);
    CHECK(a.events()[i].y == b.events()[i].y);
    CHECK(a.events()[i].polarity == b.events()[i].polarity);
  }
  for (size_t i = 1; i < a.size(); ++i) {
    const Event &p = a.events()[i - 1], &q = a.events()[i];
    const bool ordered = p.t < q.t || (p.t == q.t && p.y * 6 + p.x <= q.y * 6 + q.x);
    CHECK(ordered);
  }
}

TEST_CASE("a brightening pixel emits only positive events", "[event_core]") {
  FrameSequence seq;
  for (int i = 0; i <= 10; ++i) {
    Frame f(1, 1, 1, 0.1 + 0.08 * i, 0.1 * i);
    seq.frames.push_back(f);
  }
  auto s = simulate_events(seq, {0.15, 0.15});
  CHECK(s.size() > 0);
  for (const Event& e : s) CHECK(e.polarity == +1);
}
