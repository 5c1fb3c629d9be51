#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "evd/voxelizer.hpp"

using namespace evd;
using Catch::Approx;

namespace {

EventStream random_stream(std::mt19937& rng, int w, int h, int n, double t0, double t1) {
  std::uniform_real_distribution<double> ut(t0, t1 - 1e-9);
  std::uniform_int_distribution<int> ux(0, w - 1), uy(0, h - 1), up(0, 1);
  std::vector<Event> ev(n);
  for (Event& e : ev)
    e = {ux(rng), uy(rng), ut(rng), up(rng) ? 1 : -1};
  std::sort(ev.begin(), ev.end(), [](const Event& a, const Event& b) { return a.t < b.t; });
  return EventStream(w, h, t0, t1, std::move(ev));
}

}  // namespace

TEST_CASE("empty stream builds an all-zero volume", "[voxelizer]") {
  EventStream s(3, 2, 0.0, 1.0, {});
  auto v = build_volume(s, 0.0, 1.0, 5, true);
  CHECK(v.planes == 2);
  CHECK(v.bins == 5);
  for (double d : v.data) CHECK(d == 0.0);
}

TEST_CASE("event at a bin center lands with weight one", "[voxelizer]") {
  // 5 bins over [0,1]: centers at t = k/4. Event at t = 0.5 -> bin 2 exactly.
  EventStream s(2, 2, 0.0, 1.0, {{1, 0, 0.5, +1}});
  auto v = build_volume(s, 0.0, 1.0, 5, true);
  CHECK(v.at(0, 2, 0, 1) == 1.0);
  double total = 0.0;
  for (double d : v.data) total += d;
  CHECK(total == 1.0);
}

TEST_CASE("event midway between bins splits evenly", "[voxelizer]") {
  // Bin coordinate u = t/(1)*4; t = 0.625 -> u = 2.5 between bins 2 and 3.
  EventStream s(2, 2, 0.0, 1.0, {{0, 1, 0.625, +1}});
  auto v = build_volume(s, 0.0, 1.0, 5, true);
  CHECK(v.at(0, 2, 1, 0) == Approx(0.5).margin(1e-15));
  CHECK(v.at(0, 3, 1, 0) == Approx(0.5).margin(1e-15));
}

TEST_CASE("events at t1 are excluded, single-bin volumes accumulate all", "[voxelizer]") {
  EventStream s(2, 2, 0.0, 2.0, {{0, 0, 0.2, +1}, {0, 0, 1.0, +1}, {0, 0, 1.5, -1}});
  auto v = build_volume(s, 0.0, 1.0, 4, false);
  double total = 0.0;
  for (double d : v.data) total += d;
  CHECK(total == 1.0);  // only the 0.2 event, signed plane

  auto one = build_volume(s, 0.0, 2.0, 1, false);
  CHECK(one.at(0, 0, 0, 0) == 1.0);  // +1 +1 -1
}

TEST_CASE("build_volume rejects an empty window", "[voxelizer]") {
  EventStream s(2, 2, 0.0, 1.0, {});
  CHECK_THROWS_AS(build_volume(s, 0.5, 0.5, 4, true), InputError);
  CHECK_THROWS_AS(build_volume(s, 0.0, 1.0, 0, true), InputError);
}

TEST_CASE("mass conservation per polarity plane", "[voxelizer]") {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    auto s = random_stream(rng, 4, 3, 50, 0.0, 1.0);
    auto v = build_volume(s, 0.0, 1.0, 7, true);
    long npos = 0, nneg = 0;
    for (const Event& e : s) (e.polarity > 0 ? npos : nneg)++;
    double ppos = 0.0, pneg = 0.0;
    for (int b = 0; b < v.bins; ++b)
      for (int y = 0; y < v.height; ++y)
        for (int x = 0; x < v.width; ++x) {
          ppos += v.at(0, b, y, x);
          pneg += v.at(1, b, y, x);
        }
    CHECK(ppos == Approx(static_cast<double>(npos)).epsilon(1e-9));
    CHECK(pneg == Approx(static_cast<double>(nneg)).epsilon(1e-9));
  }
}

TEST_CASE("volume construction is linear over disjoint streams", "[voxelizer]") {
  std::mt19937 rng(9);
  auto a = random_stream(rng, 4, 4, 30, 0.0, 0.5);
  auto b = random_stream(rng, 4, 4, 30, 0.5, 1.0);
  std::vector<Event> merged(a.events());
  merged.insert(merged.end(), b.begin(), b.end());
  EventStream ab(4, 4, 0.0, 1.0, std::move(merged));

  auto va = build_volume(a, 0.0, 1.0, 6, true);
  auto vb = build_volume(b, 0.0, 1.0, 6, true);
  auto vab = build_volume(ab, 0.0, 1.0, 6, true);
  for (size_t i = 0; i < vab.data.size(); ++i)
    CHECK(vab.data[i] == Approx(va.data[i] + vb.data[i]).margin(1e-12));
}

TEST_CASE("temporal shift covariance", "[voxelizer]") {
  std::mt19937 rng(13);
  auto s = random_stream(rng, 3, 3, 40, 0.0, 1.0);
  const double delta = 2.5;
  std::vector<Event> shifted(s.events());
  for (Event& e : shifted) e.t += delta;
  EventStream s2(3, 3, delta, 1.0 + delta, std::move(shifted));
  auto v1 = build_volume(s, 0.0, 1.0, 8, true);
  auto v2 = build_volume(s2, delta, 1.0 + delta, 8, true);
  for (size_t i = 0; i < v1.data.size(); ++i)
    CHECK(v1.data[i] == Approx(v2.data[i]).margin(1e-9));
}

TEST_CASE("normalize_volume scales to unit max-abs and keeps zeros", "[voxelizer]") {
  EventVolume z;
  z.planes = 1;
  z.bins = 2;
  z.height = 2;
  z.width = 2;
  z.data.assign(8, 0.0);
  auto zn = normalize_volume(z);
  for (double d : zn.data) CHECK(d == 0.0);

  EventVolume v = z;
  v.data = {1.0, -4.0, 2.0, 0.0, 0.5, 0.25, -1.0, 3.0};
  auto n = normalize_volume(v);
  for (size_t i = 0; i < v.data.size(); ++i) CHECK(n.data[i] == v.data[i] / 4.0);

  std::mt19937 rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    auto s = random_stream(rng, 4, 4, 25, 0.0, 1.0);
    auto nv = normalize_volume(build_volume(s, 0.0, 1.0, 5, trial % 2 == 0));
    double m = 0.0;
    for (double d : nv.data) m = std::max(m, std::abs(d));
    CHECK(m == 1.0);
  }
}
