#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "evd/io.hpp"
#include "evd/pipeline.hpp"
#include "evd/testbed.hpp"

using namespace evd;
using Catch::Approx;

namespace {

// Small, fast end-to-end fixture: a 32x32 translating gaussian.
struct SmallScene {
  SceneSpec spec;
  EventStream stream;
  Frame initial;

  static SmallScene make() {
    SceneSpec spec = scene_translating_gaussian();
    spec.width = 32;
    spec.height = 32;
    spec.sigma = 4.0;
    spec.velocity_x = 10.0;
    spec.velocity_y = 5.0;
    spec.duration = 0.4;
    std::vector<double> times;
    const int n = 80;
    for (int i = 0; i <= n; ++i) times.push_back(spec.duration * i / n);
    auto video = render(spec, times);
    auto stream = simulate_events(video, {0.2, 0.2});
    return SmallScene{spec, std::move(stream), video.frames.front()};
  }
};

DecompressionConfig small_config() {
  DecompressionConfig cfg;
  cfg.thresholds = ContrastThresholds{0.2, 0.2};
  cfg.anchor_count = 6;
  cfg.max_disp = 6;
  cfg.query_times = {0.0, 0.2, 0.4};
  return cfg;
}

}  // namespace

TEST_CASE("fuse blends by coverage", "[pipeline]") {
  const int w = 6, h = 5;
  Frame warp(h, w, 1, 0.8, 0.0), synth(h, w, 1, 0.2, 0.0);
  SECTION("zero coverage returns the synthesis frame exactly") {
    GridD cov(h, w, 1, 0.0);
    auto out = fuse(warp, cov, synth, 0.5, 10.0);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) CHECK(out.at(y, x) == synth.at(y, x));
  }
  SECTION("saturated coverage returns the warp frame") {
    GridD cov(h, w, 1, 4.0);
    auto out = fuse(warp, cov, synth, 0.5, 10.0);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) CHECK(out.at(y, x) == Approx(warp.at(y, x)).margin(1e-6));
  }
  SECTION("mixed coverage matches the scalar formula") {
    std::mt19937 rng(1);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    GridD cov(h, w, 1, 0.0);
    for (double& v : cov.data()) v = u(rng);
    cov(0, 0) = 0.0;
    const double c0 = 0.5, sharp = 10.0;
    auto out = fuse(warp, cov, synth, c0, sharp);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double wgt =
            cov(y, x) <= 0.0 ? 0.0 : 1.0 / (1.0 + std::exp(-sharp * (cov(y, x) - c0)));
        CHECK(out.at(y, x) ==
              Approx(wgt * warp.at(y, x) + (1 - wgt) * synth.at(y, x)).margin(1e-12));
      }
  }
  SECTION("shape mismatches are rejected") {
    GridD cov(h, w + 1, 1, 0.0);
    CHECK_THROWS_AS(fuse(warp, cov, synth, 0.5, 10.0), InputError);
  }
}

TEST_CASE("decompress reproduces the initial frame at t_begin", "[pipeline]") {
  auto scene = SmallScene::make();
  auto cfg = small_config();
  auto result = decompress(scene.initial, scene.stream, cfg);
  REQUIRE(result.queries.size() == 3);
  CHECK(psnr(result.queries[0].fused, scene.initial) >= 60.0);
  // Anchored trajectory: M(t_begin) is identically zero.
  for (double v : result.queries[0].flow.data()) CHECK(v == 0.0);
}

TEST_CASE("decompress beats the static baseline on a moving scene", "[pipeline]") {
  auto scene = SmallScene::make();
  auto cfg = small_config();
  auto result = decompress(scene.initial, scene.stream, cfg);
  auto gt = render(scene.spec, {0.4});
  const double fused = psnr(crop_border(result.queries[2].fused, 2), crop_border(gt[0], 2));
  const double baseline = psnr(crop_border(scene.initial, 2), crop_border(gt[0], 2));
  CHECK(fused > baseline);
}

TEST_CASE("recovered flow approaches the ground truth", "[pipeline]") {
  auto scene = SmallScene::make();
  auto cfg = small_config();
  auto result = decompress(scene.initial, scene.stream, cfg);
  auto truth = ground_truth_flow(scene.spec, 0.0, 0.4);
  double err2 = 0.0;
  long n = 0;
  const auto& flow = result.queries[2].flow;
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) {
      if (!result.anchor_valid(y, x)) continue;
      const double ex = flow(y, x, 0) - truth(y, x, 0);
      const double ey = flow(y, x, 1) - truth(y, x, 1);
      err2 += ex * ex + ey * ey;
      ++n;
    }
  REQUIRE(n > 50);
  CHECK(std::sqrt(err2 / n) < 1.0);
}

TEST_CASE("decompress validates inputs", "[pipeline]") {
  auto scene = SmallScene::make();
  auto cfg = small_config();
  Frame wrong_geometry(16, 16, 1, 0.5, 0.0);
  CHECK_THROWS_AS(decompress(wrong_geometry, scene.stream, cfg), InputError);
  Frame wrong_time = scene.initial;
  wrong_time.timestamp = 0.05;
  CHECK_THROWS_AS(decompress(wrong_time, scene.stream, cfg), InputError);
  auto bad = cfg;
  bad.query_times = {9.0};
  CHECK_THROWS_AS(decompress(scene.initial, scene.stream, bad), InputError);
  auto underdetermined = cfg;
  underdetermined.anchor_count = 3;
  underdetermined.trajectory_count = 5;
  CHECK_THROWS_AS(decompress(scene.initial, scene.stream, underdetermined), NumericalError);
}

TEST_CASE("auto thresholds fall back to the documented default", "[pipeline]") {
  auto scene = SmallScene::make();
  auto cfg = small_config();
  cfg.thresholds.reset();
  cfg.query_times = {0.0};
  auto result = decompress(scene.initial, scene.stream, cfg);
  CHECK(result.thresholds.c_pos == 0.2);
  CHECK(result.thresholds.c_neg == 0.2);
}

TEST_CASE("auto thresholds calibrate from frame pairs", "[pipeline]") {
  auto scene = SmallScene::make();
  auto cfg = small_config();
  cfg.thresholds.reset();
  cfg.query_times = {0.0};
  auto fa = direct_integration(scene.initial, scene.stream, 0.1, {0.2, 0.2});
  auto fb = direct_integration(scene.initial, scene.stream, 0.35, {0.2, 0.2});
  auto result = decompress(scene.initial, scene.stream, cfg, {{fa, fb}});
  CHECK(result.thresholds.c_pos == Approx(0.2).margin(1e-6));
  CHECK(result.thresholds.c_neg == Approx(0.2).margin(1e-6));
}

TEST_CASE("branch volumes follow the normalization contract", "[pipeline]") {
  auto scene = SmallScene::make();
  auto cfg = small_config();
  cfg.query_times = {0.0};
  auto result = decompress(scene.initial, scene.stream, cfg);
  CHECK(result.volumes.synthesis.polarity_separated);
  double raw_sum = 0.0;
  for (double v : result.volumes.synthesis.data) raw_sum += v;
  CHECK(raw_sum == Approx(static_cast<double>(scene.stream.size())).epsilon(1e-9));
  double m = 0.0;
  for (double v : result.volumes.motion.data) m = std::max(m, std::abs(v));
  CHECK(m == 1.0);
}

TEST_CASE("decompression is deterministic bit for bit", "[pipeline]") {
  auto scene = SmallScene::make();
  auto cfg = small_config();
  auto a = decompress(scene.initial, scene.stream, cfg);
  auto b = decompress(scene.initial, scene.stream, cfg);
  REQUIRE(a.queries.size() == b.queries.size());
  for (size_t i = 0; i < a.queries.size(); ++i) {
    for (size_t j = 0; j < a.queries[i].fused.values.size(); ++j)
      CHECK(a.queries[i].fused.values[j] == b.queries[i].fused.values[j]);
    for (size_t j = 0; j < a.queries[i].flow.size(); ++j)
      CHECK(a.queries[i].flow[j] == b.queries[i].flow[j]);
  }
  auto ga = render(scene.spec, cfg.query_times);
  CHECK(evaluate(a, ga).to_text() == evaluate(b, ga).to_text());
}

TEST_CASE("kplane synthesis mode runs end to end", "[pipeline]") {
  auto scene = SmallScene::make();
  auto cfg = small_config();
  cfg.synthesis = DecompressionConfig::Synthesis::kplane_fit;
  cfg.kplane_steps = 40;
  cfg.query_times = {0.2};
  auto result = decompress(scene.initial, scene.stream, cfg);
  REQUIRE(result.queries.size() == 1);
  CHECK(result.queries[0].synth_frame.values.all_finite());
}

TEST_CASE("color inputs keep chroma through both branches", "[pipeline]") {
  auto scene = SmallScene::make();
  // Tint the scene: R = 1.2 * luma-ish, B = 0.6 * luma (clamped), G = luma.
  Frame color(32, 32, 3, 0.0, 0.0);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) {
      const double v = scene.initial.at(y, x);
      color.at(y, x, 0) = clamp01(1.1 * v);
      color.at(y, x, 1) = v;
      color.at(y, x, 2) = 0.6 * v;
    }
  // Events simulated from the color scene's luminance.
  std::vector<double> times;
  for (int i = 0; i <= 80; ++i) times.push_back(0.4 * i / 80);
  FrameSequence video;
  for (double t : times) {
    auto g = render_scene(scene.spec, t);
    Frame f(32, 32, 1, 0.0, t);
    for (size_t j = 0; j < f.values.size(); ++j) {
      const double v = g.values[j];
      f.values[j] = 0.299 * clamp01(1.1 * v) + 0.587 * v + 0.114 * 0.6 * v;
    }
    video.frames.push_back(f);
  }
  auto stream = simulate_events(video, {0.2, 0.2});
  auto cfg = small_config();
  cfg.query_times = {0.0, 0.3};
  auto result = decompress(color, stream, cfg);
  REQUIRE(result.queries[0].fused.channels() == 3);
  CHECK(psnr(result.queries[0].fused, color) >= 60.0);
  CHECK(result.queries[1].fused.values.all_finite());
}

TEST_CASE("evaluate reports per-frame and mean metrics", "[pipeline]") {
  auto scene = SmallScene::make();
  auto cfg = small_config();
  auto result = decompress(scene.initial, scene.stream, cfg);
  auto gt = render(scene.spec, cfg.query_times);
  auto rep = evaluate(result, gt, 2);
  REQUIRE(rep.entries.size() == 2 * gt.size() + 2);
  CHECK(rep.entries[0].first == "frame0_psnr");
  CHECK(rep.entries.back().first == "mean_ssim");
  // Consistency with direct metric calls.
  const double direct =
      psnr(crop_border(result.queries[1].fused, 2), crop_border(gt[1], 2));
  CHECK(rep.entries[2].second == direct);
  // Perfect prediction saturates the metrics.
  DecompressionResult fake;
  fake.queries.resize(gt.size());
  for (size_t i = 0; i < gt.size(); ++i) fake.queries[i].fused = gt[i];
  auto perfect = evaluate(fake, gt, 2);
  CHECK(perfect.entries[0].second == 99.0);
  CHECK(perfect.entries[1].second == 1.0);
  const std::string text = rep.to_text();
  CHECK(text.find("mean_psnr=") != std::string::npos);
}

TEST_CASE("timing stats expose the fit/query amortization", "[pipeline]") {
  auto scene = SmallScene::make();
  auto cfg = small_config();
  cfg.query_times = {0.1, 0.2, 0.3, 0.4};
  auto result = decompress(scene.initial, scene.stream, cfg);
  CHECK(result.timing.query_count == 4);
  CHECK(result.timing.fit_seconds > 0.0);
  CHECK(result.timing.query_seconds > 0.0);
  // The one-off fit dominates a per-query sample.
  CHECK(result.timing.fit_seconds > result.timing.query_seconds / 4);
}

TEST_CASE("config parsing covers the documented keys", "[pipeline]") {
  std::istringstream is(
      "thresholds = 0.25,0.15\nbins=30\ntrajectory_count = 4\nbasis = cosine\n"
      "anchors = 5\npyramid_levels = 2\nsynthesis = kplane_fit\nfusion_sharpness = 8\n"
      "fusion_midpoint = 0.4\nmax_disp = 9\nrefine_steps = 3\nrefine_radius = 1\n"
      "beta_corr = 12\npatch_radius = 1\nkplane_steps = 10\nlog_eps = 0.002\n");
  auto cfg = config_from_key_values(io::parse_key_values(is));
  CHECK(cfg.thresholds->c_pos == 0.25);
  CHECK(cfg.thresholds->c_neg == 0.15);
  CHECK(cfg.bins == 30);
  CHECK(cfg.trajectory_count == 4);
  CHECK(cfg.basis_kind == MotionBasis::Kind::cosine);
  CHECK(cfg.anchor_count == 5);
  CHECK(cfg.pyramid_levels == 2);
  CHECK(cfg.synthesis == DecompressionConfig::Synthesis::kplane_fit);
  CHECK(cfg.fusion_sharpness == 8.0);
  CHECK(cfg.fusion_midpoint == 0.4);
  CHECK(cfg.max_disp == 9);
  CHECK(cfg.refine_steps == 3);
  CHECK(cfg.refine_radius == 1);
  CHECK(cfg.beta_corr == 12.0);
  CHECK(cfg.patch_radius == 1);
  CHECK(cfg.kplane_steps == 10);
  CHECK(cfg.log_eps == 0.002);

  std::istringstream aut("thresholds = auto\n");
  CHECK_FALSE(config_from_key_values(io::parse_key_values(aut)).thresholds.has_value());
  std::istringstream bad("basis = fourier\n");
  CHECK_THROWS_AS(config_from_key_values(io::parse_key_values(bad)), InputError);
}
