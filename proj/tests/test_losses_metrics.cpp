#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "evd/losses_metrics.hpp"

using namespace evd;
using Catch::Approx;

TEST_CASE("charbonnier closed forms", "[losses_metrics]") {
  const double eps = 1e-3, beta = 0.45;
  CHECK(charbonnier(0.0, eps, beta) == Approx(std::pow(eps, 2 * beta)).epsilon(1e-14));
  CHECK(charbonnier(3.0, 1e-3, 0.5) == Approx(3.000000167).epsilon(1e-9));
  CHECK(charbonnier(1.7, eps, 1.0) == Approx(1.7 * 1.7 + eps * eps).epsilon(1e-14));
  CHECK_THROWS_AS(charbonnier(1.0, 0.0, 0.45), InputError);
}

TEST_CASE("charbonnier is even, monotone and bounded below", "[losses_metrics]") {
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  const double eps = 1e-3, beta = 0.45;
  double prev = charbonnier(0.0, eps, beta);
  for (double x = 0.1; x < 5.0; x += 0.1) {
    const double v = charbonnier(x, eps, beta);
    CHECK(v == charbonnier(-x, eps, beta));
    CHECK(v > prev);
    CHECK(v >= std::pow(eps, 2 * beta));
    prev = v;
  }
  (void)u;
}

TEST_CASE("photometric loss prefers the true flow", "[losses_metrics]") {
  const int w = 12, h = 8;
  Frame i0(h, w, 1, 0.0, 0.0), it(h, w, 1, 0.0, 1.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      i0.at(y, x) = 0.1 + 0.05 * x;
      it.at(y, x) = 0.1 + 0.05 * (x - 2);  // scene moved +2 px
    }
  GridD zero(h, w, 2, 0.0), truth(h, w, 2, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) truth(y, x, 0) = 2.0;

  const double eps = 1e-3, beta = 0.45;
  SECTION("identical frames at zero flow sit at the floor") {
    CHECK(photometric_loss(i0, i0, zero, eps, beta) ==
          Approx(std::pow(eps, 2 * beta)).epsilon(1e-12));
  }
  SECTION("true flow beats zero flow") {
    CHECK(photometric_loss(i0, it, truth, eps, beta) <
          photometric_loss(i0, it, zero, eps, beta));
  }
  SECTION("joint flip invariance") {
    Frame i0f(h, w, 1, 0.0, 0.0), itf(h, w, 1, 0.0, 1.0);
    GridD tf(h, w, 2, 0.0);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        i0f.at(y, x) = i0.at(y, w - 1 - x);
        itf.at(y, x) = it.at(y, w - 1 - x);
        tf(y, x, 0) = -truth(y, w - 1 - x, 0);
        tf(y, x, 1) = truth(y, w - 1 - x, 1);
      }
    CHECK(photometric_loss(i0f, itf, tf, eps, beta) ==
          Approx(photometric_loss(i0, it, truth, eps, beta)).epsilon(1e-12));
  }
}

TEST_CASE("smoothness loss vanishes on affine flows", "[losses_metrics]") {
  const int w = 9, h = 7;
  GridD constant(h, w, 2, 1.3);
  CHECK(smoothness_loss(constant) == 0.0);

  GridD affine(h, w, 2, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      affine(y, x, 0) = 0.3 * x - 0.7 * y + 2.0;
      affine(y, x, 1) = -1.1 * x + 0.2 * y;
    }
  CHECK(smoothness_loss(affine) == Approx(0.0).margin(1e-12));
}

TEST_CASE("smoothness loss of a quadratic flow", "[losses_metrics]") {
  const int w = 8, h = 6;
  GridD q(h, w, 2, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) q(y, x, 0) = static_cast<double>(x) * x;
  // Second x-difference of x^2 is 2 at every interior pixel; the per-pixel
  // norm is sqrt(2^2) = 2.
  CHECK(smoothness_loss(q) == Approx(2.0).epsilon(1e-12));
}

TEST_CASE("l1 flow loss", "[losses_metrics]") {
  const int w = 5, h = 4;
  GridD m(h, w, 2, 0.0), ref(h, w, 2, 0.0);
  GridU8 mask(h, w, 1, 1);
  CHECK(l1_flow_loss(m, m, mask) == 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      m(y, x, 0) = ref(y, x, 0) + 1.0;
      m(y, x, 1) = ref(y, x, 1) + 2.0;
    }
  CHECK(l1_flow_loss(m, ref, mask) == Approx(3.0).epsilon(1e-14));
  GridU8 empty(h, w, 1, 0);
  CHECK_THROWS_AS(l1_flow_loss(m, ref, empty), InputError);
}

TEST_CASE("psnr closed forms", "[losses_metrics]") {
  Frame a(4, 4, 1, 0.5, 0.0);
  CHECK(psnr(a, a) == 99.0);

  Frame b = a;
  for (double& v : b.values.data()) v += 0.1;
  CHECK(psnr(a, b) == Approx(20.0).margin(1e-9));

  Frame c = a;
  for (double& v : c.values.data()) v += 0.01;  // MSE 1e-4
  CHECK(psnr(a, c) == Approx(40.0).margin(1e-9));
}

TEST_CASE("psnr decreases with noise amplitude", "[losses_metrics]") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Frame gt(8, 8, 1, 0.5, 0.0);
  GridD noise(8, 8, 1, 0.0);
  for (double& v : noise.data()) v = u(rng);
  double prev = 1e9;
  for (double amp : {0.01, 0.02, 0.05, 0.1, 0.2}) {
    Frame p = gt;
    for (size_t i = 0; i < p.values.size(); ++i) p.values[i] += amp * noise[i];
    const double v = psnr(p, gt);
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("ssim identities", "[losses_metrics]") {
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Frame a(16, 16, 1, 0.0, 0.0);
  for (double& v : a.values.data()) v = u(rng);
  CHECK(ssim(a, a) == 1.0);

  Frame b(16, 16, 1, 0.0, 0.0);
  for (double& v : b.values.data()) v = u(rng);
  CHECK(ssim(a, b) == Approx(ssim(b, a)).margin(1e-15));
}

TEST_CASE("ssim punishes inverted structure", "[losses_metrics]") {
  // Mid-gray mean with strong structure; pred = 1 - gt inverts the structure.
  Frame gt(20, 20, 1, 0.0, 0.0);
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 20; ++x)
      gt.at(y, x) = 0.5 + 0.3 * std::sin(0.8 * x) * std::cos(0.6 * y);
  Frame pred = gt;
  for (double& v : pred.values.data()) v = 1.0 - v;
  CHECK(ssim(pred, gt) < 0.5);
}

TEST_CASE("reserved deep-feature losses stay explicit", "[losses_metrics]") {
  Frame a(4, 4, 1, 0.5, 0.0);
  CHECK_THROWS_AS(perceptual_loss(a, a), NotImplementedError);
  CHECK_THROWS_AS(lpips(a, a), NotImplementedError);
}
