#pragma once

#include <cmath>
#include <vector>

#include "evd/core.hpp"

namespace evd {

namespace detail {

// Bilinear lookup at (px, py) in pixel coordinates, border-clamped.
// Exact at integer positions: the off-node weights are exactly zero.
inline double bilinear(const GridD& img, double px, double py, int c) {
  const int w = img.width(), h = img.height();
  if (px < 0.0) px = 0.0;
  if (px > w - 1) px = w - 1;
  if (py < 0.0) py = 0.0;
  if (py > h - 1) py = h - 1;
  int x0 = static_cast<int>(std::floor(px));
  int y0 = static_cast<int>(std::floor(py));
  if (x0 > w - 2) x0 = w - 2 >= 0 ? w - 2 : 0;
  if (y0 > h - 2) y0 = h - 2 >= 0 ? h - 2 : 0;
  const int x1 = std::min(x0 + 1, w - 1);
  const int y1 = std::min(y0 + 1, h - 1);
  const double fx = px - x0, fy = py - y0;
  const double v00 = img(y0, x0, c), v01 = img(y0, x1, c);
  const double v10 = img(y1, x0, c), v11 = img(y1, x1, c);
  return (1.0 - fy) * ((1.0 - fx) * v00 + fx * v01) + fy * ((1.0 - fx) * v10 + fx * v11);
}

}  // namespace detail

struct WarpResult {
  Frame frame;
  GridU8 validity;  // 1 where the sample position was inside the image
};

// out[p] = bilinear(image, p + flow[p]). Samples falling outside the image
// clamp to the border and are flagged invalid.
inline WarpResult backward_warp(const Frame& image, const GridD& flow) {
  require(flow.height() == image.height() && flow.width() == image.width() &&
              flow.channels() == 2,
          "backward_warp: flow must be HxWx2 matching the image");
  const int w = image.width(), h = image.height(), ch = image.channels();
  WarpResult r{Frame(h, w, ch, 0.0, image.timestamp), GridU8(h, w, 1, 0)};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double px = x + flow(y, x, 0);
      const double py = y + flow(y, x, 1);
      if (!std::isfinite(px) || !std::isfinite(py)) continue;
      r.validity(y, x) = (px >= 0.0 && px <= w - 1 && py >= 0.0 && py <= h - 1) ? 1 : 0;
      for (int c = 0; c < ch; ++c) r.frame.at(y, x, c) = detail::bilinear(image.values, px, py, c);
    }
  return r;
}

struct SplatResult {
  GridD values;
  GridD coverage;  // accumulated splat weight; 0 marks a hole
};

// Softmax (weighted-average) forward splatting. Every source pixel deposits
// exp(Z[p]) * value and exp(Z[p]) into the four bilinear neighbors of
// p + flow[p]; deposits outside the target are dropped. Where the deposited
// weight exceeds den_eps the output is the weighted mean, elsewhere 0 with
// coverage 0. Adding a constant to Z rescales coverage but not the values.
inline SplatResult softmax_splat(const GridD& source, const GridD& flow, const GridD& z,
                                 double den_eps = 1e-6) {
  require(flow.height() == source.height() && flow.width() == source.width() &&
              flow.channels() == 2,
          "softmax_splat: flow must be HxWx2 matching the source");
  require(z.height() == source.height() && z.width() == source.width() && z.channels() == 1,
          "softmax_splat: Z must be HxWx1 matching the source");
  require(z.all_finite(), "softmax_splat: non-finite Z");
  const int w = source.width(), h = source.height(), ch = source.channels();

  GridD num(h, w, ch, 0.0), den(h, w, 1, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double weight = std::exp(z(y, x));
      const double tx = x + flow(y, x, 0);
      const double ty = y + flow(y, x, 1);
      if (!std::isfinite(tx) || !std::isfinite(ty)) continue;
      const int x0 = static_cast<int>(std::floor(tx));
      const int y0 = static_cast<int>(std::floor(ty));
      const double fx = tx - x0, fy = ty - y0;
      const double wts[4] = {(1.0 - fx) * (1.0 - fy), fx * (1.0 - fy), (1.0 - fx) * fy,
                             fx * fy};
      const int xs[4] = {x0, x0 + 1, x0, x0 + 1};
      const int ys[4] = {y0, y0, y0 + 1, y0 + 1};
      for (int k = 0; k < 4; ++k) {
        if (!num.in_bounds(ys[k], xs[k])) continue;
        const double wk = weight * wts[k];
        den(ys[k], xs[k]) += wk;
        for (int c = 0; c < ch; ++c) num(ys[k], xs[k], c) += wk * source(y, x, c);
      }
    }

  SplatResult r{GridD(h, w, ch, 0.0), GridD(h, w, 1, 0.0)};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double d = den(y, x);
      if (d > den_eps) {
        r.coverage(y, x) = d;
        for (int c = 0; c < ch; ++c) r.values(y, x, c) = num(y, x, c) / d;
      }
    }
  return r;
}

inline SplatResult softmax_splat(const Frame& source, const GridD& flow, const GridD& z,
                                 double den_eps = 1e-6) {
  return softmax_splat(source.values, flow, z, den_eps);
}

// 2x average pooling; odd trailing rows/columns average over the partial window.
inline GridD downsample2(const GridD& g) {
  const int oh = (g.height() + 1) / 2, ow = (g.width() + 1) / 2;
  GridD out(oh, ow, g.channels(), 0.0);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x)
      for (int c = 0; c < g.channels(); ++c) {
        double sum = 0.0;
        int n = 0;
        for (int dy = 0; dy < 2; ++dy)
          for (int dx = 0; dx < 2; ++dx) {
            const int yy = 2 * y + dy, xx = 2 * x + dx;
            if (yy < g.height() && xx < g.width()) {
              sum += g(yy, xx, c);
              ++n;
            }
          }
        out(y, x, c) = sum / n;
      }
  return out;
}

// Flow downscale: pooled spatially and halved in magnitude.
inline GridD downsample_flow(const GridD& flow) {
  GridD out = downsample2(flow);
  for (double& v : out.data()) v *= 0.5;
  return out;
}

struct ImagePyramid {
  std::vector<GridD> images;    // level 0 is the input
  std::vector<GridD> features;  // per level: [luma, d/dx, d/dy]
};

namespace detail {

// Clamped central differences.
inline GridD gradient_features(const GridD& img) {
  const GridD luma = luminance(img);
  const int w = luma.width(), h = luma.height();
  GridD f(h, w, 3, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      f(y, x, 0) = luma(y, x);
      f(y, x, 1) = 0.5 * (luma(y, std::min(x + 1, w - 1)) - luma(y, std::max(x - 1, 0)));
      f(y, x, 2) = 0.5 * (luma(std::min(y + 1, h - 1), x) - luma(std::max(y - 1, 0), x));
    }
  return f;
}

}  // namespace detail

// Image pyramid P(I) and hand-crafted feature pyramid Psi(I).
inline ImagePyramid build_pyramid(const Frame& image, int levels) {
  require(levels >= 1, "build_pyramid: levels must be >= 1");
  ImagePyramid p;
  p.images.push_back(image.values);
  for (int l = 1; l < levels; ++l) p.images.push_back(downsample2(p.images.back()));
  for (const GridD& img : p.images) p.features.push_back(detail::gradient_features(img));
  return p;
}

// Splats every pyramid level independently with the per-level downscaled flow
// and weights.
inline std::vector<SplatResult> splat_pyramid(const std::vector<GridD>& pyramid,
                                              const GridD& flow, const GridD& z,
                                              double den_eps = 1e-6) {
  require(!pyramid.empty(), "splat_pyramid: empty pyramid");
  std::vector<SplatResult> out;
  GridD f = flow;
  GridD zz = z;
  for (size_t l = 0; l < pyramid.size(); ++l) {
    if (l > 0) {
      f = downsample_flow(f);
      zz = downsample2(zz);
    }
    require(pyramid[l].height() == f.height() && pyramid[l].width() == f.width(),
            "splat_pyramid: level shape does not match downscaled flow");
    out.push_back(softmax_splat(pyramid[l], f, zz, den_eps));
  }
  return out;
}

}  // namespace evd
