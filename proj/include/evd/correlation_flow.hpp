#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "evd/core.hpp"

namespace evd {

// Per-pixel descriptor: zero-mean local patch of radius r (border replicated)
// plus the two gradient channels, scaled to unit norm. Flat patches map to
// the zero descriptor, which downstream code treats as "no signal".
inline GridD extract_features(const Frame& image, int patch_radius) {
  require(patch_radius >= 0, "extract_features: radius must be >= 0");
  const GridD luma = luminance(image.values);
  const int w = luma.width(), h = luma.height();
  const int side = 2 * patch_radius + 1;
  const int dim = side * side + 2;
  GridD feat(h, w, dim, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double* d = &feat(y, x, 0);
      double mean = 0.0;
      int k = 0;
      for (int dy = -patch_radius; dy <= patch_radius; ++dy)
        for (int dx = -patch_radius; dx <= patch_radius; ++dx) {
          const int yy = std::clamp(y + dy, 0, h - 1);
          const int xx = std::clamp(x + dx, 0, w - 1);
          d[k++] = luma(yy, xx);
          mean += d[k - 1];
        }
      mean /= side * side;
      for (int i = 0; i < side * side; ++i) d[i] -= mean;
      d[side * side] =
          0.5 * (luma(y, std::min(x + 1, w - 1)) - luma(y, std::max(x - 1, 0)));
      d[side * side + 1] =
          0.5 * (luma(std::min(y + 1, h - 1), x) - luma(std::max(y - 1, 0), x));
      double norm = 0.0;
      for (int i = 0; i < dim; ++i) norm += d[i] * d[i];
      norm = std::sqrt(norm);
      if (norm < 1e-12) {
        for (int i = 0; i < dim; ++i) d[i] = 0.0;
      } else {
        for (int i = 0; i < dim; ++i) d[i] /= norm;
      }
    }
  return feat;
}

// All-pairs feature dot products C[i,j,k,l] = sum_h F1[i,j,h] * F2[k,l,h].
// (i, j) indexes the first image, (k, l) the second; the volume is not
// symmetric in its inputs. Values accumulate in double and store as f32.
struct CorrelationVolume {
  int h1 = 0, w1 = 0, h2 = 0, w2 = 0;
  std::vector<float> values;

  float& at(int i, int j, int k, int l) {
    return values[((static_cast<size_t>(i) * w1 + j) * h2 + k) * w2 + l];
  }
  const float& at(int i, int j, int k, int l) const {
    return values[((static_cast<size_t>(i) * w1 + j) * h2 + k) * w2 + l];
  }
};

// Memory grows with (H*W)^2, so full volumes are restricted to inputs of at
// most 128x128; larger frames need the max_disp-bounded matcher instead.
inline constexpr int kMaxFullCorrelationSide = 128 * 128;

inline CorrelationVolume build_correlation(const GridD& f1, const GridD& f2) {
  require(f1.channels() == f2.channels(), "build_correlation: feature length mismatch");
  require(f1.height() * f1.width() <= kMaxFullCorrelationSide &&
              f2.height() * f2.width() <= kMaxFullCorrelationSide,
          "build_correlation: inputs larger than 128x128 need windowed correlation");
  CorrelationVolume vol;
  vol.h1 = f1.height();
  vol.w1 = f1.width();
  vol.h2 = f2.height();
  vol.w2 = f2.width();
  vol.values.resize(static_cast<size_t>(vol.h1) * vol.w1 * vol.h2 * vol.w2);
  const int dim = f1.channels();
  size_t o = 0;
  for (int i = 0; i < vol.h1; ++i)
    for (int j = 0; j < vol.w1; ++j) {
      const double* a = &f1(i, j, 0);
      for (int k = 0; k < vol.h2; ++k)
        for (int l = 0; l < vol.w2; ++l) {
          const double* b = &f2(k, l, 0);
          double s = 0.0;
          for (int h = 0; h < dim; ++h) s += a[h] * b[h];
          vol.values[o++] = static_cast<float>(s);
        }
    }
  return vol;
}

// Correlation pyramid: 2x average pooling over the target (k, l) dimensions
// per level, the query (i, j) dimensions stay at full resolution.
inline std::vector<CorrelationVolume> pool_correlation(const CorrelationVolume& volume,
                                                       int levels) {
  require(levels >= 1, "pool_correlation: levels must be >= 1");
  std::vector<CorrelationVolume> pyr;
  pyr.push_back(volume);
  for (int l = 1; l < levels; ++l) {
    const CorrelationVolume& prev = pyr.back();
    CorrelationVolume next;
    next.h1 = prev.h1;
    next.w1 = prev.w1;
    next.h2 = (prev.h2 + 1) / 2;
    next.w2 = (prev.w2 + 1) / 2;
    next.values.resize(static_cast<size_t>(next.h1) * next.w1 * next.h2 * next.w2);
    for (int i = 0; i < next.h1; ++i)
      for (int j = 0; j < next.w1; ++j)
        for (int k = 0; k < next.h2; ++k)
          for (int m = 0; m < next.w2; ++m) {
            double sum = 0.0;
            int n = 0;
            for (int dk = 0; dk < 2; ++dk)
              for (int dm = 0; dm < 2; ++dm) {
                const int kk = 2 * k + dk, mm = 2 * m + dm;
                if (kk < prev.h2 && mm < prev.w2) {
                  sum += prev.at(i, j, kk, mm);
                  ++n;
                }
              }
            next.at(i, j, k, m) = static_cast<float>(sum / n);
          }
    pyr.push_back(std::move(next));
  }
  return pyr;
}

struct ArgmaxFlowResult {
  GridD flow;     // integer displacements (dx, dy)
  GridD score;    // best correlation value
  GridU8 valid;   // 0 where the query descriptor was flat / matchless
};

// Exhaustive integer matcher within max_disp, the ground-truth-grade oracle
// for seeding and tests. Ties break by smaller displacement magnitude, then
// row-major (k, l). Pixels whose best score is not positive are invalid.
inline ArgmaxFlowResult argmax_flow(const CorrelationVolume& volume, int max_disp) {
  require(max_disp >= 0, "argmax_flow: max_disp must be >= 0");
  ArgmaxFlowResult r{GridD(volume.h1, volume.w1, 2, 0.0), GridD(volume.h1, volume.w1, 1, 0.0),
                     GridU8(volume.h1, volume.w1, 1, 0)};
  for (int i = 0; i < volume.h1; ++i)
    for (int j = 0; j < volume.w1; ++j) {
      double best = -std::numeric_limits<double>::infinity();
      long best_d2 = 0;
      int bk = i, bl = j;
      bool found = false;
      const int k0 = std::max(0, i - max_disp), k1 = std::min(volume.h2 - 1, i + max_disp);
      const int l0 = std::max(0, j - max_disp), l1 = std::min(volume.w2 - 1, j + max_disp);
      for (int k = k0; k <= k1; ++k)
        for (int l = l0; l <= l1; ++l) {
          const double s = volume.at(i, j, k, l);
          const long d2 = static_cast<long>(k - i) * (k - i) + static_cast<long>(l - j) * (l - j);
          if (!found || s > best || (s == best && d2 < best_d2)) {
            best = s;
            best_d2 = d2;
            bk = k;
            bl = l;
            found = true;
          }
        }
      r.score(i, j) = found ? best : 0.0;
      if (found && best > 1e-12) {
        r.valid(i, j) = 1;
        r.flow(i, j, 0) = bl - j;
        r.flow(i, j, 1) = bk - i;
      }
    }
  return r;
}

namespace detail {

// Bilinear lookup in the (k, l) slab of one volume cell, border clamped.
inline double corr_sample(const CorrelationVolume& v, int i, int j, double k, double l) {
  if (k < 0.0) k = 0.0;
  if (k > v.h2 - 1) k = v.h2 - 1;
  if (l < 0.0) l = 0.0;
  if (l > v.w2 - 1) l = v.w2 - 1;
  int k0 = static_cast<int>(std::floor(k));
  int l0 = static_cast<int>(std::floor(l));
  if (k0 > v.h2 - 2) k0 = std::max(0, v.h2 - 2);
  if (l0 > v.w2 - 2) l0 = std::max(0, v.w2 - 2);
  const int k1 = std::min(k0 + 1, v.h2 - 1);
  const int l1 = std::min(l0 + 1, v.w2 - 1);
  const double fk = k - k0, fl = l - l0;
  return (1.0 - fk) * ((1.0 - fl) * v.at(i, j, k0, l0) + fl * v.at(i, j, k0, l1)) +
         fk * ((1.0 - fl) * v.at(i, j, k1, l0) + fl * v.at(i, j, k1, l1));
}

}  // namespace detail

// Iterative soft-argmax refinement over the correlation pyramid. Each step
// sweeps the levels coarse to fine; at each level the update is the softmax-
// weighted mean offset of the (2r+1)^2 correlation window around the current
// estimate, so every per-level update is bounded by r cells.
inline GridD iterative_refine(const GridD& flow_init,
                              const std::vector<CorrelationVolume>& pyramid, int steps,
                              int radius, double beta_corr = 10.0) {
  require(steps >= 0, "iterative_refine: steps must be >= 0");
  require(radius >= 1, "iterative_refine: radius must be >= 1");
  require(!pyramid.empty(), "iterative_refine: empty pyramid");
  require(flow_init.height() == pyramid[0].h1 && flow_init.width() == pyramid[0].w1 &&
              flow_init.channels() == 2,
          "iterative_refine: flow shape mismatch");

  GridD flow = flow_init;
  const int side = 2 * radius + 1;
  std::vector<double> scores(static_cast<size_t>(side) * side);
  for (int step = 0; step < steps; ++step) {
    for (int lev = static_cast<int>(pyramid.size()) - 1; lev >= 0; --lev) {
      const CorrelationVolume& vol = pyramid[lev];
      const double cell = static_cast<double>(1 << lev);
      // Center of original cell c at level coordinates: (c - (cell-1)/2)/cell.
      const double shift = (cell - 1.0) / 2.0;
      for (int i = 0; i < vol.h1; ++i)
        for (int j = 0; j < vol.w1; ++j) {
          const double ck = (i + flow(i, j, 1) - shift) / cell;
          const double cl = (j + flow(i, j, 0) - shift) / cell;
          double smax = -std::numeric_limits<double>::infinity();
          int idx = 0;
          for (int dv = -radius; dv <= radius; ++dv)
            for (int du = -radius; du <= radius; ++du) {
              const double s =
                  beta_corr * detail::corr_sample(vol, i, j, ck + dv, cl + du);
              scores[idx++] = s;
              smax = std::max(smax, s);
            }
          double wsum = 0.0, mu = 0.0, mv = 0.0;
          idx = 0;
          for (int dv = -radius; dv <= radius; ++dv)
            for (int du = -radius; du <= radius; ++du) {
              const double e = std::exp(scores[idx++] - smax);
              wsum += e;
              mu += e * du;
              mv += e * dv;
            }
          flow(i, j, 0) += cell * mu / wsum;
          flow(i, j, 1) += cell * mv / wsum;
        }
    }
  }
  return flow;
}

}  // namespace evd
