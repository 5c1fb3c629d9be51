#pragma once

#include <cmath>
#include <vector>

#include "evd/core.hpp"
#include "evd/warping.hpp"

namespace evd {

// Charbonnier penalty rho(x) = (x^2 + eps^2)^beta. Even, monotone in |x|,
// and bounded below by eps^(2*beta).
inline double charbonnier(double x, double eps = 1e-3, double beta = 0.45) {
  require(eps > 0.0, "charbonnier: eps must be > 0");
  return std::pow(x * x + eps * eps, beta);
}

inline double charbonnier(const GridD& g, double eps = 1e-3, double beta = 0.45) {
  require(eps > 0.0, "charbonnier: eps must be > 0");
  require(!g.empty(), "charbonnier: empty grid");
  double sum = 0.0;
  for (double v : g.data()) sum += std::pow(v * v + eps * eps, beta);
  return sum / static_cast<double>(g.size());
}

// Photometric warping loss rho(I0 - backward_warp(I_t, flow)), averaged over
// pixels whose warp sample stayed inside the image.
inline double photometric_loss(const Frame& i0, const Frame& it, const GridD& flow,
                               double eps = 1e-3, double beta = 0.45) {
  require(i0.width() == it.width() && i0.height() == it.height() &&
              i0.channels() == it.channels(),
          "photometric_loss: frame shapes differ");
  const WarpResult warped = backward_warp(it, flow);
  double sum = 0.0;
  long n = 0;
  for (int y = 0; y < i0.height(); ++y)
    for (int x = 0; x < i0.width(); ++x) {
      if (!warped.validity(y, x)) continue;
      for (int c = 0; c < i0.channels(); ++c) {
        sum += charbonnier(i0.at(y, x, c) - warped.frame.at(y, x, c), eps, beta);
        ++n;
      }
    }
  require(n > 0, "photometric_loss: no valid warp samples");
  return sum / static_cast<double>(n);
}

// Second-order smoothness: per interior pixel, the L2 norm of all second
// finite differences (both axes, every flow component), averaged. Vanishes
// exactly on affine fields.
inline double smoothness_loss(const GridD& flow) {
  const int w = flow.width(), h = flow.height(), ch = flow.channels();
  if (w < 3 || h < 3) return 0.0;
  double sum = 0.0;
  long n = 0;
  for (int y = 1; y < h - 1; ++y)
    for (int x = 1; x < w - 1; ++x) {
      double sq = 0.0;
      for (int c = 0; c < ch; ++c) {
        const double dxx = flow(y, x - 1, c) - 2.0 * flow(y, x, c) + flow(y, x + 1, c);
        const double dyy = flow(y - 1, x, c) - 2.0 * flow(y, x, c) + flow(y + 1, x, c);
        sq += dxx * dxx + dyy * dyy;
      }
      sum += std::sqrt(sq);
      ++n;
    }
  return sum / static_cast<double>(n);
}

// Mean |M - W|_1 over masked pixels, summed over the two flow components.
inline double l1_flow_loss(const GridD& m, const GridD& w, const GridU8& mask) {
  require(m.same_shape(w) && m.channels() == 2, "l1_flow_loss: flows must be HxWx2");
  require(mask.height() == m.height() && mask.width() == m.width() && mask.channels() == 1,
          "l1_flow_loss: mask shape mismatch");
  double sum = 0.0;
  long n = 0;
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) {
      if (!mask(y, x)) continue;
      sum += std::abs(m(y, x, 0) - w(y, x, 0)) + std::abs(m(y, x, 1) - w(y, x, 1));
      ++n;
    }
  require(n > 0, "l1_flow_loss: empty mask");
  return sum / static_cast<double>(n);
}

// PSNR in dB against the given peak value; identical inputs report the capped
// sentinel 99 dB.
inline double psnr(const Frame& pred, const Frame& gt, double peak = 1.0) {
  require(pred.values.same_shape(gt.values), "psnr: frame shapes differ");
  require(peak > 0.0, "psnr: peak must be > 0");
  double mse = 0.0;
  for (size_t i = 0; i < pred.values.size(); ++i) {
    const double d = pred.values[i] - gt.values[i];
    mse += d * d;
  }
  mse /= static_cast<double>(pred.values.size());
  if (mse == 0.0) return 99.0;
  return std::min(99.0, 10.0 * std::log10(peak * peak / mse));
}

namespace detail {

inline std::vector<double> gaussian_window(int size, double sigma) {
  std::vector<double> w(size);
  const double c = (size - 1) / 2.0;
  double sum = 0.0;
  for (int i = 0; i < size; ++i) {
    w[i] = std::exp(-(i - c) * (i - c) / (2.0 * sigma * sigma));
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return w;
}

// Separable valid-region filtering of a single channel.
inline GridD filter_valid(const GridD& img, int c, const std::vector<double>& win) {
  const int k = static_cast<int>(win.size());
  const int oh = img.height() - k + 1, ow = img.width() - k + 1;
  GridD tmp(img.height(), ow, 1, 0.0);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < k; ++i) s += win[i] * img(y, x + i, c);
      tmp(y, x) = s;
    }
  GridD out(oh, ow, 1, 0.0);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < k; ++i) s += win[i] * tmp(y + i, x);
      out(y, x) = s;
    }
  return out;
}

}  // namespace detail

// Gaussian-window SSIM (window 11, sigma 1.5), averaged over the valid region
// and over channels. Symmetric in its arguments; SSIM(x, x) == 1.
inline double ssim(const Frame& pred, const Frame& gt, int window = 11, double k1 = 0.01,
                   double k2 = 0.03, double peak = 1.0) {
  require(pred.values.same_shape(gt.values), "ssim: frame shapes differ");
  require(window >= 3 && window % 2 == 1, "ssim: window must be odd and >= 3");
  require(pred.width() >= window && pred.height() >= window,
          "ssim: image smaller than the window");
  const auto win = detail::gaussian_window(window, 1.5);
  const double c1 = (k1 * peak) * (k1 * peak);
  const double c2 = (k2 * peak) * (k2 * peak);

  double total = 0.0;
  for (int c = 0; c < pred.channels(); ++c) {
    const int h = pred.height(), w = pred.width();
    GridD x2(h, w, 1), y2(h, w, 1), xy(h, w, 1);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double a = pred.at(y, x, c), b = gt.at(y, x, c);
        x2(y, x) = a * a;
        y2(y, x) = b * b;
        xy(y, x) = a * b;
      }
    const GridD mx = detail::filter_valid(pred.values, c, win);
    const GridD my = detail::filter_valid(gt.values, c, win);
    const GridD mxx = detail::filter_valid(x2, 0, win);
    const GridD myy = detail::filter_valid(y2, 0, win);
    const GridD mxy = detail::filter_valid(xy, 0, win);
    double sum = 0.0;
    for (int y = 0; y < mx.height(); ++y)
      for (int x = 0; x < mx.width(); ++x) {
        const double sx = mxx(y, x) - mx(y, x) * mx(y, x);
        const double sy = myy(y, x) - my(y, x) * my(y, x);
        const double sxy = mxy(y, x) - mx(y, x) * my(y, x);
        const double num = (2.0 * mx(y, x) * my(y, x) + c1) * (2.0 * sxy + c2);
        const double den = (mx(y, x) * mx(y, x) + my(y, x) * my(y, x) + c1) * (sx + sy + c2);
        sum += num / den;
      }
    total += sum / (static_cast<double>(mx.height()) * mx.width());
  }
  return total / pred.channels();
}

// VGG-feature perceptual loss and LPIPS need pretrained networks, which this
// library does not ship. The names are reserved so the gap is explicit.
inline double perceptual_loss(const Frame&, const Frame&) {
  throw NotImplementedError("perceptual_loss: requires pretrained VGG features");
}
inline double lpips(const Frame&, const Frame&) {
  throw NotImplementedError("lpips: requires pretrained network weights");
}

}  // namespace evd
