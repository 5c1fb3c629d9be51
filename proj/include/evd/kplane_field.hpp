#pragma once

#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include "evd/core.hpp"

namespace evd {

// One 2D feature plane of a factorized (x, y, tau) video field. Axis a is the
// first projected coordinate, axis b the second; both live in [0, 1] and map
// onto the node lattice so that a == 0 hits node 0 and a == 1 the last node.
struct FeaturePlane {
  int res_a = 2, res_b = 2, channels = 1;
  std::vector<double> values;  // [a][b][f]

  FeaturePlane() = default;
  FeaturePlane(int ra, int rb, int f) : res_a(ra), res_b(rb), channels(f) {
    require(ra >= 2 && rb >= 2 && f >= 1, "FeaturePlane: resolutions must be >= 2");
    values.assign(static_cast<size_t>(ra) * rb * f, 0.0);
  }

  double& at(int a, int b, int f) {
    return values[(static_cast<size_t>(a) * res_b + b) * channels + f];
  }
  const double& at(int a, int b, int f) const {
    return values[(static_cast<size_t>(a) * res_b + b) * channels + f];
  }
};

namespace detail {

// Bilinear corner indices and weights of a plane lookup. The four weights
// always sum to 1 (partition of unity).
struct PlaneCorners {
  size_t idx[4];
  double w[4];
};

inline PlaneCorners plane_corners(const FeaturePlane& p, double u, double v) {
  const double ua = u * (p.res_a - 1);
  const double vb = v * (p.res_b - 1);
  int a0 = static_cast<int>(std::floor(ua));
  int b0 = static_cast<int>(std::floor(vb));
  if (a0 > p.res_a - 2) a0 = p.res_a - 2;
  if (b0 > p.res_b - 2) b0 = p.res_b - 2;
  if (a0 < 0) a0 = 0;
  if (b0 < 0) b0 = 0;
  const double fa = ua - a0, fb = vb - b0;
  PlaneCorners c;
  c.idx[0] = static_cast<size_t>(a0) * p.res_b + b0;
  c.idx[1] = static_cast<size_t>(a0) * p.res_b + (b0 + 1);
  c.idx[2] = static_cast<size_t>(a0 + 1) * p.res_b + b0;
  c.idx[3] = static_cast<size_t>(a0 + 1) * p.res_b + (b0 + 1);
  c.w[0] = (1.0 - fa) * (1.0 - fb);
  c.w[1] = (1.0 - fa) * fb;
  c.w[2] = fa * (1.0 - fb);
  c.w[3] = fa * fb;
  return c;
}

inline void plane_sample(const FeaturePlane& p, const PlaneCorners& c, double* out) {
  for (int f = 0; f < p.channels; ++f) {
    out[f] = c.w[0] * p.values[c.idx[0] * p.channels + f] +
             c.w[1] * p.values[c.idx[1] * p.channels + f] +
             c.w[2] * p.values[c.idx[2] * p.channels + f] +
             c.w[3] * p.values[c.idx[3] * p.channels + f];
  }
}

}  // namespace detail

struct KPlaneScale {
  FeaturePlane xy;  // axes (x, y)
  FeaturePlane xt;  // axes (x, tau)
  FeaturePlane yt;  // axes (y, tau)
};

// Affine decoder with an optional tanh hidden layer. For the linear form only
// (w1, b1) are used, shaped out x in.
struct KPlaneDecoder {
  int in = 1, out = 1, hidden = 0;
  std::vector<double> w1, b1;
  std::vector<double> w2, b2;
};

struct KPlaneFieldConfig {
  int scales = 3;
  int channels = 8;       // F per plane
  int xy_resolution = 32; // finest scale; halved per coarser scale, floor 2
  int time_resolution = 64;
  int out_channels = 1;
  int hidden = 0;         // 0 selects the linear decoder; 64 is the color default
  unsigned seed = 1;
};

// Multiscale K-plane video field over the normalized cube (x, y, tau).
struct KPlaneField {
  std::vector<KPlaneScale> scales;
  KPlaneDecoder decoder;

  int feature_dim() const {
    return scales.empty() ? 0 : scales[0].xy.channels * static_cast<int>(scales.size());
  }
};

// Plane values start at 1 plus small noise: the Hadamard product makes an
// all-zero plane a stationary point, so initialization must sit near 1.
inline KPlaneField make_kplane_field(const KPlaneFieldConfig& cfg) {
  require(cfg.scales >= 1 && cfg.channels >= 1 && cfg.out_channels >= 1,
          "make_kplane_field: bad configuration");
  require(cfg.xy_resolution >= 2 && cfg.time_resolution >= 2,
          "make_kplane_field: resolutions must be >= 2");
  std::mt19937 rng(cfg.seed);
  std::uniform_real_distribution<double> noise(-0.01, 0.01);

  KPlaneField field;
  int res = cfg.xy_resolution;
  for (int s = 0; s < cfg.scales; ++s) {
    KPlaneScale scale;
    scale.xy = FeaturePlane(res, res, cfg.channels);
    scale.xt = FeaturePlane(res, cfg.time_resolution, cfg.channels);
    scale.yt = FeaturePlane(res, cfg.time_resolution, cfg.channels);
    for (FeaturePlane* p : {&scale.xy, &scale.xt, &scale.yt})
      for (double& v : p->values) v = 1.0 + noise(rng);
    field.scales.push_back(std::move(scale));
    res = std::max(2, res / 2);
  }

  const int in = cfg.channels * cfg.scales;
  KPlaneDecoder& d = field.decoder;
  d.in = in;
  d.out = cfg.out_channels;
  d.hidden = cfg.hidden;
  if (cfg.hidden == 0) {
    d.w1.assign(static_cast<size_t>(d.out) * in, 1.0 / in);
    d.b1.assign(d.out, 0.0);
  } else {
    std::uniform_real_distribution<double> wi(-1.0 / std::sqrt(in), 1.0 / std::sqrt(in));
    std::uniform_real_distribution<double> wh(-1.0 / std::sqrt(cfg.hidden),
                                              1.0 / std::sqrt(cfg.hidden));
    d.w1.resize(static_cast<size_t>(cfg.hidden) * in);
    for (double& v : d.w1) v = wi(rng);
    d.b1.assign(cfg.hidden, 0.0);
    d.w2.resize(static_cast<size_t>(d.out) * cfg.hidden);
    for (double& v : d.w2) v = wh(rng);
    d.b2.assign(d.out, 0.0);
  }
  return field;
}

// Stable parameter block order: per scale the xy, xt, yt plane values, then
// the decoder tensors. Serialization and the gradient vector both follow it.
inline std::vector<std::pair<double*, size_t>> parameter_blocks(KPlaneField& f) {
  std::vector<std::pair<double*, size_t>> blocks;
  for (KPlaneScale& s : f.scales)
    for (FeaturePlane* p : {&s.xy, &s.xt, &s.yt})
      blocks.push_back({p->values.data(), p->values.size()});
  blocks.push_back({f.decoder.w1.data(), f.decoder.w1.size()});
  blocks.push_back({f.decoder.b1.data(), f.decoder.b1.size()});
  if (f.decoder.hidden > 0) {
    blocks.push_back({f.decoder.w2.data(), f.decoder.w2.size()});
    blocks.push_back({f.decoder.b2.data(), f.decoder.b2.size()});
  }
  return blocks;
}

inline std::vector<std::pair<const double*, size_t>> parameter_blocks(const KPlaneField& f) {
  std::vector<std::pair<const double*, size_t>> blocks;
  for (const KPlaneScale& s : f.scales)
    for (const FeaturePlane* p : {&s.xy, &s.xt, &s.yt})
      blocks.push_back({p->values.data(), p->values.size()});
  blocks.push_back({f.decoder.w1.data(), f.decoder.w1.size()});
  blocks.push_back({f.decoder.b1.data(), f.decoder.b1.size()});
  if (f.decoder.hidden > 0) {
    blocks.push_back({f.decoder.w2.data(), f.decoder.w2.size()});
    blocks.push_back({f.decoder.b2.data(), f.decoder.b2.size()});
  }
  return blocks;
}

inline size_t parameter_count(const KPlaneField& f) {
  size_t n = 0;
  for (const KPlaneScale& s : f.scales)
    n += s.xy.values.size() + s.xt.values.size() + s.yt.values.size();
  n += f.decoder.w1.size() + f.decoder.b1.size() + f.decoder.w2.size() + f.decoder.b2.size();
  return n;
}

inline size_t plane_parameter_count(const KPlaneField& f) {
  size_t n = 0;
  for (const KPlaneScale& s : f.scales)
    n += s.xy.values.size() + s.xt.values.size() + s.yt.values.size();
  return n;
}

namespace detail {

inline void decoder_forward(const KPlaneDecoder& d, const double* z, double* h_pre, double* h,
                            double* out) {
  if (d.hidden == 0) {
    for (int c = 0; c < d.out; ++c) {
      double s = d.b1[c];
      for (int k = 0; k < d.in; ++k) s += d.w1[static_cast<size_t>(c) * d.in + k] * z[k];
      out[c] = s;
    }
  } else {
    for (int j = 0; j < d.hidden; ++j) {
      double s = d.b1[j];
      for (int k = 0; k < d.in; ++k) s += d.w1[static_cast<size_t>(j) * d.in + k] * z[k];
      h_pre[j] = s;
      h[j] = std::tanh(s);
    }
    for (int c = 0; c < d.out; ++c) {
      double s = d.b2[c];
      for (int j = 0; j < d.hidden; ++j) s += d.w2[static_cast<size_t>(c) * d.hidden + j] * h[j];
      out[c] = s;
    }
  }
}

}  // namespace detail

// Decoded field value at normalized coordinates. Per scale the three planes
// are sampled bilinearly, fused by elementwise product, concatenated across
// scales and decoded.
inline std::vector<double> query(const KPlaneField& field, double x, double y, double tau) {
  require(x >= 0.0 && x <= 1.0 && y >= 0.0 && y <= 1.0 && tau >= 0.0 && tau <= 1.0,
          "query: coordinates outside the unit cube");
  require(!field.scales.empty(), "query: field has no scales");
  const int fch = field.scales[0].xy.channels;
  std::vector<double> z(static_cast<size_t>(fch) * field.scales.size());
  std::vector<double> u(fch), v(fch), w(fch);
  for (size_t s = 0; s < field.scales.size(); ++s) {
    const KPlaneScale& sc = field.scales[s];
    detail::plane_sample(sc.xy, detail::plane_corners(sc.xy, x, y), u.data());
    detail::plane_sample(sc.xt, detail::plane_corners(sc.xt, x, tau), v.data());
    detail::plane_sample(sc.yt, detail::plane_corners(sc.yt, y, tau), w.data());
    for (int f = 0; f < fch; ++f) z[s * fch + f] = u[f] * v[f] * w[f];
  }
  std::vector<double> h_pre(field.decoder.hidden), h(field.decoder.hidden);
  std::vector<double> out(field.decoder.out);
  detail::decoder_forward(field.decoder, z.data(), h_pre.data(), h.data(), out.data());
  return out;
}

// Batched query over the pixel lattice; pixel centers map to ((i+0.5)/W,
// (j+0.5)/H).
inline Frame render_frame(const KPlaneField& field, double tau, int width, int height) {
  require(width > 0 && height > 0, "render_frame: bad geometry");
  Frame out(height, width, field.decoder.out, 0.0, tau);
  for (int py = 0; py < height; ++py)
    for (int px = 0; px < width; ++px) {
      const auto v = query(field, (px + 0.5) / width, (py + 0.5) / height, tau);
      for (int c = 0; c < field.decoder.out; ++c) out.at(py, px, c) = v[c];
    }
  return out;
}

enum class FitLoss { l2, charbonnier };

struct KPlaneFitOptions {
  int steps = 500;
  double plane_lr = 1e-2;
  double decoder_lr = 1e-3;
  FitLoss loss = FitLoss::l2;
  double eps = 1e-3;    // charbonnier only
  double beta = 0.45;   // charbonnier only
};

struct KPlaneFitTrace {
  std::vector<double> loss;  // one entry per step plus the final value
};

namespace detail {

struct KPlaneSampleSet {
  int width = 0, height = 0, channels = 0;
  std::vector<double> coords;   // (x, y, tau) triples
  std::vector<double> targets;  // channels per sample
};

inline KPlaneSampleSet make_samples(const KPlaneField& field, const FrameSequence& target) {
  require(!target.empty(), "kplane fit: empty target sequence");
  const Frame& f0 = target[0];
  require(f0.channels() == field.decoder.out, "kplane fit: channel count mismatch");
  for (size_t i = 1; i < target.size(); ++i) {
    require(target[i].values.same_shape(f0.values), "kplane fit: target geometry mismatch");
    require(target[i].timestamp > target[i - 1].timestamp,
            "kplane fit: target timestamps must be strictly increasing");
  }
  const double tb = f0.timestamp, te = target.frames.back().timestamp;
  KPlaneSampleSet s;
  s.width = f0.width();
  s.height = f0.height();
  s.channels = f0.channels();
  s.coords.reserve(target.size() * f0.width() * f0.height() * 3);
  s.targets.reserve(target.size() * f0.width() * f0.height() * s.channels);
  for (const Frame& fr : target.frames) {
    const double tau = (target.size() == 1) ? 0.0 : (fr.timestamp - tb) / (te - tb);
    for (int py = 0; py < s.height; ++py)
      for (int px = 0; px < s.width; ++px) {
        s.coords.push_back((px + 0.5) / s.width);
        s.coords.push_back((py + 0.5) / s.height);
        s.coords.push_back(tau);
        for (int c = 0; c < s.channels; ++c) s.targets.push_back(fr.at(py, px, c));
      }
  }
  return s;
}

// Full-batch loss and analytic gradient of the sample -> Hadamard -> decode
// chain, laid out like parameter_blocks.
inline double loss_and_gradients(const KPlaneField& field, const KPlaneSampleSet& samples,
                                 const KPlaneFitOptions& opt, std::vector<double>* grad_out) {
  const int fch = field.scales[0].xy.channels;
  const int ns = static_cast<int>(field.scales.size());
  const KPlaneDecoder& d = field.decoder;
  const size_t nsamples = samples.coords.size() / 3;
  const double norm = 1.0 / (static_cast<double>(nsamples) * d.out);

  std::vector<double> grad;
  grad.assign(parameter_count(field), 0.0);

  // Block offsets matching parameter_blocks.
  std::vector<size_t> plane_off(static_cast<size_t>(ns) * 3);
  size_t off = 0;
  for (int s = 0; s < ns; ++s) {
    const KPlaneScale& sc = field.scales[s];
    plane_off[s * 3 + 0] = off;
    off += sc.xy.values.size();
    plane_off[s * 3 + 1] = off;
    off += sc.xt.values.size();
    plane_off[s * 3 + 2] = off;
    off += sc.yt.values.size();
  }
  const size_t w1_off = off;
  const size_t b1_off = w1_off + d.w1.size();
  const size_t w2_off = b1_off + d.b1.size();
  const size_t b2_off = w2_off + d.w2.size();

  std::vector<double> z(static_cast<size_t>(fch) * ns), dz(z.size());
  std::vector<double> u(static_cast<size_t>(fch) * ns), v(u.size()), w(u.size());
  std::vector<detail::PlaneCorners> cxy(ns), cxt(ns), cyt(ns);
  std::vector<double> h_pre(d.hidden), h(d.hidden), out(d.out), dout(d.out), dh(d.hidden);

  double loss = 0.0;
  for (size_t i = 0; i < nsamples; ++i) {
    const double x = samples.coords[3 * i], y = samples.coords[3 * i + 1],
                 tau = samples.coords[3 * i + 2];
    for (int s = 0; s < ns; ++s) {
      const KPlaneScale& sc = field.scales[s];
      cxy[s] = plane_corners(sc.xy, x, y);
      cxt[s] = plane_corners(sc.xt, x, tau);
      cyt[s] = plane_corners(sc.yt, y, tau);
      plane_sample(sc.xy, cxy[s], u.data() + s * fch);
      plane_sample(sc.xt, cxt[s], v.data() + s * fch);
      plane_sample(sc.yt, cyt[s], w.data() + s * fch);
      for (int f = 0; f < fch; ++f)
        z[s * fch + f] = u[s * fch + f] * v[s * fch + f] * w[s * fch + f];
    }
    decoder_forward(d, z.data(), h_pre.data(), h.data(), out.data());

    for (int c = 0; c < d.out; ++c) {
      const double r = out[c] - samples.targets[i * d.out + c];
      if (opt.loss == FitLoss::l2) {
        loss += r * r * norm;
        dout[c] = 2.0 * r * norm;
      } else {
        const double q = r * r + opt.eps * opt.eps;
        loss += std::pow(q, opt.beta) * norm;
        dout[c] = 2.0 * opt.beta * r * std::pow(q, opt.beta - 1.0) * norm;
      }
    }

    if (d.hidden == 0) {
      for (int c = 0; c < d.out; ++c) {
        grad[b1_off + c] += dout[c];
        for (int k = 0; k < d.in; ++k)
          grad[w1_off + static_cast<size_t>(c) * d.in + k] += dout[c] * z[k];
      }
      for (int k = 0; k < d.in; ++k) {
        double s = 0.0;
        for (int c = 0; c < d.out; ++c) s += dout[c] * d.w1[static_cast<size_t>(c) * d.in + k];
        dz[k] = s;
      }
    } else {
      for (int j = 0; j < d.hidden; ++j) {
        double s = 0.0;
        for (int c = 0; c < d.out; ++c)
          s += dout[c] * d.w2[static_cast<size_t>(c) * d.hidden + j];
        dh[j] = s * (1.0 - h[j] * h[j]);  // d tanh
      }
      for (int c = 0; c < d.out; ++c) {
        grad[b2_off + c] += dout[c];
        for (int j = 0; j < d.hidden; ++j)
          grad[w2_off + static_cast<size_t>(c) * d.hidden + j] += dout[c] * h[j];
      }
      for (int j = 0; j < d.hidden; ++j) {
        grad[b1_off + j] += dh[j];
        for (int k = 0; k < d.in; ++k)
          grad[w1_off + static_cast<size_t>(j) * d.in + k] += dh[j] * z[k];
      }
      for (int k = 0; k < d.in; ++k) {
        double s = 0.0;
        for (int j = 0; j < d.hidden; ++j) s += dh[j] * d.w1[static_cast<size_t>(j) * d.in + k];
        dz[k] = s;
      }
    }

    for (int s = 0; s < ns; ++s) {
      const int ch = fch;
      for (int f = 0; f < ch; ++f) {
        const double g = dz[s * ch + f];
        if (g == 0.0) continue;
        const double du = g * v[s * ch + f] * w[s * ch + f];
        const double dv = g * u[s * ch + f] * w[s * ch + f];
        const double dw = g * u[s * ch + f] * v[s * ch + f];
        for (int corner = 0; corner < 4; ++corner) {
          grad[plane_off[s * 3 + 0] + cxy[s].idx[corner] * ch + f] += cxy[s].w[corner] * du;
          grad[plane_off[s * 3 + 1] + cxt[s].idx[corner] * ch + f] += cxt[s].w[corner] * dv;
          grad[plane_off[s * 3 + 2] + cyt[s].idx[corner] * ch + f] += cyt[s].w[corner] * dw;
        }
      }
    }
  }
  if (grad_out) *grad_out = std::move(grad);
  return loss;
}

}  // namespace detail

// Full-batch loss and gradient against a target clip, for callers that need
// to inspect gradients directly (the finite-difference oracle does).
inline std::pair<double, std::vector<double>> kplane_loss_gradients(
    const KPlaneField& field, const FrameSequence& target,
    const KPlaneFitOptions& opt = {}) {
  require(!field.scales.empty(), "kplane_loss_gradients: field has no scales");
  const auto samples = detail::make_samples(field, target);
  std::vector<double> grad;
  const double loss = detail::loss_and_gradients(field, samples, opt, &grad);
  return {loss, std::move(grad)};
}

// Plain full-batch gradient descent on plane values and decoder parameters.
// Deterministic for fixed inputs; aborts with the step index if the loss
// turns non-finite.
inline KPlaneFitTrace fit(KPlaneField& field, const FrameSequence& target,
                          const KPlaneFitOptions& opt = {}) {
  require(opt.steps >= 1, "fit: steps must be >= 1");
  require(!field.scales.empty(), "fit: field has no scales");
  const auto samples = detail::make_samples(field, target);
  const size_t nplane = plane_parameter_count(field);
  auto blocks = parameter_blocks(field);

  KPlaneFitTrace trace;
  std::vector<double> grad;
  for (int step = 0; step < opt.steps; ++step) {
    const double loss = detail::loss_and_gradients(field, samples, opt, &grad);
    if (!std::isfinite(loss))
      throw NumericalError("fit: non-finite loss at step " + std::to_string(step));
    trace.loss.push_back(loss);
    size_t i = 0;
    for (auto& [ptr, n] : blocks) {
      const double lr = (i < nplane) ? opt.plane_lr : opt.decoder_lr;
      for (size_t j = 0; j < n; ++j) ptr[j] -= lr * grad[i + j];
      i += n;
    }
  }
  const double final_loss = detail::loss_and_gradients(field, samples, opt, nullptr);
  if (!std::isfinite(final_loss))
    throw NumericalError("fit: non-finite loss at step " + std::to_string(opt.steps));
  trace.loss.push_back(final_loss);
  return trace;
}

}  // namespace evd
