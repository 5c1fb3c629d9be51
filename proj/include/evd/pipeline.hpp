#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "evd/core.hpp"
#include "evd/correlation_flow.hpp"
#include "evd/event_core.hpp"
#include "evd/integrator.hpp"
#include "evd/kplane_field.hpp"
#include "evd/losses_metrics.hpp"
#include "evd/trajectory_field.hpp"
#include "evd/voxelizer.hpp"
#include "evd/warping.hpp"

// End-to-end decompression: one initial frame plus an event stream in, frames
// at arbitrary query times out. Two branches are fused per query time: a warp
// branch that splats the initial frame along the fitted trajectory field, and
// a synthesis branch that integrates events (or renders a fitted K-plane
// field). Everything runs sequentially, so results are reproducible bit for
// bit for identical inputs.

namespace evd {

struct DecompressionConfig {
  enum class Synthesis { integration, kplane_fit };

  std::optional<ContrastThresholds> thresholds;  // unset: calibrate if frames
                                                 // are supplied, else 0.2/0.2
  int bins = 60;
  int trajectory_count = 5;  // K
  MotionBasis::Kind basis_kind = MotionBasis::Kind::polynomial;
  int anchor_count = 8;      // A
  int pyramid_levels = 3;
  Synthesis synthesis = Synthesis::integration;
  double fusion_sharpness = 10.0;
  double fusion_midpoint = 0.5;  // c0, doubles as the default synthesis confidence
  double log_eps = 1e-3;
  int max_disp = 4;
  int refine_steps = 2;
  int refine_radius = 1;
  int refine_levels = 1;      // correlation pyramid depth for refinement
  double beta_corr = 10.0;
  int patch_radius = 3;
  int feature_smoothing = 2;  // binomial blur passes before feature extraction
  double texture_gate = 0.1;  // validity floor on normalized gradient magnitude
  int flow_smoothing = 128;    // confidence-weighted blur passes on anchor flows
  int kplane_steps = 300;
  std::vector<double> query_times;
};

// Event-volume inputs of the two branches: the synthesis volume keeps raw
// counts (pixel change scales with the number of events), the motion volume
// is normalized (flow should not depend on the absolute event count).
struct BranchVolumes {
  EventVolume synthesis;
  EventVolume motion;
};

inline BranchVolumes make_branch_volumes(const EventStream& stream, double t0, double t1,
                                         int bins) {
  BranchVolumes v;
  v.synthesis = build_volume(stream, t0, t1, bins, /*polarity_separated=*/true);
  v.motion = normalize_volume(v.synthesis);
  return v;
}

struct TimingStats {
  double fit_seconds = 0.0;    // one-off cost: calibration, latents, flows, fitting
  double query_seconds = 0.0;  // total over query times
  int query_count = 0;
};

struct QueryOutput {
  double time = 0.0;
  Frame fused;
  Frame warp_frame;         // level-0 splat of the initial frame along M(t)
  Frame latent_warp_frame;  // splat along the interpolated latent flow
  Frame synth_frame;
  GridD flow;         // M(t)
  GridD latent_flow;  // interpolated anchor flow
  GridD coverage;     // level-0 splat coverage of the M(t) warp
  std::vector<SplatResult> warp_pyramid;  // all splatted image levels
  double seconds = 0.0;
};

struct DecompressionResult {
  ContrastThresholds thresholds;
  std::vector<double> anchor_times;
  std::vector<GridD> anchor_flows;
  GridU8 anchor_valid;  // pixels whose matcher result was valid at every anchor
  std::optional<TrajectoryField> trajectory;
  BranchVolumes volumes;
  std::vector<QueryOutput> queries;
  TimingStats timing;
  std::vector<std::string> warnings;
};

// Matching confidence: smallest eigenvalue of the local structure tensor,
// scaled to [0, 1]. Edges score ~0 (aperture ambiguity), corners and curved
// texture score high; the flow grouping uses it to propagate trustworthy
// matches across ambiguous regions.
inline GridD corner_confidence(const GridD& luma, int window = 2) {
  const int w = luma.width(), h = luma.height();
  GridD gx(h, w, 1, 0.0), gy(h, w, 1, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      gx(y, x) = 0.5 * (luma(y, std::min(x + 1, w - 1)) - luma(y, std::max(x - 1, 0)));
      gy(y, x) = 0.5 * (luma(std::min(y + 1, h - 1), x) - luma(std::max(y - 1, 0), x));
    }
  GridD lam(h, w, 1, 0.0);
  double m = 0.0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double a = 0.0, b = 0.0, c = 0.0;
      for (int dy = -window; dy <= window; ++dy)
        for (int dx = -window; dx <= window; ++dx) {
          const int yy = std::clamp(y + dy, 0, h - 1), xx = std::clamp(x + dx, 0, w - 1);
          a += gx(yy, xx) * gx(yy, xx);
          b += gx(yy, xx) * gy(yy, xx);
          c += gy(yy, xx) * gy(yy, xx);
        }
      const double tr = a + c;
      const double disc = std::sqrt(std::max(0.0, tr * tr - 4.0 * (a * c - b * b)));
      lam(y, x) = 0.5 * (tr - disc);
      m = std::max(m, lam(y, x));
    }
  if (m > 0.0)
    for (double& v : lam.data()) v /= m;
  return lam;
}

// Splat weights: gradient-magnitude texture confidence of the initial frame,
// scaled to [0, 1].
inline GridD texture_confidence(const GridD& luma) {
  const int w = luma.width(), h = luma.height();
  GridD z(h, w, 1, 0.0);
  double m = 0.0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double gx = 0.5 * (luma(y, std::min(x + 1, w - 1)) - luma(y, std::max(x - 1, 0)));
      const double gy = 0.5 * (luma(std::min(y + 1, h - 1), x) - luma(std::max(y - 1, 0), x));
      z(y, x) = std::sqrt(gx * gx + gy * gy);
      m = std::max(m, z(y, x));
    }
  if (m > 0.0)
    for (double& v : z.data()) v /= m;
  return z;
}

// Coverage-gated sigmoid blend of the warp and synthesis branches. The
// per-pixel midpoint is the synthesis confidence: w = sigmoid(sharpness *
// (coverage - confidence)), except that an uncovered pixel (coverage == 0)
// takes the synthesis value outright.
inline Frame fuse(const Frame& warp_frame, const GridD& coverage, const Frame& synth_frame,
                  const GridD& synth_confidence, double sharpness) {
  require(warp_frame.values.same_shape(synth_frame.values), "fuse: frame shapes differ");
  require(coverage.height() == warp_frame.height() && coverage.width() == warp_frame.width(),
          "fuse: coverage shape mismatch");
  require(synth_confidence.height() == warp_frame.height() &&
              synth_confidence.width() == warp_frame.width(),
          "fuse: confidence shape mismatch");
  Frame out(warp_frame.height(), warp_frame.width(), warp_frame.channels(), 0.0,
            synth_frame.timestamp);
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x) {
      const double cov = coverage(y, x);
      const double w =
          cov <= 0.0 ? 0.0 : 1.0 / (1.0 + std::exp(-sharpness * (cov - synth_confidence(y, x))));
      for (int c = 0; c < out.channels(); ++c)
        out.at(y, x, c) = w * warp_frame.at(y, x, c) + (1.0 - w) * synth_frame.at(y, x, c);
    }
  return out;
}

inline Frame fuse(const Frame& warp_frame, const GridD& coverage, const Frame& synth_frame,
                  double synth_confidence, double sharpness) {
  return fuse(warp_frame, coverage, synth_frame,
              GridD(warp_frame.height(), warp_frame.width(), 1, synth_confidence), sharpness);
}

namespace detail {

// Chroma is held from the initial frame: every channel scales with the
// integrated luminance ratio.
inline Frame expand_color(const Frame& initial, const GridD& init_luma, const Frame& synth_luma,
                          double log_eps) {
  if (initial.channels() == 1) return synth_luma;
  Frame out(initial.height(), initial.width(), initial.channels(), 0.0, synth_luma.timestamp);
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x) {
      const double ratio = (synth_luma.at(y, x) + log_eps) / (init_luma(y, x) + log_eps);
      for (int c = 0; c < out.channels(); ++c)
        out.at(y, x, c) = clamp01(initial.at(y, x, c) * ratio);
    }
  return out;
}

inline GridD lerp_flows(const GridD& a, const GridD& b, double t) {
  GridD out = a;
  for (size_t i = 0; i < out.size(); ++i) out[i] = (1.0 - t) * a[i] + t * b[i];
  return out;
}

// Confidence-weighted smoothing of one anchor flow field. Stands in for the
// learned grouping that makes the latent flow spatially consistent: per-pixel
// matches carry speckle noise, and the testbed motions are smooth, so a
// texture-weighted blur removes noise without biasing affine fields.
inline GridD smooth_flow(const GridD& flow, const GridD& weight, int passes);

// Separable 3-tap binomial blur, repeated. Integration artifacts sit at the
// single-pixel scale; smoothing them out before feature extraction is what
// keeps the matcher usable on reconstructed latents.
inline GridD binomial_blur3(const GridD& g, int passes) {
  GridD out = g;
  const double k[3] = {0.25, 0.5, 0.25};
  for (int p = 0; p < passes; ++p) {
    GridD h(out.height(), out.width(), out.channels(), 0.0);
    for (int y = 0; y < out.height(); ++y)
      for (int x = 0; x < out.width(); ++x)
        for (int c = 0; c < out.channels(); ++c) {
          double s = 0.0;
          for (int d = -1; d <= 1; ++d)
            s += k[d + 1] * out(y, std::clamp(x + d, 0, out.width() - 1), c);
          h(y, x, c) = s;
        }
    for (int y = 0; y < out.height(); ++y)
      for (int x = 0; x < out.width(); ++x)
        for (int c = 0; c < out.channels(); ++c) {
          double s = 0.0;
          for (int d = -1; d <= 1; ++d)
            s += k[d + 1] * h(std::clamp(y + d, 0, out.height() - 1), x, c);
          out(y, x, c) = s;
        }
  }
  return out;
}

inline GridD smooth_flow(const GridD& flow, const GridD& weight, int passes) {
  GridD num(flow.height(), flow.width(), 2, 0.0);
  GridD den = weight;
  for (int y = 0; y < flow.height(); ++y)
    for (int x = 0; x < flow.width(); ++x) {
      num(y, x, 0) = weight(y, x) * flow(y, x, 0);
      num(y, x, 1) = weight(y, x) * flow(y, x, 1);
    }
  num = binomial_blur3(num, passes);
  den = binomial_blur3(den, passes);
  GridD out = flow;
  for (int y = 0; y < flow.height(); ++y)
    for (int x = 0; x < flow.width(); ++x)
      if (den(y, x) > 1e-9) {
        out(y, x, 0) = num(y, x, 0) / den(y, x);
        out(y, x, 1) = num(y, x, 1) / den(y, x);
      }
  return out;
}

}  // namespace detail

inline DecompressionResult decompress(
    const Frame& initial, const EventStream& stream, const DecompressionConfig& config,
    const std::vector<std::pair<Frame, Frame>>& calibration_pairs = {}) {
  using clock = std::chrono::steady_clock;
  const auto t_start = clock::now();

  require(initial.width() == stream.width() && initial.height() == stream.height(),
          "decompress: initial frame geometry does not match stream");
  require(initial.channels() == 1 || initial.channels() == 3,
          "decompress: initial frame must have 1 or 3 channels");
  require(std::abs(initial.timestamp - stream.t_begin()) <= 1e-9,
          "decompress: initial frame timestamp must equal stream t_begin");
  require(config.anchor_count >= 2, "decompress: anchor_count must be >= 2");
  require(config.trajectory_count >= 1 && config.pyramid_levels >= 1 && config.bins >= 1,
          "decompress: bad configuration");
  for (double t : config.query_times)
    require(t >= stream.t_begin() && t <= stream.t_end(),
            "decompress: query time outside stream span");

  DecompressionResult result;
  if (config.anchor_count < config.trajectory_count)
    result.warnings.push_back("anchor_count < trajectory_count: trajectory fit is underdetermined");

  // (1) contrast thresholds: configured, calibrated, or the documented default.
  if (config.thresholds) {
    result.thresholds = *config.thresholds;
  } else if (!calibration_pairs.empty()) {
    result.thresholds = estimate_contrast(calibration_pairs, stream, config.log_eps).thresholds;
  } else {
    result.thresholds = ContrastThresholds{0.2, 0.2};
  }
  result.thresholds.validate();

  result.volumes =
      make_branch_volumes(stream, stream.t_begin(), stream.t_end(), config.bins);

  const Frame init_luma = luminance(initial);
  const GridD z_weights = texture_confidence(init_luma.values);
  const GridD corner_w =
      corner_confidence(detail::binomial_blur3(init_luma.values, config.feature_smoothing));

  // (2) latent frames at uniformly spaced anchors over the stream span.
  const double span = stream.t_end() - stream.t_begin();
  require(span > 0.0, "decompress: stream span must be positive");
  result.anchor_times.resize(config.anchor_count);
  for (int a = 0; a < config.anchor_count; ++a)
    result.anchor_times[a] =
        stream.t_begin() + span * static_cast<double>(a) / (config.anchor_count - 1);
  const FrameSequence latents =
      latent_frames(init_luma, stream, result.anchor_times, result.thresholds, config.log_eps);

  // (3) latent-frame flow at each anchor. Consecutive latents are matched
  // (argmax seed + iterative refinement) and the per-step flows composed:
  // step displacements stay small, patch deformation per step is negligible,
  // and the slowly varying integration bias largely cancels between
  // neighboring latents. Each step flow is grouped by confidence-weighted
  // smoothing before composition. The anchor at t_begin is the initial frame
  // itself, so its flow is identically zero. The validity mask keeps pixels
  // the matcher could pin down at every step, with enough local texture to
  // beat the integration artifacts.
  const int w = initial.width(), h = initial.height();
  result.anchor_valid = GridU8(h, w, 1, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (z_weights(y, x) < config.texture_gate) result.anchor_valid(y, x) = 0;
  result.anchor_flows.assign(config.anchor_count, GridD(h, w, 2, 0.0));
  GridD prev_blur = detail::binomial_blur3(latents[0].values, config.feature_smoothing);
  GridD f_prev = extract_features(Frame(prev_blur, latents[0].timestamp), config.patch_radius);
  for (int a = 1; a < config.anchor_count; ++a) {
    const GridD cur_blur = detail::binomial_blur3(latents[a].values, config.feature_smoothing);
    const GridD fa =
        extract_features(Frame(cur_blur, latents[a].timestamp), config.patch_radius);
    const CorrelationVolume vol = build_correlation(f_prev, fa);
    const auto pyr = pool_correlation(vol, config.refine_levels);
    const ArgmaxFlowResult seed = argmax_flow(vol, config.max_disp);
    GridD step = iterative_refine(seed.flow, pyr, config.refine_steps, config.refine_radius,
                                  config.beta_corr);
    // Grouping confidence lives on the step's source lattice, where the
    // texture currently sits.
    const GridD step_corner = corner_confidence(prev_blur);
    GridD weight(h, w, 1, 0.0);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        if (!seed.valid(y, x)) {
          step(y, x, 0) = 0.0;  // unmatchable pixels contribute zero motion
          step(y, x, 1) = 0.0;
        } else {
          weight(y, x) = std::max(step_corner(y, x), 1e-4);
        }
      }
    step = detail::smooth_flow(step, weight, config.flow_smoothing);

    // Compose: the step flow lives on the previous anchor's lattice, so it
    // is sampled where each tracked point currently sits.
    const GridD& prev = result.anchor_flows[a - 1];
    GridD& acc = result.anchor_flows[a];
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double px = x + prev(y, x, 0);
        const double py = y + prev(y, x, 1);
        acc(y, x, 0) = prev(y, x, 0) + detail::bilinear(step, px, py, 0);
        acc(y, x, 1) = prev(y, x, 1) + detail::bilinear(step, px, py, 1);
        const int nx = std::clamp(static_cast<int>(std::lround(px)), 0, w - 1);
        const int ny = std::clamp(static_cast<int>(std::lround(py)), 0, h - 1);
        if (!seed.valid(ny, nx) || px < 0 || px > w - 1 || py < 0 || py > h - 1)
          result.anchor_valid(y, x) = 0;
      }
    f_prev = fa;
    prev_blur = cur_blur;
  }

  // (4) continuous trajectory field fitted to the anchor flows.
  TrackSet tracks;
  tracks.width = w;
  tracks.height = h;
  tracks.t0 = stream.t_begin();
  tracks.t1 = stream.t_end();
  tracks.times = result.anchor_times;
  for (int a = 0; a < config.anchor_count; ++a) {
    GridD pos(h, w, 2, 0.0);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        pos(y, x, 0) = x + result.anchor_flows[a](y, x, 0);
        pos(y, x, 1) = y + result.anchor_flows[a](y, x, 1);
      }
    tracks.positions.push_back(std::move(pos));
  }
  MotionBasis basis(config.basis_kind, config.trajectory_count);
  FitResult traj_fit = fit_coefficients(basis, tracks);
  result.trajectory.emplace(basis, std::move(traj_fit.coefficients), stream.t_begin(),
                            stream.t_end());

  // Optional K-plane synthesis field fitted once to the latent frames.
  std::optional<KPlaneField> kfield;
  if (config.synthesis == DecompressionConfig::Synthesis::kplane_fit) {
    KPlaneFieldConfig kcfg;
    kcfg.out_channels = 1;
    kcfg.xy_resolution = std::max(8, std::max(w, h) / 2);
    kcfg.time_resolution = std::max(config.anchor_count, 16);
    kfield = make_kplane_field(kcfg);
    KPlaneFitOptions kopt;
    kopt.steps = config.kplane_steps;
    fit(*kfield, latents, kopt);
  }

  const ImagePyramid pyramid = build_pyramid(initial, config.pyramid_levels);
  result.timing.fit_seconds = std::chrono::duration<double>(clock::now() - t_start).count();

  // (5)+(6) per query time: warp branch, synthesis branch, fusion.
  for (double t : config.query_times) {
    const auto q_start = clock::now();
    QueryOutput q;
    q.time = t;
    q.flow = eval_flow_field(*result.trajectory, t);

    // Latent flow interpolated piecewise-linearly between anchors.
    const double pos = (t - stream.t_begin()) / span * (config.anchor_count - 1);
    const int a0 = std::min(static_cast<int>(std::floor(pos)), config.anchor_count - 2);
    q.latent_flow =
        detail::lerp_flows(result.anchor_flows[a0], result.anchor_flows[a0 + 1], pos - a0);

    q.warp_pyramid = splat_pyramid(pyramid.images, q.flow, z_weights);
    q.warp_frame = Frame(q.warp_pyramid[0].values, t);
    q.coverage = q.warp_pyramid[0].coverage;
    const auto latent_splats = splat_pyramid(pyramid.images, q.latent_flow, z_weights);
    q.latent_warp_frame = Frame(latent_splats[0].values, t);

    Frame synth_luma =
        kfield ? [&] {
          Frame r = render_frame(*kfield, (t - stream.t_begin()) / span, w, h);
          for (double& v : r.values.data()) v = clamp01(v);
          r.timestamp = t;
          return r;
        }()
               : direct_integration(init_luma, stream, t, result.thresholds, config.log_eps);
    q.synth_frame = detail::expand_color(initial, init_luma.values, synth_luma, config.log_eps);

    q.fused = fuse(q.warp_frame, q.coverage, q.synth_frame, config.fusion_midpoint,
                   config.fusion_sharpness);
    q.seconds = std::chrono::duration<double>(clock::now() - q_start).count();
    result.timing.query_seconds += q.seconds;
    ++result.timing.query_count;
    result.queries.push_back(std::move(q));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Evaluation harness (PSNR/SSIM against ground truth, border-masked).
// ---------------------------------------------------------------------------

struct MetricsReport {
  std::vector<std::pair<std::string, double>> entries;

  void add(const std::string& name, double value) { entries.push_back({name, value}); }

  std::string to_text() const {
    std::ostringstream os;
    os.precision(17);
    for (const auto& [k, v] : entries) os << k << "=" << v << "\n";
    return os.str();
  }
};

inline Frame crop_border(const Frame& f, int border) {
  require(border >= 0 && f.width() > 2 * border && f.height() > 2 * border,
          "crop_border: border too large");
  Frame out(f.height() - 2 * border, f.width() - 2 * border, f.channels(), 0.0, f.timestamp);
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x)
      for (int c = 0; c < f.channels(); ++c)
        out.at(y, x, c) = f.at(y + border, x + border, c);
  return out;
}

inline MetricsReport evaluate(const DecompressionResult& result, const FrameSequence& gt,
                              int mask_border = 2) {
  require(result.queries.size() == gt.size(),
          "evaluate: query count does not match ground-truth frame count");
  MetricsReport rep;
  double sum_psnr = 0.0, sum_ssim = 0.0;
  for (size_t i = 0; i < gt.size(); ++i) {
    const Frame pred = crop_border(result.queries[i].fused, mask_border);
    const Frame ref = crop_border(gt[i], mask_border);
    const double p = psnr(pred, ref);
    const double s = ssim(pred, ref);
    rep.add("frame" + std::to_string(i) + "_psnr", p);
    rep.add("frame" + std::to_string(i) + "_ssim", s);
    sum_psnr += p;
    sum_ssim += s;
  }
  rep.add("mean_psnr", sum_psnr / gt.size());
  rep.add("mean_ssim", sum_ssim / gt.size());
  return rep;
}

// ---------------------------------------------------------------------------
// key=value configuration surface of `decompress`.
// ---------------------------------------------------------------------------

inline DecompressionConfig config_from_key_values(
    const std::map<std::string, std::string>& kv) {
  DecompressionConfig cfg;
  auto get = [&](const char* key) -> const std::string* {
    auto it = kv.find(key);
    return it == kv.end() ? nullptr : &it->second;
  };
  if (const auto* v = get("thresholds")) {
    // "auto" (and an absent key) defers to calibration pairs when supplied,
    // else the documented 0.2/0.2 default applies inside decompress.
    if (*v != "auto") {
      const auto comma = v->find(',');
      require(comma != std::string::npos, "config: thresholds must be 'auto' or 'cpos,cneg'");
      cfg.thresholds = ContrastThresholds{std::stod(v->substr(0, comma)),
                                          std::stod(v->substr(comma + 1))};
    }
  }
  if (const auto* v = get("bins")) cfg.bins = std::stoi(*v);
  if (const auto* v = get("trajectory_count")) cfg.trajectory_count = std::stoi(*v);
  if (const auto* v = get("basis")) {
    if (*v == "polynomial")
      cfg.basis_kind = MotionBasis::Kind::polynomial;
    else if (*v == "cosine")
      cfg.basis_kind = MotionBasis::Kind::cosine;
    else
      throw InputError("config: basis must be polynomial or cosine");
  }
  if (const auto* v = get("anchors")) cfg.anchor_count = std::stoi(*v);
  if (const auto* v = get("pyramid_levels")) cfg.pyramid_levels = std::stoi(*v);
  if (const auto* v = get("synthesis")) {
    if (*v == "integration")
      cfg.synthesis = DecompressionConfig::Synthesis::integration;
    else if (*v == "kplane_fit")
      cfg.synthesis = DecompressionConfig::Synthesis::kplane_fit;
    else
      throw InputError("config: synthesis must be integration or kplane_fit");
  }
  if (const auto* v = get("fusion_sharpness")) cfg.fusion_sharpness = std::stod(*v);
  if (const auto* v = get("fusion_midpoint")) cfg.fusion_midpoint = std::stod(*v);
  if (const auto* v = get("log_eps")) cfg.log_eps = std::stod(*v);
  if (const auto* v = get("max_disp")) cfg.max_disp = std::stoi(*v);
  if (const auto* v = get("refine_steps")) cfg.refine_steps = std::stoi(*v);
  if (const auto* v = get("refine_radius")) cfg.refine_radius = std::stoi(*v);
  if (const auto* v = get("refine_levels")) cfg.refine_levels = std::stoi(*v);
  if (const auto* v = get("beta_corr")) cfg.beta_corr = std::stod(*v);
  if (const auto* v = get("patch_radius")) cfg.patch_radius = std::stoi(*v);
  if (const auto* v = get("feature_smoothing")) cfg.feature_smoothing = std::stoi(*v);
  if (const auto* v = get("texture_gate")) cfg.texture_gate = std::stod(*v);
  if (const auto* v = get("flow_smoothing")) cfg.flow_smoothing = std::stoi(*v);
  if (const auto* v = get("kplane_steps")) cfg.kplane_steps = std::stoi(*v);
  return cfg;
}

}  // namespace evd
