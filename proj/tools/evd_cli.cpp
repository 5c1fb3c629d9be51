// Command-line frontend: scene synthesis, event simulation, voxelization,
// direct integration, decompression, evaluation and contrast calibration.
// Exit codes: 0 ok, 2 input error, 3 numerical failure.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "evd/evd.hpp"

namespace {

using namespace evd;

std::vector<double> parse_times(const std::string& times_csv, double fps, double duration,
                                double t0) {
  std::vector<double> out;
  if (!times_csv.empty()) {
    std::stringstream ss(times_csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
    return out;
  }
  require(fps > 0.0 && duration > 0.0,
          "either --times or both --fps and --duration are required");
  for (int k = 0;; ++k) {
    const double t = t0 + k / fps;
    if (t > t0 + duration + 1e-12) break;
    out.push_back(t);
  }
  return out;
}

SceneSpec scene_from_config(const std::map<std::string, std::string>& kv) {
  SceneSpec s;
  auto get = [&](const char* key) -> const std::string* {
    auto it = kv.find(key);
    return it == kv.end() ? nullptr : &it->second;
  };
  if (const auto* v = get("kind")) s.kind = scene_kind_from_name(*v);
  if (const auto* v = get("width")) s.width = std::stoi(*v);
  if (const auto* v = get("height")) s.height = std::stoi(*v);
  if (const auto* v = get("duration")) s.duration = std::stod(*v);
  if (const auto* v = get("velocity_x")) s.velocity_x = std::stod(*v);
  if (const auto* v = get("velocity_y")) s.velocity_y = std::stod(*v);
  if (const auto* v = get("angular_rate")) s.angular_rate = std::stod(*v);
  if (const auto* v = get("path_amp_x")) s.path_amp_x = std::stod(*v);
  if (const auto* v = get("path_amp_y")) s.path_amp_y = std::stod(*v);
  if (const auto* v = get("path_freq")) s.path_freq = std::stod(*v);
  if (const auto* v = get("sigma")) s.sigma = std::stod(*v);
  if (const auto* v = get("checker_size")) s.checker_size = std::stod(*v);
  if (const auto* v = get("grating_fx")) s.grating_fx = std::stod(*v);
  if (const auto* v = get("grating_fy")) s.grating_fy = std::stod(*v);
  if (const auto* v = get("base")) s.base = std::stod(*v);
  if (const auto* v = get("amplitude")) s.amplitude = std::stod(*v);
  s.validate();
  return s;
}

Frame convert_format(const Frame& f, const std::string& format) {
  if (format.empty()) return f;
  if (format == "pgm") return luminance(f);
  if (format == "ppm") {
    if (f.channels() == 3) return f;
    Frame out(f.height(), f.width(), 3, 0.0, f.timestamp);
    for (int y = 0; y < f.height(); ++y)
      for (int x = 0; x < f.width(); ++x)
        for (int c = 0; c < 3; ++c) out.at(y, x, c) = f.at(y, x);
    return out;
  }
  throw InputError("unknown --format " + format + " (expected pgm or ppm)");
}

void write_frames_formatted(const std::string& dir, FrameSequence seq,
                            const std::string& format, const std::string& stem = "frame") {
  for (Frame& f : seq.frames) f = convert_format(f, format);
  io::write_frames(dir, seq, stem);
}

EventStream load_events(const std::string& path, std::optional<double> t0,
                        std::optional<double> t1) {
  return io::read_events(path, t0, t1);
}

void save_events(const std::string& path, const EventStream& s) {
  if (path.ends_with(".csv"))
    io::write_events_csv(path, s);
  else
    io::write_events_evs1(path, s);
}

int run(int argc, char** argv) {
  CLI::App app{"event-based continuous video decompression toolkit"};
  app.require_subcommand(1);

  // Shared option storage; each subcommand binds the subset it uses.
  std::string spec_path, config_path, out_dir = "out", format;
  std::string events_path, frames_path, initial_path, pred_path, gt_path, kind_name;
  std::string times_csv;
  double fps = 0.0, duration = 0.0;
  double cpos = 0.2, cneg = 0.2, log_eps = 1e-3;
  std::optional<double> t0_opt, t1_opt;
  double initial_time = 0.0;
  int bins = 60, mask_border = 2;
  bool polarity_separated = true, normalize = false, seq = false, write_flows = false;
  std::string calib_path;

  auto add_time_opts = [&](CLI::App* cmd) {
    cmd->add_option("--times", times_csv, "comma-separated query times (seconds)");
    cmd->add_option("--fps", fps, "query rate when --times is absent");
    cmd->add_option("--duration", duration, "query span when --times is absent");
  };
  auto add_span_opts = [&](CLI::App* cmd) {
    cmd->add_option("--t0", [&](const std::vector<std::string>& v) {
      t0_opt = std::stod(v[0]);
      return true;
    }, "override stream begin time");
    cmd->add_option("--t1", [&](const std::vector<std::string>& v) {
      t1_opt = std::stod(v[0]);
      return true;
    }, "override stream end time");
  };

  auto* synth = app.add_subcommand("synth-scene", "render an analytic scene to frames");
  synth->add_option("--spec", spec_path, "scene key=value file");
  synth->add_option("--kind", kind_name, "scene kind when --spec is absent");
  add_time_opts(synth);
  synth->add_option("--out", out_dir, "output directory");
  synth->add_option("--format", format, "pgm or ppm");
  synth->add_flag("--flows", write_flows, "also write ground-truth FLO1 flows from t0");

  auto* simulate = app.add_subcommand("simulate", "frames -> event stream");
  simulate->add_option("--frames", frames_path, "frame manifest")->required();
  simulate->add_option("--cpos", cpos, "positive contrast threshold");
  simulate->add_option("--cneg", cneg, "negative contrast threshold");
  simulate->add_option("--log-eps", log_eps, "log-domain stabilizer");
  simulate->add_option("--out", events_path, "output events (.csv or .evs)")->required();

  auto* voxelize = app.add_subcommand("voxelize", "events -> EVV1 event volume");
  voxelize->add_option("--events", events_path, "event file")->required();
  add_span_opts(voxelize);
  voxelize->add_option("--bins", bins, "temporal channels");
  voxelize->add_option("--polarity-separated", polarity_separated, "two polarity planes");
  voxelize->add_flag("--normalize", normalize, "scale to unit max-abs (motion branch)");
  voxelize->add_option("--out", out_dir, "output volume path")->required();

  auto* integrate = app.add_subcommand("integrate", "direct integration decode");
  integrate->add_option("--initial", initial_path, "initial frame (PGM)")->required();
  integrate->add_option("--initial-time", initial_time, "initial frame timestamp");
  integrate->add_option("--events", events_path, "event file")->required();
  add_span_opts(integrate);
  integrate->add_option("--cpos", cpos, "positive contrast threshold");
  integrate->add_option("--cneg", cneg, "negative contrast threshold");
  integrate->add_option("--log-eps", log_eps, "log-domain stabilizer");
  add_time_opts(integrate);
  integrate->add_option("--out", out_dir, "output directory");

  auto* decompress_cmd = app.add_subcommand("decompress", "initial frame + events -> video");
  decompress_cmd->add_option("--initial", initial_path, "initial frame (PGM/PPM)")->required();
  decompress_cmd->add_option("--initial-time", initial_time, "initial frame timestamp");
  decompress_cmd->add_option("--events", events_path, "event file")->required();
  add_span_opts(decompress_cmd);
  decompress_cmd->add_option("--config", config_path, "key=value decompression config");
  decompress_cmd->add_option("--calib-frames", calib_path,
                             "frame manifest for threshold calibration");
  add_time_opts(decompress_cmd);
  decompress_cmd->add_option("--out", out_dir, "output directory");
  decompress_cmd->add_option("--format", format, "pgm or ppm");
  decompress_cmd->add_flag("--seq", seq, "force the sequential deterministic path");

  auto* evaluate_cmd = app.add_subcommand("evaluate", "PSNR/SSIM of predictions vs truth");
  evaluate_cmd->add_option("--pred", pred_path, "predicted frame manifest")->required();
  evaluate_cmd->add_option("--gt", gt_path, "ground-truth frame manifest")->required();
  evaluate_cmd->add_option("--mask-border", mask_border, "border pixels excluded");
  std::string metrics_out;
  evaluate_cmd->add_option("--out", metrics_out, "metrics output file (optional)");

  auto* calibrate = app.add_subcommand("calibrate", "estimate contrast thresholds");
  calibrate->add_option("--frames", frames_path, "frame manifest")->required();
  calibrate->add_option("--events", events_path, "event file")->required();
  add_span_opts(calibrate);
  calibrate->add_option("--log-eps", log_eps, "log-domain stabilizer");

  CLI11_PARSE(app, argc, argv);

  if (synth->parsed()) {
    SceneSpec spec = spec_path.empty() ? SceneSpec{} : scene_from_config(io::read_key_values(spec_path));
    if (!kind_name.empty()) spec.kind = scene_kind_from_name(kind_name);
    const double span = duration > 0.0 ? duration : spec.duration;
    auto times = parse_times(times_csv, fps, span, 0.0);
    auto seqf = render(spec, times);
    write_frames_formatted(out_dir, seqf, format);
    if (write_flows) {
      for (size_t i = 0; i < times.size(); ++i) {
        char name[64];
        std::snprintf(name, sizeof(name), "%s/flow_%06zu.flo", out_dir.c_str(), i);
        io::write_flow(name, ground_truth_flow(spec, times.front(), times[i]));
      }
    }
    std::printf("wrote %zu frames to %s\n", times.size(), out_dir.c_str());
    return 0;
  }

  if (simulate->parsed()) {
    auto frames = io::read_frames(frames_path);
    for (Frame& f : frames.frames) f = luminance(f);
    auto stream = simulate_events(frames, {cpos, cneg}, log_eps);
    save_events(events_path, stream);
    std::printf("simulated %zu events over [%.6g, %.6g] s\n", stream.size(), stream.t_begin(),
                stream.t_end());
    return 0;
  }

  if (voxelize->parsed()) {
    auto stream = load_events(events_path, t0_opt, t1_opt);
    auto vol = build_volume(stream, stream.t_begin(),
                            stream.t_end() + 1e-9,  // include events at the stream end
                            bins, polarity_separated);
    if (normalize) vol = normalize_volume(vol);
    io::write_volume(out_dir, vol);
    std::printf("wrote %dx%dx%dx%d volume to %s\n", vol.planes, vol.bins, vol.height,
                vol.width, out_dir.c_str());
    return 0;
  }

  if (integrate->parsed()) {
    auto stream = load_events(events_path, t0_opt, t1_opt);
    Frame initial = luminance(io::read_frame(initial_path));
    initial.timestamp = initial_time;
    auto times = parse_times(times_csv, fps, duration, stream.t_begin());
    auto frames = latent_frames(initial, stream, times, {cpos, cneg}, log_eps);
    write_frames_formatted(out_dir, frames, format);
    std::printf("wrote %zu integrated frames to %s\n", frames.size(), out_dir.c_str());
    return 0;
  }

  if (decompress_cmd->parsed()) {
    auto stream = load_events(events_path, t0_opt, t1_opt);
    Frame initial = io::read_frame(initial_path);
    initial.timestamp = initial_time;
    DecompressionConfig cfg;
    if (!config_path.empty()) cfg = config_from_key_values(io::read_key_values(config_path));
    cfg.query_times = parse_times(times_csv, fps, duration, stream.t_begin());
    std::vector<std::pair<Frame, Frame>> pairs;
    if (!calib_path.empty()) {
      auto calib = io::read_frames(calib_path);
      const size_t n = calib.size();
      for (size_t k : {n / 4, n / 2, 3 * n / 4, n - 1})
        if (k > 0) pairs.push_back({luminance(calib[0]), luminance(calib[k])});
    }
    (void)seq;  // the only execution mode is the sequential deterministic one
    auto result = decompress(initial, stream, cfg, pairs);
    for (const std::string& wmsg : result.warnings)
      std::fprintf(stderr, "warning: %s\n", wmsg.c_str());

    std::filesystem::create_directories(out_dir);
    FrameSequence fused;
    for (const auto& q : result.queries) fused.frames.push_back(q.fused);
    write_frames_formatted(out_dir, fused, format);
    for (size_t i = 0; i < result.queries.size(); ++i) {
      char name[128];
      std::snprintf(name, sizeof(name), "%s/flow_%06zu.flo", out_dir.c_str(), i);
      io::write_flow(name, result.queries[i].flow);
      std::snprintf(name, sizeof(name), "%s/latent_flow_%06zu.flo", out_dir.c_str(), i);
      io::write_flow(name, result.queries[i].latent_flow);
    }
    {
      std::ofstream rep(out_dir + "/report.txt");
      rep.precision(17);
      rep << "events=" << stream.size() << "\n";
      rep << "t_begin=" << stream.t_begin() << "\n";
      rep << "t_end=" << stream.t_end() << "\n";
      rep << "c_pos=" << result.thresholds.c_pos << "\n";
      rep << "c_neg=" << result.thresholds.c_neg << "\n";
      rep << "anchors=" << result.anchor_times.size() << "\n";
      rep << "queries=" << result.queries.size() << "\n";
      rep << "sequential=1\n";  // the implementation always runs sequentially
    }
    {
      std::ofstream tim(out_dir + "/timing.txt");
      tim << "fit_seconds=" << result.timing.fit_seconds << "\n";
      tim << "query_seconds=" << result.timing.query_seconds << "\n";
      tim << "query_count=" << result.timing.query_count << "\n";
    }
    std::printf("decompressed %zu frames to %s (fit %.2fs, queries %.2fs)\n",
                result.queries.size(), out_dir.c_str(), result.timing.fit_seconds,
                result.timing.query_seconds);
    return 0;
  }

  if (evaluate_cmd->parsed()) {
    auto pred = io::read_frames(pred_path);
    auto gt = io::read_frames(gt_path);
    require(pred.size() == gt.size(), "evaluate: frame counts differ");
    MetricsReport rep;
    double sum_psnr = 0.0, sum_ssim = 0.0;
    for (size_t i = 0; i < gt.size(); ++i) {
      const Frame p = crop_border(pred[i], mask_border);
      const Frame g = crop_border(gt[i], mask_border);
      const double ps = psnr(p, g);
      const double ss = ssim(p, g);
      rep.add("frame" + std::to_string(i) + "_psnr", ps);
      rep.add("frame" + std::to_string(i) + "_ssim", ss);
      sum_psnr += ps;
      sum_ssim += ss;
    }
    rep.add("mean_psnr", sum_psnr / gt.size());
    rep.add("mean_ssim", sum_ssim / gt.size());
    const std::string text = rep.to_text();
    std::fputs(text.c_str(), stdout);
    if (!metrics_out.empty()) {
      std::ofstream os(metrics_out);
      os << text;
    }
    return 0;
  }

  if (calibrate->parsed()) {
    auto stream = load_events(events_path, t0_opt, t1_opt);
    auto frames = io::read_frames(frames_path);
    require(frames.size() >= 2, "calibrate: need at least two frames");
    // Pair the first frame against spread-out later frames: long windows keep
    // the per-pixel event counts well above the +-c quantization residual.
    std::vector<std::pair<Frame, Frame>> pairs;
    const size_t n = frames.size();
    for (size_t k : {n / 4, n / 2, 3 * n / 4, n - 1})
      if (k > 0) pairs.push_back({luminance(frames[0]), luminance(frames[k])});
    auto est = estimate_contrast(pairs, stream, log_eps);
    std::printf("c_pos=%.12g\nc_neg=%.12g\npos_defaulted=%d\nneg_defaulted=%d\npixels_used=%ld\n",
                est.thresholds.c_pos, est.thresholds.c_neg, est.pos_defaulted ? 1 : 0,
                est.neg_defaulted ? 1 : 0, est.pixels_used);
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const evd::InputError& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return 2;
  } catch (const evd::NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
