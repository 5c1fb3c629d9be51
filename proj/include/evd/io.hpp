#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "evd/core.hpp"
#include "evd/event_core.hpp"
#include "evd/kplane_field.hpp"
#include "evd/trajectory_field.hpp"
#include "evd/voxelizer.hpp"

// File formats. All binary formats are little-endian; this implementation
// writes native byte order and targets little-endian hosts.

namespace evd::io {

namespace detail {

template <typename T>
inline void write_raw(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
inline T read_raw(std::istream& is, const std::string& what) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw InputError("truncated read in " + what);
  return v;
}

inline void write_magic(std::ostream& os, const char magic[5]) { os.write(magic, 4); }

inline void check_magic(std::istream& is, const char magic[5], const std::string& what) {
  char buf[4];
  is.read(buf, 4);
  if (!is || std::memcmp(buf, magic, 4) != 0)
    throw InputError(what + ": bad magic, expected " + std::string(magic, 4));
}

inline std::ofstream open_out(const std::string& path, bool binary) {
  std::ofstream os(path, binary ? std::ios::binary : std::ios::out);
  if (!os) throw InputError("cannot open for writing: " + path);
  return os;
}

inline std::ifstream open_in(const std::string& path, bool binary) {
  std::ifstream is(path, binary ? std::ios::binary : std::ios::in);
  if (!is) throw InputError("cannot open for reading: " + path);
  return is;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Events. CSV carries one "t x y p" line per event with '#' comments; this
// writer records geometry and span in comments so a round trip is lossless.
// EVS1 is the fixed binary layout: "EVS1", u32 width, u32 height, u64 count,
// then (f64 t, u16 x, u16 y, i8 p) records.
// ---------------------------------------------------------------------------

inline void write_events_csv(const std::string& path, const EventStream& s) {
  auto os = detail::open_out(path, false);
  os.precision(17);
  os << "# geometry " << s.width() << " " << s.height() << "\n";
  os << "# span " << s.t_begin() << " " << s.t_end() << "\n";
  for (const Event& e : s) os << e.t << " " << e.x << " " << e.y << " " << e.polarity << "\n";
}

inline EventStream read_events_csv(const std::string& path,
                                   std::optional<double> t_begin = std::nullopt,
                                   std::optional<double> t_end = std::nullopt) {
  auto is = detail::open_in(path, false);
  std::vector<Event> events;
  int width = 0, height = 0;
  std::optional<double> span_begin, span_end;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ls(line.substr(1));
      std::string tag;
      ls >> tag;
      if (tag == "geometry") ls >> width >> height;
      if (tag == "span") {
        double a, b;
        if (ls >> a >> b) {
          span_begin = a;
          span_end = b;
        }
      }
      continue;
    }
    std::istringstream ls(line);
    Event e;
    if (!(ls >> e.t >> e.x >> e.y >> e.polarity))
      throw InputError("read_events_csv: malformed line: " + line);
    events.push_back(e);
  }
  for (const Event& e : events) {
    width = std::max(width, e.x + 1);
    height = std::max(height, e.y + 1);
  }
  if (width == 0 || height == 0)
    throw InputError("read_events_csv: empty stream without geometry metadata");
  const double tb = t_begin ? *t_begin : (span_begin ? *span_begin : events.front().t);
  const double te = t_end ? *t_end : (span_end ? *span_end : events.back().t);
  return EventStream(width, height, tb, te, std::move(events));
}

inline void write_events_evs1(const std::string& path, const EventStream& s) {
  auto os = detail::open_out(path, true);
  detail::write_magic(os, "EVS1");
  detail::write_raw<uint32_t>(os, static_cast<uint32_t>(s.width()));
  detail::write_raw<uint32_t>(os, static_cast<uint32_t>(s.height()));
  detail::write_raw<uint64_t>(os, static_cast<uint64_t>(s.size()));
  for (const Event& e : s) {
    detail::write_raw<double>(os, e.t);
    detail::write_raw<uint16_t>(os, static_cast<uint16_t>(e.x));
    detail::write_raw<uint16_t>(os, static_cast<uint16_t>(e.y));
    detail::write_raw<int8_t>(os, static_cast<int8_t>(e.polarity));
  }
}

// The EVS1 layout does not carry the stream span; callers may override, else
// the span of the stored events is used.
inline EventStream read_events_evs1(const std::string& path,
                                    std::optional<double> t_begin = std::nullopt,
                                    std::optional<double> t_end = std::nullopt) {
  auto is = detail::open_in(path, true);
  detail::check_magic(is, "EVS1", "read_events_evs1");
  const auto w = detail::read_raw<uint32_t>(is, "EVS1 header");
  const auto h = detail::read_raw<uint32_t>(is, "EVS1 header");
  const auto n = detail::read_raw<uint64_t>(is, "EVS1 header");
  std::vector<Event> events;
  events.reserve(n);
  for (uint64_t i = 0; i < n; ++i) {
    Event e;
    e.t = detail::read_raw<double>(is, "EVS1 record");
    e.x = detail::read_raw<uint16_t>(is, "EVS1 record");
    e.y = detail::read_raw<uint16_t>(is, "EVS1 record");
    e.polarity = detail::read_raw<int8_t>(is, "EVS1 record");
    events.push_back(e);
  }
  const double tb = t_begin ? *t_begin : (events.empty() ? 0.0 : events.front().t);
  const double te = t_end ? *t_end : (events.empty() ? tb : events.back().t);
  return EventStream(static_cast<int>(w), static_cast<int>(h), tb, te, std::move(events));
}

inline EventStream read_events(const std::string& path,
                               std::optional<double> t_begin = std::nullopt,
                               std::optional<double> t_end = std::nullopt) {
  auto is = detail::open_in(path, true);
  char buf[4] = {0, 0, 0, 0};
  is.read(buf, 4);
  is.close();
  if (std::memcmp(buf, "EVS1", 4) == 0) return read_events_evs1(path, t_begin, t_end);
  return read_events_csv(path, t_begin, t_end);
}

// ---------------------------------------------------------------------------
// Frames: binary PGM (P5) for grayscale, PPM (P6) for color, 16-bit samples
// (big-endian within a sample per the Netpbm convention). Intensities map
// linearly from [0, 1] to [0, maxval].
// ---------------------------------------------------------------------------

inline void write_frame(const std::string& path, const Frame& f) {
  require(f.channels() == 1 || f.channels() == 3, "write_frame: need 1 or 3 channels");
  auto os = detail::open_out(path, true);
  const int maxval = 65535;
  os << (f.channels() == 1 ? "P5" : "P6") << "\n"
     << f.width() << " " << f.height() << "\n"
     << maxval << "\n";
  for (int y = 0; y < f.height(); ++y)
    for (int x = 0; x < f.width(); ++x)
      for (int c = 0; c < f.channels(); ++c) {
        const auto v = static_cast<uint16_t>(std::lround(clamp01(f.at(y, x, c)) * maxval));
        const char hi = static_cast<char>(v >> 8), lo = static_cast<char>(v & 0xff);
        os.write(&hi, 1);
        os.write(&lo, 1);
      }
}

namespace detail {

inline int pnm_token(std::istream& is, const std::string& what) {
  // Skips whitespace and '#' comments.
  while (true) {
    const int c = is.peek();
    if (c == '#') {
      std::string line;
      std::getline(is, line);
    } else if (std::isspace(c)) {
      is.get();
    } else {
      break;
    }
  }
  int v;
  if (!(is >> v)) throw InputError(what + ": malformed PNM header");
  return v;
}

}  // namespace detail

inline Frame read_frame(const std::string& path) {
  auto is = detail::open_in(path, true);
  std::string magic;
  is >> magic;
  int channels;
  if (magic == "P5")
    channels = 1;
  else if (magic == "P6")
    channels = 3;
  else
    throw InputError("read_frame: unsupported magic " + magic + " in " + path);
  const int w = detail::pnm_token(is, path);
  const int h = detail::pnm_token(is, path);
  const int maxval = detail::pnm_token(is, path);
  require(maxval == 255 || maxval == 65535, "read_frame: unsupported maxval");
  is.get();  // single whitespace after header
  Frame f(h, w, channels, 0.0, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < channels; ++c) {
        int v;
        if (maxval == 255) {
          v = is.get();
        } else {
          const int hi = is.get(), lo = is.get();
          v = (hi << 8) | lo;
        }
        if (!is) throw InputError("read_frame: truncated pixel data in " + path);
        f.at(y, x, c) = static_cast<double>(v) / maxval;
      }
  return f;
}

// Frame manifest: one "index timestamp filename" line per frame, '#' comments.
inline void write_frames(const std::string& dir, const FrameSequence& seq,
                         const std::string& stem = "frame") {
  std::filesystem::create_directories(dir);
  auto manifest = detail::open_out(dir + "/manifest.txt", false);
  manifest.precision(17);
  for (size_t i = 0; i < seq.size(); ++i) {
    char name[64];
    std::snprintf(name, sizeof(name), "%s_%06zu.%s", stem.c_str(), i,
                  seq[i].channels() == 1 ? "pgm" : "ppm");
    write_frame(dir + "/" + name, seq[i]);
    manifest << i << " " << seq[i].timestamp << " " << name << "\n";
  }
}

inline FrameSequence read_frames(const std::string& manifest_path) {
  auto is = detail::open_in(manifest_path, false);
  const std::string dir = std::filesystem::path(manifest_path).parent_path().string();
  FrameSequence seq;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    size_t index;
    double t;
    std::string name;
    if (!(ls >> index >> t >> name))
      throw InputError("read_frames: malformed manifest line: " + line);
    Frame f = read_frame(dir.empty() ? name : dir + "/" + name);
    f.timestamp = t;
    seq.frames.push_back(std::move(f));
  }
  require(!seq.empty(), "read_frames: empty manifest " + manifest_path);
  return seq;
}

// ---------------------------------------------------------------------------
// Event volumes: "EVV1", u32 P, u32 B, u32 H, u32 W, then f32 values in
// P-major (P, B, H, W) order. The temporal window is not part of the layout.
// ---------------------------------------------------------------------------

inline void write_volume(const std::string& path, const EventVolume& v) {
  auto os = detail::open_out(path, true);
  detail::write_magic(os, "EVV1");
  detail::write_raw<uint32_t>(os, static_cast<uint32_t>(v.planes));
  detail::write_raw<uint32_t>(os, static_cast<uint32_t>(v.bins));
  detail::write_raw<uint32_t>(os, static_cast<uint32_t>(v.height));
  detail::write_raw<uint32_t>(os, static_cast<uint32_t>(v.width));
  for (double d : v.data) detail::write_raw<float>(os, static_cast<float>(d));
}

inline EventVolume read_volume(const std::string& path) {
  auto is = detail::open_in(path, true);
  detail::check_magic(is, "EVV1", "read_volume");
  EventVolume v;
  v.planes = static_cast<int>(detail::read_raw<uint32_t>(is, "EVV1 header"));
  v.bins = static_cast<int>(detail::read_raw<uint32_t>(is, "EVV1 header"));
  v.height = static_cast<int>(detail::read_raw<uint32_t>(is, "EVV1 header"));
  v.width = static_cast<int>(detail::read_raw<uint32_t>(is, "EVV1 header"));
  v.polarity_separated = v.planes == 2;
  v.t0 = 0.0;
  v.t1 = 1.0;
  v.data.resize(static_cast<size_t>(v.planes) * v.bins * v.height * v.width);
  for (double& d : v.data) d = detail::read_raw<float>(is, "EVV1 data");
  return v;
}

// ---------------------------------------------------------------------------
// Flow fields: "FLO1", u32 width, u32 height, then f32 (dx, dy) row-major.
// ---------------------------------------------------------------------------

inline void write_flow(const std::string& path, const GridD& flow) {
  require(flow.channels() == 2, "write_flow: flow must have 2 channels");
  auto os = detail::open_out(path, true);
  detail::write_magic(os, "FLO1");
  detail::write_raw<uint32_t>(os, static_cast<uint32_t>(flow.width()));
  detail::write_raw<uint32_t>(os, static_cast<uint32_t>(flow.height()));
  for (int y = 0; y < flow.height(); ++y)
    for (int x = 0; x < flow.width(); ++x) {
      detail::write_raw<float>(os, static_cast<float>(flow(y, x, 0)));
      detail::write_raw<float>(os, static_cast<float>(flow(y, x, 1)));
    }
}

inline GridD read_flow(const std::string& path) {
  auto is = detail::open_in(path, true);
  detail::check_magic(is, "FLO1", "read_flow");
  const auto w = detail::read_raw<uint32_t>(is, "FLO1 header");
  const auto h = detail::read_raw<uint32_t>(is, "FLO1 header");
  GridD flow(static_cast<int>(h), static_cast<int>(w), 2, 0.0);
  for (int y = 0; y < flow.height(); ++y)
    for (int x = 0; x < flow.width(); ++x) {
      flow(y, x, 0) = detail::read_raw<float>(is, "FLO1 data");
      flow(y, x, 1) = detail::read_raw<float>(is, "FLO1 data");
    }
  return flow;
}

// ---------------------------------------------------------------------------
// Trajectory coefficients: "TRJ1", u32 width, u32 height, u32 K, f32 blob in
// CoefficientField layout. The basis descriptor travels as key=value text.
// ---------------------------------------------------------------------------

inline void write_coefficients(const std::string& path, const CoefficientField& c) {
  auto os = detail::open_out(path, true);
  detail::write_magic(os, "TRJ1");
  detail::write_raw<uint32_t>(os, static_cast<uint32_t>(c.width));
  detail::write_raw<uint32_t>(os, static_cast<uint32_t>(c.height));
  detail::write_raw<uint32_t>(os, static_cast<uint32_t>(c.count));
  for (double v : c.alpha) detail::write_raw<float>(os, static_cast<float>(v));
}

inline CoefficientField read_coefficients(const std::string& path) {
  auto is = detail::open_in(path, true);
  detail::check_magic(is, "TRJ1", "read_coefficients");
  const auto w = detail::read_raw<uint32_t>(is, "TRJ1 header");
  const auto h = detail::read_raw<uint32_t>(is, "TRJ1 header");
  const auto k = detail::read_raw<uint32_t>(is, "TRJ1 header");
  CoefficientField c(static_cast<int>(w), static_cast<int>(h), static_cast<int>(k));
  for (double& v : c.alpha) v = detail::read_raw<float>(is, "TRJ1 data");
  return c;
}

inline std::string basis_descriptor(const MotionBasis& b) {
  std::ostringstream os;
  os.precision(17);
  switch (b.kind()) {
    case MotionBasis::Kind::polynomial: os << "kind=polynomial\n"; break;
    case MotionBasis::Kind::cosine: os << "kind=cosine\n"; break;
    case MotionBasis::Kind::tabulated: os << "kind=tabulated\n"; break;
  }
  os << "count=" << b.count() << "\n";
  if (b.kind() == MotionBasis::Kind::tabulated) {
    os << "samples_per_function=" << b.sample_count() << "\n";
    os << "samples=";
    for (size_t i = 0; i < b.table().size(); ++i) {
      if (i) os << ",";
      os << b.table()[i];
    }
    os << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Generic key=value text (configs, basis descriptors): one pair per line,
// '#' comments, whitespace around the '=' ignored.
// ---------------------------------------------------------------------------

inline std::map<std::string, std::string> parse_key_values(std::istream& is) {
  std::map<std::string, std::string> kv;
  std::string line;
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  while (std::getline(is, line)) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw InputError("key=value parse: missing '=' in: " + line);
    kv[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
  }
  return kv;
}

inline std::map<std::string, std::string> read_key_values(const std::string& path) {
  auto is = detail::open_in(path, false);
  return parse_key_values(is);
}

inline MotionBasis basis_from_descriptor(const std::map<std::string, std::string>& kv) {
  const auto kind = kv.count("kind") ? kv.at("kind") : "polynomial";
  const int count = kv.count("count") ? std::stoi(kv.at("count")) : 5;
  if (kind == "polynomial") return MotionBasis(MotionBasis::Kind::polynomial, count);
  if (kind == "cosine") return MotionBasis(MotionBasis::Kind::cosine, count);
  if (kind == "tabulated") {
    require(kv.count("samples_per_function") && kv.count("samples"),
            "basis_from_descriptor: tabulated basis needs samples");
    const int per = std::stoi(kv.at("samples_per_function"));
    std::vector<std::vector<double>> fns(count);
    std::istringstream ss(kv.at("samples"));
    std::string tok;
    std::vector<double> flat;
    while (std::getline(ss, tok, ',')) flat.push_back(std::stod(tok));
    require(static_cast<int>(flat.size()) == count * per,
            "basis_from_descriptor: sample count mismatch");
    for (int k = 0; k < count; ++k)
      fns[k].assign(flat.begin() + static_cast<long>(k) * per,
                    flat.begin() + static_cast<long>(k + 1) * per);
    return MotionBasis(std::move(fns));
  }
  throw InputError("basis_from_descriptor: unknown kind " + kind);
}

// ---------------------------------------------------------------------------
// K-plane checkpoints: "KPF1", u32 scale count, per scale and per plane
// (xy, xt, yt) the u32 dims (res_a, res_b, channels), then u32 decoder dims
// (in, out, hidden), then all f32 parameter blobs in parameter-block order.
// ---------------------------------------------------------------------------

inline void write_kplane(const std::string& path, const KPlaneField& f) {
  auto os = detail::open_out(path, true);
  detail::write_magic(os, "KPF1");
  detail::write_raw<uint32_t>(os, static_cast<uint32_t>(f.scales.size()));
  for (const KPlaneScale& s : f.scales)
    for (const FeaturePlane* p : {&s.xy, &s.xt, &s.yt}) {
      detail::write_raw<uint32_t>(os, static_cast<uint32_t>(p->res_a));
      detail::write_raw<uint32_t>(os, static_cast<uint32_t>(p->res_b));
      detail::write_raw<uint32_t>(os, static_cast<uint32_t>(p->channels));
    }
  detail::write_raw<uint32_t>(os, static_cast<uint32_t>(f.decoder.in));
  detail::write_raw<uint32_t>(os, static_cast<uint32_t>(f.decoder.out));
  detail::write_raw<uint32_t>(os, static_cast<uint32_t>(f.decoder.hidden));
  for (const auto& [ptr, n] : parameter_blocks(f))
    for (size_t i = 0; i < n; ++i) detail::write_raw<float>(os, static_cast<float>(ptr[i]));
}

inline KPlaneField read_kplane(const std::string& path) {
  auto is = detail::open_in(path, true);
  detail::check_magic(is, "KPF1", "read_kplane");
  const auto nscales = detail::read_raw<uint32_t>(is, "KPF1 header");
  KPlaneField f;
  for (uint32_t s = 0; s < nscales; ++s) {
    KPlaneScale scale;
    for (FeaturePlane* p : {&scale.xy, &scale.xt, &scale.yt}) {
      const auto ra = detail::read_raw<uint32_t>(is, "KPF1 plane dims");
      const auto rb = detail::read_raw<uint32_t>(is, "KPF1 plane dims");
      const auto ch = detail::read_raw<uint32_t>(is, "KPF1 plane dims");
      *p = FeaturePlane(static_cast<int>(ra), static_cast<int>(rb), static_cast<int>(ch));
    }
    f.scales.push_back(std::move(scale));
  }
  f.decoder.in = static_cast<int>(detail::read_raw<uint32_t>(is, "KPF1 decoder dims"));
  f.decoder.out = static_cast<int>(detail::read_raw<uint32_t>(is, "KPF1 decoder dims"));
  f.decoder.hidden = static_cast<int>(detail::read_raw<uint32_t>(is, "KPF1 decoder dims"));
  const int w1rows = f.decoder.hidden > 0 ? f.decoder.hidden : f.decoder.out;
  f.decoder.w1.resize(static_cast<size_t>(w1rows) * f.decoder.in);
  f.decoder.b1.resize(w1rows);
  if (f.decoder.hidden > 0) {
    f.decoder.w2.resize(static_cast<size_t>(f.decoder.out) * f.decoder.hidden);
    f.decoder.b2.resize(f.decoder.out);
  }
  for (const auto& [ptr, n] : parameter_blocks(f))
    for (size_t i = 0; i < n; ++i) ptr[i] = detail::read_raw<float>(is, "KPF1 data");
  return f;
}

}  // namespace evd::io
