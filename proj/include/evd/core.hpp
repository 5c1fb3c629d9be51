#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace evd {

// Malformed input or violated precondition. The CLI maps this to exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical failure (divergence, rank deficiency, non-finite state). Exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Reserved API surface that needs pretrained feature extractors.
class NotImplementedError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Dense row-major grid with interleaved channels, indexed (y, x, c).
// x is the column and y the row everywhere in this library.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int height, int width, int channels = 1, T fill = T{})
      : height_(height), width_(width), channels_(channels) {
    if (height < 0 || width < 0 || channels < 1)
      throw InputError("Grid: bad dimensions " + std::to_string(height) + "x" +
                       std::to_string(width) + "x" + std::to_string(channels));
    data_.assign(static_cast<size_t>(height) * width * channels, fill);
  }

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(int y, int x, int c = 0) {
    return data_[(static_cast<size_t>(y) * width_ + x) * channels_ + c];
  }
  const T& operator()(int y, int x, int c = 0) const {
    return data_[(static_cast<size_t>(y) * width_ + x) * channels_ + c];
  }

  T& operator[](size_t i) { return data_[i]; }
  const T& operator[](size_t i) const { return data_[i]; }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  bool same_shape(const Grid& o) const {
    return height_ == o.height_ && width_ == o.width_ && channels_ == o.channels_;
  }
  bool in_bounds(int y, int x) const {
    return y >= 0 && y < height_ && x >= 0 && x < width_;
  }

  bool all_finite() const {
    if constexpr (std::is_floating_point_v<T>) {
      for (const T& v : data_)
        if (!std::isfinite(v)) return false;
    }
    return true;
  }

 private:
  int height_ = 0, width_ = 0, channels_ = 1;
  std::vector<T> data_;
};

using GridD = Grid<double>;
using GridU8 = Grid<uint8_t>;

// Timestamped intensity grid. Values are linear intensities in [0, 1] for
// sensor-facing code paths; grayscale is channels == 1, color channels == 3.
struct Frame {
  Grid<double> values;
  double timestamp = 0.0;

  Frame() = default;
  Frame(int height, int width, int channels = 1, double fill = 0.0, double t = 0.0)
      : values(height, width, channels, fill), timestamp(t) {}
  Frame(Grid<double> v, double t) : values(std::move(v)), timestamp(t) {}

  int height() const { return values.height(); }
  int width() const { return values.width(); }
  int channels() const { return values.channels(); }
  double& at(int y, int x, int c = 0) { return values(y, x, c); }
  const double& at(int y, int x, int c = 0) const { return values(y, x, c); }
};

struct FrameSequence {
  std::vector<Frame> frames;

  size_t size() const { return frames.size(); }
  bool empty() const { return frames.empty(); }
  const Frame& operator[](size_t i) const { return frames[i]; }
  Frame& operator[](size_t i) { return frames[i]; }
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw InputError(msg);
}

// Rec.601 luma. A grayscale input passes through.
inline GridD luminance(const GridD& img) {
  if (img.channels() == 1) return img;
  require(img.channels() == 3, "luminance: expected 1 or 3 channels");
  GridD out(img.height(), img.width(), 1);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      out(y, x) = 0.299 * img(y, x, 0) + 0.587 * img(y, x, 1) + 0.114 * img(y, x, 2);
  return out;
}

inline Frame luminance(const Frame& f) { return Frame(luminance(f.values), f.timestamp); }

inline double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

}  // namespace evd
