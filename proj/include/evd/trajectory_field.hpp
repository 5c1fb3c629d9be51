#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "evd/core.hpp"

namespace evd {

// K shared scalar basis functions over normalized time [0, 1]. Every kind is
// anchored: g_k(0) == 0, so a zero-coefficient trajectory stays put and the
// initial frame is fixed exactly.
class MotionBasis {
 public:
  enum class Kind { polynomial, cosine, tabulated };

  // polynomial: g_k(t) = t^k, k = 1..K. cosine: g_k(t) = cos(pi*k*t) - 1.
  MotionBasis(Kind kind, int count) : kind_(kind), count_(count) {
    require(count >= 1, "MotionBasis: K must be >= 1");
    require(kind != Kind::tabulated, "MotionBasis: tabulated kind needs samples");
  }

  // Tabulated basis: per function, uniform samples over [0, 1], linearly
  // interpolated. Anchoring subtracts the t=0 sample of each function.
  MotionBasis(std::vector<std::vector<double>> samples) : kind_(Kind::tabulated) {
    require(!samples.empty(), "MotionBasis: need at least one tabulated function");
    count_ = static_cast<int>(samples.size());
    sample_count_ = static_cast<int>(samples[0].size());
    require(sample_count_ >= 2, "MotionBasis: tabulated grids need >= 2 samples");
    for (auto& s : samples) {
      require(static_cast<int>(s.size()) == sample_count_,
              "MotionBasis: tabulated functions must share the sample grid");
      const double anchor = s[0];
      for (double& v : s) v -= anchor;
      table_.insert(table_.end(), s.begin(), s.end());
    }
  }

  Kind kind() const { return kind_; }
  int count() const { return count_; }
  int sample_count() const { return sample_count_; }
  const std::vector<double>& table() const { return table_; }

  void eval_into(double t, double* out) const {
    require(t >= 0.0 && t <= 1.0, "MotionBasis: t outside [0, 1]");
    switch (kind_) {
      case Kind::polynomial: {
        double p = 1.0;
        for (int k = 0; k < count_; ++k) {
          p *= t;
          out[k] = p;
        }
        break;
      }
      case Kind::cosine:
        for (int k = 0; k < count_; ++k)
          out[k] = std::cos(M_PI * (k + 1) * t) - 1.0;
        break;
      case Kind::tabulated: {
        const double u = t * (sample_count_ - 1);
        int i0 = static_cast<int>(std::floor(u));
        if (i0 > sample_count_ - 2) i0 = sample_count_ - 2;
        const double f = u - i0;
        for (int k = 0; k < count_; ++k) {
          const double* s = table_.data() + static_cast<size_t>(k) * sample_count_;
          out[k] = (1.0 - f) * s[i0] + f * s[i0 + 1];
        }
        break;
      }
    }
  }

  std::vector<double> eval(double t) const {
    std::vector<double> out(count_);
    eval_into(t, out.data());
    return out;
  }

 private:
  Kind kind_;
  int count_ = 0;
  int sample_count_ = 0;
  std::vector<double> table_;  // [k][sample]
};

inline std::vector<double> eval_basis(const MotionBasis& basis, double t_normalized) {
  return basis.eval(t_normalized);
}

// Per-pixel motion coefficients, K for the x displacement followed by K for y.
struct CoefficientField {
  int width = 0, height = 0, count = 0;  // count == K
  std::vector<double> alpha;             // [y][x][2K]

  CoefficientField() = default;
  CoefficientField(int width_, int height_, int count_)
      : width(width_), height(height_), count(count_) {
    require(width > 0 && height > 0 && count >= 1, "CoefficientField: bad dimensions");
    alpha.assign(static_cast<size_t>(width) * height * 2 * count, 0.0);
  }

  double* at(int y, int x) {
    return alpha.data() + (static_cast<size_t>(y) * width + x) * 2 * count;
  }
  const double* at(int y, int x) const {
    return alpha.data() + (static_cast<size_t>(y) * width + x) * 2 * count;
  }
};

// Continuous dense motion model: position(p, t) = p + Lambda(p) . g(tau).
struct TrajectoryField {
  MotionBasis basis;
  CoefficientField coefficients;
  double t0 = 0.0, t1 = 1.0;

  TrajectoryField(MotionBasis b, CoefficientField c, double t0_, double t1_)
      : basis(std::move(b)), coefficients(std::move(c)), t0(t0_), t1(t1_) {
    require(t1 > t0, "TrajectoryField: span must have positive duration");
    require(coefficients.count == basis.count(), "TrajectoryField: K mismatch");
  }

  double normalize_time(double t) const {
    require(t >= t0 && t <= t1, "TrajectoryField: time outside span");
    return (t - t0) / (t1 - t0);
  }
};

namespace detail {

inline double dot_k(const double* a, const double* g, int k) {
  double s = 0.0;
  for (int i = 0; i < k; ++i) s += a[i] * g[i];
  return s;
}

}  // namespace detail

// Displaced position of pixel (x, y) at time t.
inline std::pair<double, double> eval_trajectory(const TrajectoryField& field, int x, int y,
                                                 double t) {
  require(x >= 0 && x < field.coefficients.width && y >= 0 && y < field.coefficients.height,
          "eval_trajectory: pixel out of bounds");
  const double tau = field.normalize_time(t);
  std::vector<double> g(field.basis.count());
  field.basis.eval_into(tau, g.data());
  const double* a = field.coefficients.at(y, x);
  const int k = field.basis.count();
  return {x + detail::dot_k(a, g.data(), k), y + detail::dot_k(a + k, g.data(), k)};
}

// Dense displacement grid M(t); identically zero at t0 by anchoring.
inline GridD eval_flow_field(const TrajectoryField& field, double t) {
  const double tau = field.normalize_time(t);
  const int k = field.basis.count();
  std::vector<double> g(k);
  field.basis.eval_into(tau, g.data());
  GridD flow(field.coefficients.height, field.coefficients.width, 2, 0.0);
  for (int y = 0; y < flow.height(); ++y)
    for (int x = 0; x < flow.width(); ++x) {
      const double* a = field.coefficients.at(y, x);
      flow(y, x, 0) = detail::dot_k(a, g.data(), k);
      flow(y, x, 1) = detail::dot_k(a + k, g.data(), k);
    }
  return flow;
}

// Dense per-pixel tracks: positions[j] holds the absolute (x, y) position of
// every pixel at times[j].
struct TrackSet {
  int width = 0, height = 0;
  double t0 = 0.0, t1 = 1.0;       // span mapped to normalized time
  std::vector<double> times;       // sample times, within [t0, t1]
  std::vector<GridD> positions;    // one HxWx2 grid per time
};

struct FitResult {
  CoefficientField coefficients;
  GridD residual_rms;  // per pixel: sqrt(mean_j |track_j - fit_j|^2)
};

namespace detail {

// Dense K x K Cholesky; throws when the matrix is not positive definite.
inline void cholesky(std::vector<double>& m, int k, const std::string& what) {
  double max_diag = 0.0;
  for (int i = 0; i < k; ++i) max_diag = std::max(max_diag, m[i * k + i]);
  for (int j = 0; j < k; ++j) {
    double d = m[j * k + j];
    for (int p = 0; p < j; ++p) d -= m[j * k + p] * m[j * k + p];
    if (!(d > 1e-12 * max_diag))
      throw NumericalError(what + ": rank-deficient basis sample matrix (column " +
                           std::to_string(j) + ")");
    const double l = std::sqrt(d);
    m[j * k + j] = l;
    for (int i = j + 1; i < k; ++i) {
      double s = m[i * k + j];
      for (int p = 0; p < j; ++p) s -= m[i * k + p] * m[j * k + p];
      m[i * k + j] = s / l;
    }
  }
}

}  // namespace detail

// Per-pixel linear least squares for the motion coefficients. The basis
// sample matrix Theta (K x |T|) is shared by every pixel, so its Gram matrix
// is factorized once for the whole grid.
inline FitResult fit_coefficients(const MotionBasis& basis, const TrackSet& tracks) {
  const int k = basis.count();
  const int nt = static_cast<int>(tracks.times.size());
  require(nt >= 1, "fit_coefficients: no sample times");
  require(tracks.t1 > tracks.t0, "fit_coefficients: span must have positive duration");
  require(static_cast<int>(tracks.positions.size()) == nt,
          "fit_coefficients: times/positions length mismatch");
  for (const GridD& p : tracks.positions)
    require(p.height() == tracks.height && p.width() == tracks.width && p.channels() == 2,
            "fit_coefficients: position grids must be HxWx2");

  // Theta[k][j] = g_k(tau_j)
  std::vector<double> theta(static_cast<size_t>(k) * nt);
  for (int j = 0; j < nt; ++j) {
    const double t = tracks.times[j];
    require(t >= tracks.t0 && t <= tracks.t1, "fit_coefficients: sample time outside span");
    const double tau = (t - tracks.t0) / (tracks.t1 - tracks.t0);
    std::vector<double> g(k);
    basis.eval_into(tau, g.data());
    for (int i = 0; i < k; ++i) theta[static_cast<size_t>(i) * nt + j] = g[i];
  }

  // Gram = Theta Theta^T, factorized once.
  std::vector<double> gram(static_cast<size_t>(k) * k, 0.0);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      double s = 0.0;
      for (int m = 0; m < nt; ++m) s += theta[i * nt + m] * theta[j * nt + m];
      gram[i * k + j] = s;
    }
  detail::cholesky(gram, k, "fit_coefficients");

  auto solve_inplace = [&](double* b) {
    for (int i = 0; i < k; ++i) {
      double s = b[i];
      for (int p = 0; p < i; ++p) s -= gram[i * k + p] * b[p];
      b[i] = s / gram[i * k + i];
    }
    for (int i = k - 1; i >= 0; --i) {
      double s = b[i];
      for (int p = i + 1; p < k; ++p) s -= gram[p * k + i] * b[p];
      b[i] = s / gram[i * k + i];
    }
  };

  FitResult r{CoefficientField(tracks.width, tracks.height, k),
              GridD(tracks.height, tracks.width, 1, 0.0)};
  std::vector<double> dx(nt), dy(nt), bx(k), by(k);
  for (int y = 0; y < tracks.height; ++y)
    for (int x = 0; x < tracks.width; ++x) {
      for (int j = 0; j < nt; ++j) {
        dx[j] = tracks.positions[j](y, x, 0) - x;
        dy[j] = tracks.positions[j](y, x, 1) - y;
      }
      for (int i = 0; i < k; ++i) {
        double sx = 0.0, sy = 0.0;
        for (int j = 0; j < nt; ++j) {
          sx += theta[i * nt + j] * dx[j];
          sy += theta[i * nt + j] * dy[j];
        }
        bx[i] = sx;
        by[i] = sy;
      }
      solve_inplace(bx.data());
      solve_inplace(by.data());
      double* a = r.coefficients.at(y, x);
      for (int i = 0; i < k; ++i) {
        a[i] = bx[i];
        a[k + i] = by[i];
      }
      double res = 0.0;
      for (int j = 0; j < nt; ++j) {
        double ex = dx[j], ey = dy[j];
        for (int i = 0; i < k; ++i) {
          ex -= bx[i] * theta[i * nt + j];
          ey -= by[i] * theta[i * nt + j];
        }
        res += ex * ex + ey * ey;
      }
      r.residual_rms(y, x) = std::sqrt(res / nt);
    }
  return r;
}

// Stacked trajectory positions X = base + Lambda Theta for a list of pixels.
struct TrajectoryMatrix {
  int points = 0, times = 0;
  std::vector<double> x, y;  // [point][time]

  double& xs(int i, int j) { return x[static_cast<size_t>(i) * times + j]; }
  double& ys(int i, int j) { return y[static_cast<size_t>(i) * times + j]; }
  const double& xs(int i, int j) const { return x[static_cast<size_t>(i) * times + j]; }
  const double& ys(int i, int j) const { return y[static_cast<size_t>(i) * times + j]; }
};

// The matrix form of trajectory evaluation. Accumulation runs over k in
// ascending order, exactly like eval_trajectory, so the two agree bitwise.
inline TrajectoryMatrix trajectories_matrix(const TrajectoryField& field,
                                            const std::vector<std::pair<int, int>>& pixels,
                                            const std::vector<double>& times) {
  const int k = field.basis.count();
  TrajectoryMatrix m;
  m.points = static_cast<int>(pixels.size());
  m.times = static_cast<int>(times.size());
  m.x.assign(static_cast<size_t>(m.points) * m.times, 0.0);
  m.y.assign(static_cast<size_t>(m.points) * m.times, 0.0);

  std::vector<double> theta(static_cast<size_t>(k) * m.times);
  for (int j = 0; j < m.times; ++j) {
    const double tau = field.normalize_time(times[j]);
    std::vector<double> g(k);
    field.basis.eval_into(tau, g.data());
    for (int i = 0; i < k; ++i) theta[static_cast<size_t>(i) * m.times + j] = g[i];
  }
  for (int i = 0; i < m.points; ++i) {
    const auto [px, py] = pixels[i];
    require(px >= 0 && px < field.coefficients.width && py >= 0 &&
                py < field.coefficients.height,
            "trajectories_matrix: pixel out of bounds");
    const double* a = field.coefficients.at(py, px);
    for (int j = 0; j < m.times; ++j) {
      double sx = 0.0, sy = 0.0;
      for (int q = 0; q < k; ++q) {
        sx += a[q] * theta[q * m.times + j];
        sy += a[k + q] * theta[q * m.times + j];
      }
      m.xs(i, j) = px + sx;
      m.ys(i, j) = py + sy;
    }
  }
  return m;
}

}  // namespace evd
