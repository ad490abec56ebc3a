#pragma once

#include <array>
#include <cmath>

#include "latdyn/util.hpp"

namespace latdyn {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

// Finite torus {0..N-1}^d carrying an n-component displacement field.
struct LatticeSpec {
  int d = 1;   // spatial dimension
  int n = 1;   // field components per site
  int N = 8;   // sites per axis (even, >= 8)
};

inline void validate(const LatticeSpec& s) {
  require(s.d >= 1 && s.d <= 4, "lattice: d must be in 1..4");
  require(s.n >= 1, "lattice: n must be >= 1");
  require(s.N >= 8 && s.N % 2 == 0, "lattice: N must be even and >= 8");
}

// Row-major indexing (axis 0 slowest), matching FFTW's rank-d layout.
class Grid {
 public:
  explicit Grid(const LatticeSpec& s) : spec_(s) {
    validate(s);
    npts_ = 1;
    for (int a = 0; a < s.d; ++a) npts_ *= s.N;
    stride_[s.d - 1] = 1;
    for (int a = s.d - 2; a >= 0; --a) stride_[a] = stride_[a + 1] * s.N;
  }

  const LatticeSpec& spec() const { return spec_; }
  int dim() const { return spec_.d; }
  int comps() const { return spec_.n; }
  int extent() const { return spec_.N; }
  Index size() const { return npts_; }

  void coords(Index k, int* x) const {
    for (int a = 0; a < spec_.d; ++a) {
      x[a] = int(k / stride_[a]);
      k -= Index(x[a]) * stride_[a];
    }
  }

  Index flat(const int* x) const {
    Index k = 0;
    for (int a = 0; a < spec_.d; ++a) k += Index(mod(x[a])) * stride_[a];
    return k;
  }

  int mod(int x) const {
    int m = x % spec_.N;
    return m < 0 ? m + spec_.N : m;
  }

  // shift site k by `step` along `axis` with wraparound
  Index neighbor(Index k, int axis, int step) const {
    int x[4];
    coords(k, x);
    x[axis] += step;
    return flat(x);
  }

  // shift site k by an offset vector
  Index shifted(Index k, const int* z) const {
    int x[4];
    coords(k, x);
    for (int a = 0; a < spec_.d; ++a) x[a] += z[a];
    return flat(x);
  }

  // dual point theta_k = 2 pi x / N, componentwise in [0, 2 pi)
  Eigen::VectorXd theta(Index k) const {
    Eigen::VectorXd th(spec_.d);
    int x[4];
    coords(k, x);
    for (int a = 0; a < spec_.d; ++a) th[a] = kTwoPi * double(x[a]) / double(spec_.N);
    return th;
  }

  // index of -theta_k on the dual grid
  Index conj_index(Index k) const {
    int x[4];
    coords(k, x);
    int y[4];
    for (int a = 0; a < spec_.d; ++a) y[a] = (spec_.N - x[a]) % spec_.N;
    return flat(y);
  }

  // signed minimal-image coordinate in [-N/2, N/2)
  int min_image(int x) const {
    int m = mod(x);
    return m >= spec_.N / 2 ? m - spec_.N : m;
  }

  // Euclidean torus distance between dual points k and l (in theta units)
  double dual_distance(Index k, Index l) const {
    int xk[4], xl[4];
    coords(k, xk);
    coords(l, xl);
    double h = kTwoPi / spec_.N;
    double s = 0;
    for (int a = 0; a < spec_.d; ++a) {
      double dd = h * min_image(xk[a] - xl[a]);
      s += dd * dd;
    }
    return std::sqrt(s);
  }

  // Euclidean length of the minimal-image site offset
  double site_radius(Index k) const {
    int x[4];
    coords(k, x);
    double s = 0;
    for (int a = 0; a < spec_.d; ++a) {
      double dd = double(min_image(x[a]));
      s += dd * dd;
    }
    return std::sqrt(s);
  }

 private:
  LatticeSpec spec_;
  Index npts_ = 0;
  std::array<Index, 4> stride_{};
};

// Real phase-space sample: u and v are (sites x components), column per
// component, sites in grid order.
struct PhaseField {
  LatticeSpec lattice;
  Eigen::ArrayXXd u;
  Eigen::ArrayXXd v;

  static PhaseField zero(const LatticeSpec& s) {
    Grid g(s);
    PhaseField f;
    f.lattice = s;
    f.u = Eigen::ArrayXXd::Zero(g.size(), s.n);
    f.v = Eigen::ArrayXXd::Zero(g.size(), s.n);
    return f;
  }
};

}  // namespace latdyn
