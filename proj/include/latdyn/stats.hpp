#pragma once

#include "latdyn/sampling.hpp"

namespace latdyn {

// Samples enter estimators through a pure indexed source: src(i) must return
// the same field for the same i regardless of call order, so batteries can
// stream arbitrarily many samples and stay reproducible under any schedule.
using SampleSource = std::function<PhaseField(Index)>;

// Streaming mean/scatter accumulator over fixed-length complex statistics.
// Samples are grouped in chunks of 64 in arrival order and the chunk sums are
// combined with a pairwise tree, so the result depends only on the sample
// order, not on how the pushes were scheduled.
class ChunkedMoments {
 public:
  explicit ChunkedMoments(Index dim);
  void push(const Eigen::VectorXcd& x);
  Index count() const { return count_; }
  McMoments finalize() const;

 private:
  static constexpr Index kChunk = 64;
  Index dim_ = 0;
  Index count_ = 0;
  std::vector<Eigen::VectorXcd> sums_;
  std::vector<Eigen::VectorXd> re2_, im2_;
  Eigen::VectorXcd open_;
  Eigen::VectorXd open_re2_, open_im2_;
  Index open_n_ = 0;
};

// Pair correlation estimate anchored at a base site: per offset a the
// 2n x 2n mean of Z(x0+a) Z(x0)^T with Z = (u, v) stacked, plus entrywise
// standard errors.
struct CovarianceEstimate {
  LatticeSpec lattice;
  Eigen::VectorXi base;
  std::vector<Eigen::VectorXi> offsets;
  std::vector<Eigen::MatrixXd> mean;  // 2n x 2n per offset
  std::vector<Eigen::MatrixXd> se;
  Index count = 0;

  // n x n sub-block, i, j in {0 (u), 1 (v)}
  Eigen::MatrixXd block(std::size_t o, int i, int j) const {
    int n = lattice.n;
    return mean[o].block(i * n, j * n, n, n);
  }
};

CovarianceEstimate estimate_covariance(Index nsamples, const SampleSource& src,
                                       const Eigen::VectorXi& x0,
                                       const std::vector<Eigen::VectorXi>& offsets);

// a-field: a(x) = the inverse transform of (Omega^{1/2} u_hat + i Omega^{-1/2} v_hat)/sqrt(2),
// the complex normal coordinate whose free evolution is a phase e^{-i omega t}.
// Singular modes (omega below the table tolerance) abort unless mask_singular,
// in which case they are zeroed.
Eigen::ArrayXXcd a_field(const PhaseField& y, const DispersionTable& table,
                         bool mask_singular = false);

enum class Taper { boxcar, triangular };

// taper weight for an even offset vector y at window radius y_max
double taper_weight(const Eigen::VectorXi& y, int y_max, Taper taper);

// Scaled Wigner estimate at macroscopic (tau, r): the even-offset transform
//   W(theta_k) = sum_{y even, |y|_inf <= y_max} e^{i theta_k . y} taper(y)
//                  E[ a^*(x0 + y/2) (x) a(x0 - y/2) ],   x0 = floor(r / eps),
// with per-theta standard errors from the per-sample scatter of the full
// transform (cross-offset covariance folded in).
struct WignerEstimate {
  LatticeSpec lattice;
  double tau = 0.0, eps = 0.0;
  Eigen::VectorXd r;
  Eigen::VectorXi base;
  int y_max = 0;
  Taper taper = Taper::triangular;
  Index count = 0;
  std::vector<Eigen::MatrixXcd> w;      // n x n per dual grid point
  std::vector<Eigen::MatrixXd> se_re;   // entrywise standard errors
  std::vector<Eigen::MatrixXd> se_im;
};

WignerEstimate wigner_estimate(Index nsamples, const SampleSource& src,
                               const DispersionTable& table, double tau, double eps,
                               const Eigen::VectorXd& r, int y_max,
                               Taper taper = Taper::triangular);

// Pushes a theoretical Wigner function through the identical estimation
// window (even offsets, truncation, taper), making theory and estimate
// share the same aliasing and leakage and therefore directly comparable.
std::vector<Eigen::MatrixXcd> windowed_wigner_theory(
    const std::vector<Eigen::MatrixXcd>& w_theory, const DispersionTable& table, int y_max,
    Taper taper = Taper::triangular);

// Conjugate-free pair moments E[a(x0+a) (x) a(x0)]; under the free flow these
// rotate with e^{-i(omega+omega')t} and average to zero, unlike a^* (x) a.
struct ComplexPairEstimate {
  Eigen::VectorXi base;
  std::vector<Eigen::VectorXi> offsets;
  std::vector<Eigen::MatrixXcd> mean;  // n x n per offset
  std::vector<Eigen::MatrixXd> se_re, se_im;
  Index count = 0;
};

ComplexPairEstimate aa_covariance(Index nsamples, const SampleSource& src,
                                  const DispersionTable& table, const Eigen::VectorXi& x0,
                                  const std::vector<Eigen::VectorXi>& offsets,
                                  bool mask_singular = false);

// Normalized excess kurtosis of xi = <Y, Psi>:
//   excess = E[xi^4] / (3 E[xi^2]^2) - 1,
// zero for Gaussian Y; standard error from a seeded bootstrap over samples.
struct KurtosisResult {
  double excess = 0.0;
  double se = 0.0;
  double variance = 0.0;  // E[xi^2]
  Index count = 0;
  double z() const { return excess / se; }
};

std::vector<KurtosisResult> fourth_cumulant_test(Index nsamples, const SampleSource& src,
                                                 const std::vector<PairProbe>& probes,
                                                 std::uint64_t bootstrap_seed,
                                                 int bootstrap_rounds = 200);

// |E e^{i<Y,Psi>} - e^{-Q/2}| with the scatter of the empirical mean.
struct CharFuncResult {
  Complex empirical{0.0, 0.0};
  double se = 0.0;
  double theory = 0.0;
  double difference = 0.0;
  Index count = 0;
};

CharFuncResult characteristic_functional(Index nsamples, const SampleSource& src,
                                         const PairProbe& probe, double theory_Q);

// Max covariance magnitude across a time ladder with a trend test: passes
// when the fitted slope of max|Q_t| vs t stays below 3 standard errors.
struct BoundCheck {
  std::vector<double> ts;
  std::vector<double> max_norm;
  std::vector<double> max_se;
  double slope = 0.0;
  double slope_se = 0.0;
  bool ok = false;
};

BoundCheck uniform_bound_check(const std::vector<std::pair<double, CovarianceEstimate>>& pairs);

// Empirical equipartition probe at a site: mean over samples of
// u . (V * u)(x0) versus |v(x0)|^2; their difference vanishes for
// band-diagonal equipartitioned states.
struct EquipartitionCheck {
  double potential = 0.0;  // mean u . (V*u)(x0)
  double kinetic = 0.0;    // mean |v(x0)|^2
  double diff = 0.0;
  double se = 0.0;         // scatter of the per-sample difference
  Index count = 0;
  double z() const { return diff / se; }
};

EquipartitionCheck equipartition_check(Index nsamples, const SampleSource& src,
                                       const ForceField& ff, const Eigen::VectorXi& x0);

}  // namespace latdyn
