#pragma once

#include <memory>

#include "latdyn/spectrum.hpp"

namespace latdyn {

// Macroscopic covariance profile R_hat(r, theta): a 2n x 2n spectral density
// that varies on the macroscopic scale r = eps * x. Profiles are periodic in
// r with period `box` (the macroscopic side length eps * N) so that the
// microscopic torus closes up; callers pass arbitrary real r and the profile
// wraps it.
//
// Conditions on admissible profiles (checked by validate_profile):
//   I1: position-space kernel decays like (1+|x|)^-gamma with gamma > d
//   I2: diagonal blocks Hermitian, R01 = R10^*
//   I3: full 2n x 2n matrix PSD at every (r, theta)
//   I4: finite-difference gradient in r bounded on bounded sets
class SlowProfile {
 public:
  virtual ~SlowProfile() = default;

  virtual int components() const = 0;

  // macroscopic period along each r axis
  virtual double box() const = 0;

  // R_hat(r, theta_k) with band data taken from `table` at grid index k
  virtual Eigen::MatrixXcd density(const Eigen::VectorXd& r, const DispersionTable& table,
                                   Index k) const = 0;

  virtual std::string describe() const = 0;

  // metadata used by validation reports; defaults are loose a priori bounds
  virtual double lipschitz_bound() const { return 1e3; }
  virtual double decay_exponent() const { return 0.0; }  // 0 = unknown, fit it
};

// How a scalar phase-space weight S(r, theta) is promoted to blocks:
//   gibbs:       q00 = S V_hat^-1,   q11 = S I        (Wigner S / omega)
//   occupation:  q00 = S Omega^-1,   q11 = S Omega    (Wigner S itself)
// Both are band diagonal and equipartitioned, Omega q00 = Omega^-1 q11.
enum class ProfileStructure { gibbs, occupation };

// Profiles of the form R_hat(r, theta) = S(r, theta) * (fixed block shape)
// with scalar S > 0; covers all stock profiles.
class ScalarWeightProfile : public SlowProfile {
 public:
  ScalarWeightProfile(int n, double box, ProfileStructure structure)
      : n_(n), box_(box), structure_(structure) {
    require(n >= 1 && box > 0, "profile: need n >= 1 and box > 0");
  }

  int components() const override { return n_; }
  double box() const override { return box_; }
  Eigen::MatrixXcd density(const Eigen::VectorXd& r, const DispersionTable& table,
                           Index k) const override;

  // scalar weight; theta entries in [0, 2 pi), must be even in theta
  virtual double weight(const Eigen::VectorXd& r, const Eigen::VectorXd& theta) const = 0;

  ProfileStructure structure() const { return structure_; }

 protected:
  // componentwise wrap into [0, box)
  double wrap(double x) const {
    double y = std::fmod(x, box_);
    return y < 0 ? y + box_ : y;
  }

 private:
  int n_ = 1;
  double box_ = 1.0;
  ProfileStructure structure_ = ProfileStructure::gibbs;
};

// T(r) = T0 (1 + a cos(2 pi (r_axis - phase) / box)), Gibbs blocks.
std::unique_ptr<SlowProfile> thermal_gradient_profile(int n, double box, double T0, double a,
                                                      int axis = 0, double phase = 0.0);

// Smoothed indicator step between T_low and T_high: T_high on a plateau of
// half-width `half_width` around `center` along `axis`, T_low outside, with
// C^2 transitions of width `transition`. Gibbs blocks.
std::unique_ptr<SlowProfile> step_profile(int n, double box, double T_low, double T_high,
                                          double center, double half_width, double transition,
                                          int axis = 0);

// Wave packet: occupation-weighted profile whose Wigner function is exactly
//   S(r, theta) = T0 + A env(r) [vm(theta_1 - theta_star) + vm(theta_1 + theta_star)]
// with periodic Gaussian-like factors env(r) = exp(kappa_r (cos(2 pi (r_1 - r0)/box) - 1))
// and vm(x) = exp(kappa_theta (cos x - 1)). The +-theta_star pair keeps S even.
std::unique_ptr<SlowProfile> wave_packet_profile(int n, double box, double T0, double A,
                                                 double r0, double kappa_r, double theta_star,
                                                 double kappa_theta, int axis = 0);

// Constant-in-r Gibbs profile at temperature T (degenerates to the
// homogeneous Gibbs density; used for consistency tests).
std::unique_ptr<SlowProfile> constant_profile(int n, double box, double T,
                                              ProfileStructure structure = ProfileStructure::gibbs);

// Full matrix tabulation on a uniform periodic (r, theta) product grid with
// multilinear interpolation. values is row-major over (r axes..., theta axes...)
// with shape_r[i] and shape_theta[i] points per axis. Used for config-driven
// profiles and for deliberately broken fixtures in tests.
class TabulatedProfile : public SlowProfile {
 public:
  TabulatedProfile(int d, int n, double box, std::vector<int> shape_r,
                   std::vector<int> shape_theta, std::vector<Eigen::MatrixXcd> values);

  int components() const override { return n_; }
  double box() const override { return box_; }
  Eigen::MatrixXcd density(const Eigen::VectorXd& r, const DispersionTable& table,
                           Index k) const override;
  std::string describe() const override { return "tabulated"; }

  // interpolate at explicit (r, theta), independent of any grid
  Eigen::MatrixXcd value_at(const Eigen::VectorXd& r, const Eigen::VectorXd& theta) const;

 private:
  int d_ = 1, n_ = 1;
  double box_ = 1.0;
  std::vector<int> shape_r_, shape_theta_;
  std::vector<Eigen::MatrixXcd> values_;
};

// JSON profile factory. Schema: {"kind": "thermal-gradient" | "step" |
// "wave-packet" | "constant" | "tabulated", "n": int, "box": real, ...}
// with per-kind parameter fields mirroring the constructors above.
std::unique_ptr<SlowProfile> profile_from_json(const std::string& text);

// White-noise marginals fed through the spectral coloring: gaussian draws
// standard normals, uniform_filtered draws centered unit-variance uniforms
// (strictly non-Gaussian input with the same second moments).
enum class NoiseKind { gaussian, uniform_filtered };

// Scale family for slow-variation sampling: blocks of side N_eps on a torus
// of side N, block side targeting eps^-beta.
struct SlowFamilyConfig {
  double eps = 0.0;
  double beta = 0.8;
  int block_side = 0;  // N_eps, even, divides N
  NoiseKind noise = NoiseKind::gaussian;
};

// Even divisor of N nearest to eps^-beta (ties toward the larger side).
int slow_block_side(int N, double eps, double beta);

SlowFamilyConfig make_slow_family_config(int N, double eps, double beta, NoiseKind noise);

// Profile admissibility report (I1-I4), evaluated at the given macroscopic
// sample points on the dual grid of `table`.
struct ProfileReport {
  bool adjoint_ok = false;       // I2: R01 = R10^* and diagonal blocks Hermitian
  double adjoint_residue = 0.0;
  bool psd_ok = false;           // I3
  double min_eigenvalue = 0.0;
  bool decay_ok = false;         // I1: fitted gamma > d
  double fitted_gamma = 0.0;
  bool gradient_ok = false;      // I4: finite-difference gradient finite
  double gradient_bound = 0.0;
  bool all_passed() const { return adjoint_ok && psd_ok && decay_ok && gradient_ok; }
};

ProfileReport validate_profile(const SlowProfile& profile, const DispersionTable& table,
                               const std::vector<Eigen::VectorXd>& r_samples);

std::string profile_report_to_json(const ProfileReport& r);

}  // namespace latdyn
