#pragma once

#include "latdyn/dispersion.hpp"
#include "latdyn/profile.hpp"
#include "latdyn/spectrum.hpp"

namespace latdyn {

// Closed-form predictions for the long-time / small-epsilon statistics of the
// harmonic flow: the time-averaged limit covariance of a homogeneous ensemble,
// the macroscopic Wigner matrix of a slowly varying one, its free-transport
// evolution, and the locally stationary covariance seen near a macroscopic
// point at kinetic times.

// Covariance table on the dual grid.  Entries at grid points where a band
// frequency (numerically) vanishes are zeroed and flagged instead of being
// extrapolated; the acoustic set has measure zero but a finite grid can land
// on it exactly (theta = 0 for a massless chain, for instance).
struct LimitCovariance {
  LatticeSpec lattice;
  std::vector<Eigen::MatrixXcd> q;  // 2n x 2n per dual grid point
  std::vector<char> masked;         // 1 = singular point, q left zero

  Index masked_count() const {
    Index c = 0;
    for (char m : masked) c += (m != 0);
    return c;
  }
};

// The block matrix C = [ 0, Omega^-1; -Omega, 0 ] assembled bandwise.
// C generates the phase rotation of the flow: G_hat_t = cos(Omega t) + sin(Omega t) C,
// and C^2 = -1.  Conserved (band-diagonal) covariances commute with it.
Eigen::MatrixXcd quadrature_matrix(const std::vector<Band>& bands, Index n);

// Long-time limit of the covariance evolved from a homogeneous ensemble:
// the band projection of M0 = 1/2 (q0 + C q0 C*), applied blockwise to the
// four n x n blocks.  Oscillatory cross-band terms average to zero; what
// survives is the part that commutes with the flow.  The result is the
// unique band-diagonal fixed point reachable from q0, so applying the map
// twice changes nothing, and it is Hermitian PSD whenever q0 is (enforced).
LimitCovariance limit_covariance(const HomogeneousSpectrum& q0,
                                 const DispersionTable& table);

// Macroscopic Wigner matrix of a slowly modulated ensemble at time zero,
//   W(0; r, theta) = 1/2 ( Om^1/2 R00 Om^1/2 + Om^-1/2 R11 Om^-1/2
//                          + i Om^1/2 R01 Om^-1/2 - i Om^-1/2 R10 Om^1/2 ),
// with R = profile density at (r, theta_k) and all Omega powers bandwise.
// This is exactly the dual density of E[ conj(a(x+y)) (x) a(x) ] for the
// ladder-field a = (Om^1/2 u + i Om^-1/2 v)/sqrt(2), i.e. what the windowed
// Wigner estimator targets.  Hermitian by construction when the profile
// satisfies the adjoint relation R01 = R10*.  Throws on a singular point.
Eigen::MatrixXcd initial_wigner(const SlowProfile& profile,
                                const DispersionTable& table,
                                const Eigen::VectorXd& r, Index k);

// Band-projected Wigner matrix after free transport for macroscopic time tau,
//   W^p(tau; r, theta_k) = sum_sigma P_sigma W(0; r - tau grad omega_sigma, theta_k) P_sigma,
// evaluated by exact characteristics (the profile is evaluated at the
// back-traced point, no grid).  masked[k] = 1 marks singular points (w zero).
struct WignerPrediction {
  LatticeSpec lattice;
  double tau = 0.0;
  std::vector<Eigen::MatrixXcd> w;  // n x n per dual grid point
  std::vector<char> masked;
};

WignerPrediction wigner_prediction(const SlowProfile& profile,
                                   const DispersionTable& table, double tau,
                                   const Eigen::VectorXd& r);

// Covariance of the locally stationary Gaussian field seen near r/epsilon at
// kinetic time tau/epsilon.  Reference construction per band sigma:
//   w+ = P_sigma(theta)  W(0; r - tau grad omega, theta)  P_sigma(theta)
//   w- = elementwise conjugate of the same object at -theta (where the group
//        velocity has the opposite sign, so the trace-back lands at r + tau grad omega)
//   q00 += (w+ + w-) / (2 omega),   q11 += omega (w+ + w-) / 2,
//   q01 += -i/2 (w+ - w-),          q10 -= -i/2 (w+ - w-).
// A second, independently coded form assembles the same object directly from
// the profile density: R_pm = 1/2 (R(r + tau grad omega) +- R(r - tau grad omega)),
// M_+ = 1/2 (R_+ + C R_+ C*), M_- = i/2 (C R_- - R_- C*), summed band-projected.
// The two are checked against each other to 1e-8 at every grid point; any
// disagreement is a transcription bug and throws.  The result is equipartitioned
// (Omega q00 = Omega^-1 q11) and invariant under the flow.
LimitCovariance local_covariance(const SlowProfile& profile,
                                 const DispersionTable& table, double tau,
                                 const Eigen::VectorXd& r);

// Max Frobenius deviation over the grid of G_hat_t q G_hat_t* from q,
// relative to max(1, ||q||_F); masked points skipped.  Band-diagonal
// equipartitioned covariances are invariant, so this vanishes (to roundoff)
// on limit_covariance / local_covariance output and is O(1) on generic input.
double stationarity_check(const LimitCovariance& q, const DispersionTable& table,
                          double t);

// Max over the grid of || Omega q00 - Omega^-1 q11 ||_F, the residue of the
// equipartition identity tying the two diagonal blocks of a flow-invariant
// covariance.  Zero (to roundoff) for limit/local covariances.
double equipartition_residue(const LimitCovariance& q,
                             const DispersionTable& table);

}  // namespace latdyn
