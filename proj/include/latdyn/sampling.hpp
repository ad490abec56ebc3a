#pragma once

#include "latdyn/profile.hpp"

namespace latdyn {

// Finitely supported deterministic pair field used as a test functional,
// <Y, Psi> = sum_s wu_s . u(x_s) + wv_s . v(x_s).
struct PairProbe {
  std::vector<Eigen::VectorXi> sites;  // d-vectors
  std::vector<Eigen::VectorXd> wu;     // n-vector per site
  std::vector<Eigen::VectorXd> wv;
};

double probe_apply(const PairProbe& probe, const PhaseField& y);

// Draws real fields with E[Y] = 0 and prescribed translation-invariant
// spectral density: white noise per site, transformed to the dual grid,
// colored by the Hermitian square root of q_hat(theta_k), transformed back.
// Conjugate symmetry holds automatically because the noise is real, so the
// output is exactly real. Pure in (seed, counter): same arguments, same field.
class SpectrumSampler {
 public:
  explicit SpectrumSampler(const HomogeneousSpectrum& spec,
                           NoiseKind noise = NoiseKind::gaussian);

  const LatticeSpec& lattice() const { return lattice_; }

  PhaseField draw(std::uint64_t seed, std::uint64_t counter) const;

  // Coefficients c with <Y, Psi> = sum_alpha c_alpha w_alpha over the white
  // noise coordinates (sites x 2n); powers of c drive closed-form cumulant
  // predictions for the filtered noise.
  Eigen::ArrayXXd probe_coefficients(const PairProbe& probe) const;

 private:
  LatticeSpec lattice_;
  NoiseKind noise_;
  std::vector<Eigen::MatrixXcd> color_;  // sqrt(q_hat) per dual point
};

// Slow-variation sampler: the torus splits into cubes of side cfg.block_side;
// each cube carries an independent homogeneous field whose spectrum is the
// profile frozen at the cube center, R_hat(eps M, .) on the cube's own dual
// grid. Locally translation invariant by construction, independent across
// cubes, strictly non-Gaussian under uniform_filtered noise.
class SlowSampler {
 public:
  SlowSampler(const SlowProfile& profile, const ForceField& ff, const SlowFamilyConfig& cfg);

  const LatticeSpec& lattice() const { return lattice_; }
  int block_side() const { return block_; }
  Index cube_count() const { return ncubes_; }

  // macroscopic position of the cube's center site, r = eps * M
  Eigen::VectorXd cube_center(Index cube) const;

  PhaseField draw(std::uint64_t seed, std::uint64_t counter) const;

  // noise-coordinate coefficients of a probe, as in SpectrumSampler
  Eigen::ArrayXXd probe_coefficients(const PairProbe& probe) const;

 private:
  Index cube_origin_flat(Index cube, int* origin) const;

  LatticeSpec lattice_;       // full torus
  LatticeSpec cube_lattice_;  // one cube
  SlowFamilyConfig cfg_;
  int block_ = 0;
  Index ncubes_ = 0;
  int cubes_per_axis_ = 0;
  std::vector<std::vector<Eigen::MatrixXcd>> color_;  // [cube][dual point]
};

}  // namespace latdyn
