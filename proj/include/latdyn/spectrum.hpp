#pragma once

#include "latdyn/dispersion.hpp"

namespace latdyn {

// Spectral density q_hat_0(theta_k) of a homogeneous measure: 2n x 2n
// Hermitian PSD blocks
//   [ q00 q01 ]     q00 = <u u>, q11 = <v v>, q01 = q10^* = <u v>,
//   [ q10 q11 ]
// with the reality pairing q_hat(-theta) = conj(q_hat(theta)).
struct HomogeneousSpectrum {
  LatticeSpec lattice;
  std::vector<Eigen::MatrixXcd> q;  // per dual grid point

  Eigen::MatrixXcd block(Index k, int i, int j) const {
    int n = lattice.n;
    return q[k].block(i * n, j * n, n, n);
  }
};

struct SpectrumReport {
  double min_eigenvalue = 0.0;      // PSD margin over the grid
  double reality_residue = 0.0;     // max |q(-theta) - conj q(theta)|
  double energy_density = 0.0;      // grid mean of tr(q00 + q11)
  bool ok = false;
};

SpectrumReport validate_spectrum(const HomogeneousSpectrum& s);

// Gibbs density at temperature T: q00 = T V_hat^-1, q11 = T I, q01 = 0.
// The dynamics leaves it invariant. Requires omega >= singular_tol everywhere.
HomogeneousSpectrum gibbs_spectrum(const DispersionTable& table, double T);

// Equipartition density with flat phonon occupation: q00 = T Omega^-1,
// q11 = T Omega, q01 = 0; its Wigner function is T at every theta.
HomogeneousSpectrum flat_occupation_spectrum(const DispersionTable& table, double T);

// Gibbs deformed by a nonstationary u-weight: q00 = T (1 + eta cos theta_1) V_hat^-1,
// q11 = T I. For eta != 0 this is out of equilibrium (q00 != Omega^-2 q11).
HomogeneousSpectrum nonequilibrium_spectrum(const DispersionTable& table, double T, double eta);

// Hermitian PSD square root via eigendecomposition; eigenvalues in
// [-1e-10, 0) are clamped to zero, lower ones throw.
Eigen::MatrixXcd hermitian_sqrt(const Eigen::MatrixXcd& m);

}  // namespace latdyn
