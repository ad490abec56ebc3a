#pragma once

#include <utility>
#include <vector>

#include "latdyn/lattice.hpp"

namespace latdyn {

// Finite-range coupling V: offsets z with n x n real blocks V(z).
// The dynamics is u''(x) = -sum_z V(z) u(x - z).
struct ForceField {
  LatticeSpec lattice;
  std::vector<std::pair<Eigen::VectorXi, Eigen::MatrixXd>> terms;

  int radius() const {
    int r = 0;
    for (const auto& [z, m] : terms)
      r = std::max(r, z.cwiseAbs().maxCoeff());
    return r;
  }

  const Eigen::MatrixXd* at(const Eigen::VectorXi& z) const {
    for (const auto& [zz, m] : terms)
      if (zz == z) return &m;
    return nullptr;
  }
};

// Nearest-neighbor coupling with per-component spring constants gamma_k > 0
// and masses m_k >= 0:
//   V(0)     = diag(2 d gamma_k + m_k^2)
//   V(+-e_i) = diag(-gamma_k)
ForceField nn_force_field(const LatticeSpec& lat, const Eigen::VectorXd& gamma,
                          const Eigen::VectorXd& mass);

// V(-z) = V(z)^T for every stored offset, exactly.
bool has_even_symmetry(const ForceField& ff);

// V_hat(theta) = sum_z V(z) exp(i z . theta), Hermitized after an
// anti-Hermitian-residue check (tolerance 1e-12 relative).
Eigen::MatrixXcd fourier_symbol(const ForceField& ff, const Eigen::VectorXd& theta);

// JSON round-trip, schema {d, n, N, entries:[{offset:[...], matrix:[[...]]}]}
std::string force_field_to_json(const ForceField& ff);
ForceField force_field_from_json(const std::string& text);

}  // namespace latdyn
