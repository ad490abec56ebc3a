#pragma once

#include "latdyn/dispersion.hpp"
#include "latdyn/fft.hpp"

namespace latdyn {

// Time-t solution operator in the dual picture,
//   G_hat_t = [ cos(Omega t)          sin(Omega t) Omega^-1 ]
//             [ -Omega sin(Omega t)   cos(Omega t)          ]
// assembled bandwise; sin(omega t)/omega continues to t at omega = 0.
struct PropagatorTable {
  LatticeSpec lattice;
  double t = 0.0;
  std::vector<Eigen::MatrixXcd> blocks;  // 2n x 2n per dual grid point
};

PropagatorTable propagator_table(const DispersionTable& table, double t);

// regularized sin(omega t) / omega
inline double sinc_omega(double omega, double t) {
  double x = omega * t;
  if (std::abs(x) < 1e-8) return t * (1.0 - x * x / 6.0);
  return std::sin(x) / omega;
}

// spectral step: exact up to roundoff, any t in one application
void evolve(PhaseField& field, const PropagatorTable& prop);

// H = 1/2 <v,v> + 1/2 <Vu,u>, position space (finite-range convolution)
double energy(const PhaseField& field, const ForceField& ff);

// same quantity through Parseval, 1/(2 N^d) sum_k |v_hat|^2 + u_hat* V_hat u_hat
double energy_fourier(const PhaseField& field, const DispersionTable& table);

}  // namespace latdyn
