#pragma once

#include "latdyn/kinetic.hpp"

namespace latdyn {

// The macroscopic Wigner matrix sampled on a periodic r-grid, carried for a
// chosen subset of dual points.  r lives on [0, box)^d with `cells` cells per
// axis (row major, axis 0 slowest, matching Grid).  The grid is periodic:
// the microscopic torus maps to a macroscopic torus under r = eps x.
struct WignerField {
  LatticeSpec lattice;
  double box = 0.0;
  int cells = 0;
  std::vector<Index> theta_indices;
  std::vector<std::vector<Eigen::MatrixXcd>> values;  // [theta slot][cell]

  double spacing() const { return box / cells; }
  Index cell_count() const {
    Index c = 1;
    for (int a = 0; a < lattice.d; ++a) c *= cells;
    return c;
  }
};

// Samples W(0; r, theta_k) of a profile at every cell center for the listed
// dual points.  Singular dual points are rejected (callers choose the subset).
WignerField initial_wigner_field(const SlowProfile& profile,
                                 const DispersionTable& table, int cells,
                                 const std::vector<Index>& theta_indices);

// Band-projected Wigner blocks under free transport.  Each (theta, band)
// carries its own scalar velocity field grad omega_sigma(theta_k), constant
// in r, so characteristics are rigid shifts of the r-torus.
struct TransportState {
  struct BandField {
    double omega = 0.0;
    Eigen::VectorXd grad;
    Eigen::MatrixXcd proj;
    std::vector<Eigen::MatrixXcd> block;  // per cell, n x n
  };

  LatticeSpec lattice;
  double box = 0.0;
  int cells = 0;
  double tau = 0.0;
  std::vector<Index> theta_indices;
  std::vector<std::vector<BandField>> fields;  // [theta slot][band]

  double spacing() const { return box / cells; }
  Index cell_count() const {
    Index c = 1;
    for (int a = 0; a < lattice.d; ++a) c *= cells;
    return c;
  }
};

// Projects a sampled Wigner field onto the bands: block = P_sigma W P_sigma
// per (theta, band, cell).  The blocks are then band-diagonal by construction;
// the projector identity P block P = block is re-verified to 1e-10.
TransportState project_wigner(const WignerField& w0, const DispersionTable& table);

// Exact method of characteristics: each band block field is shifted rigidly
// by dtau * grad omega and re-sampled on the grid with periodic multilinear
// interpolation.  One call from the initial state costs one interpolation;
// composing calls composes the (small) interpolation errors.  The cell sum of
// every block entry is conserved exactly by the shift (interpolation weights
// sum to one), checked to 1e-8 relative.
TransportState transport_evolve(const TransportState& state, double dtau);

// Independent first-order oracle for the same motion: unsplit donor-cell
// upwind differencing of d_tau f + grad omega . grad_r f = 0, stepping with
// sum_a |v_a| dt / h <= cfl (<= 0.9 enforced).  First-order accurate, so its
// distance to transport_evolve halves under grid doubling; used only to
// cross-check the characteristic solver against the actual equation.
TransportState transport_pde_oracle(const TransportState& state, double dtau,
                                    double cfl = 0.9);

// h^d-weighted L1 distance: sum over (theta, band, cell) of the Frobenius
// norm of the block difference.  Shapes must match.
double transport_l1_distance(const TransportState& a, const TransportState& b);

// h^d-weighted integral of Re tr(block) over (theta, band, cell); the
// conserved quantity of the transport flow.
double transport_total_trace(const TransportState& state);

}  // namespace latdyn
