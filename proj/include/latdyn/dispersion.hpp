#pragma once

#include <string>
#include <vector>

#include "latdyn/force_field.hpp"

namespace latdyn {

// One dispersion band at a dual grid point: eigenvalue omega of
// Omega(theta) = V_hat(theta)^(1/2) with its spectral projection,
// group velocity and Hessian (central finite differences on the grid).
struct Band {
  double omega = 0.0;
  int mult = 1;                 // eigenvalue multiplicity after merging
  Eigen::MatrixXcd proj;        // n x n spectral projection
  Eigen::VectorXd grad;         // d-vector, gradient of omega
  Eigen::MatrixXd hess;         // d x d Hessian of omega
  double hess_det = 0.0;
};

struct DispersionOptions {
  double degeneracy_rel_tol = 1e-8;  // merge bands closer than tol * max omega
  double singular_tol = 1e-8;        // omega below this marks a singular mode
};

struct DispersionTable {
  LatticeSpec lattice;
  DispersionOptions opts;
  std::vector<Eigen::MatrixXcd> symbol;      // V_hat(theta_k), n x n Hermitian
  std::vector<std::vector<Band>> bands;      // per grid point, ascending omega
  std::vector<std::uint8_t> singular;        // any band with omega < singular_tol
  double max_omega = 0.0;

  Grid grid() const { return Grid(lattice); }
};

DispersionTable dispersion_table(const ForceField& ff, const DispersionOptions& opts = {});

// sum_sigma fn(omega_sigma) Proj_sigma at one grid point
Eigen::MatrixXcd band_function(const std::vector<Band>& bands, int n,
                               const std::function<double(double)>& fn);

// Conditions on the coupling, checked on the dual grid:
//   E1 finite range (exponential decay trivially)   E2 V(-z) = V(z)^T
//   E3 V_hat >= 0 (clamp window [-1e-10, 0))        E4 det Hess omega not = 0
//   E5 omega_s +- omega_s' nonconstant              E6 ||V_hat^-1|| integrable
struct ConditionReport {
  struct Entry {
    bool passed = false;
    bool applicable = true;
    double margin = 0.0;
    std::string witness;
  };
  Entry e1, e2, e3, e4, e5, e6;
  double e3_min_eig = 0.0;
  double e4_degenerate_fraction = 0.0;
  double e6_grid_mean = 0.0;        // mean of ||V_hat^-1|| off the singular set
  double e6_masked_fraction = 0.0;  // fraction of grid with det V_hat below tol
  bool e6_divergence_suspected = false;

  bool all_passed() const {
    for (const Entry* e : {&e1, &e2, &e3, &e4, &e5, &e6})
      if (e->applicable && !e->passed) return false;
    return true;
  }
};

ConditionReport validate_conditions(const ForceField& ff, const DispersionTable& table);

// Refinement probe for E6: rebuilds the table at extent N and 2N and flags
// divergence when the masked-grid mean of ||V_hat^-1|| grows by more than 1.5x.
ConditionReport validate_conditions_refined(const ForceField& ff, int probe_N = 64);

std::string condition_report_to_json(const ConditionReport& r);

// Critical set: band crossings, zeros of det Hess(omega), zeros of the
// axis curvatures d^2 omega / d theta_i^2, and the zero set of det V_hat,
// dilated to all dual points within Euclidean torus distance delta.
struct CriticalSetOptions {
  double hess_det_rel_tol = 1e-2;    // |det Hess| below tol * grid max
  double curvature_rel_tol = 1e-2;   // |d2 omega/d theta_i^2| below tol * grid max
  double symbol_det_rel_tol = 1e-8;  // det V_hat below tol * grid max
};

// Euclidean torus distance from each dual grid point to the critical core set
std::vector<double> critical_set_distance(const DispersionTable& table,
                                          const CriticalSetOptions& opts = {});

std::vector<std::uint8_t> critical_set_mask(const DispersionTable& table, double delta,
                                            const CriticalSetOptions& opts = {});

}  // namespace latdyn
