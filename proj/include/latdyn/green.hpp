#pragma once

#include <optional>

#include "latdyn/evolution.hpp"

namespace latdyn {

// Position-space kernel of the solution operator, Y(x,t) = sum_y G_t(x-y) Y(y,0),
// with an optional split G = G^f + G^g along a neighborhood of the critical
// set: f = 1 within delta/2 of the set, 0 beyond delta (C^2 taper), g = 1 - f.
struct GreenFunction {
  LatticeSpec lattice;
  double t = 0.0;
  std::vector<Eigen::MatrixXd> full;              // 2n x 2n per site offset
  std::optional<std::vector<Eigen::MatrixXd>> near_part;  // G^f
  std::optional<std::vector<Eigen::MatrixXd>> far_part;   // G^g
};

// smooth partition value: 1 on [0, 1/2], 0 on [1, inf), quintic in between
double partition_bump(double s);

// per-point partition weights f(theta_k) for a given delta (g = 1 - f)
std::vector<double> partition_weights(const DispersionTable& table, double delta,
                                      const CriticalSetOptions& opts = {});

GreenFunction green_function(const DispersionTable& table, double t,
                             std::optional<double> split_delta = std::nullopt,
                             const CriticalSetOptions& opts = {});

// L2 mass of the near-critical component, N^-d sum_k f^2 ||G_hat_t||_F^2;
// by Parseval this bounds the spread of G^f and must shrink with delta.
double near_component_l2(const DispersionTable& table, double t, double delta,
                         const CriticalSetOptions& opts = {});

// sup_x ||G^g_t(x)||_max decay against the t^{-d/2} stationary-phase rate,
// and smallness of the full kernel outside the group-velocity cone.  The
// cone test uses the FULL kernel, not G^g: the C^2 taper seams leave the
// split parts with polynomial position tails of either sign that cancel in
// the sum, so only the full kernel exhibits the physical cone at fixed t.
// The cone is dilated by cone_factor and padded by an 8 t^{1/3} buffer,
// the width scale of the Airy front that carries the slowest-decaying
// near-cone mass.
struct DecayDiagnostic {
  std::vector<double> ts;
  std::vector<double> sup_far;        // sup norm of G^g_t
  std::vector<double> sup_near;       // sup norm of G^f_t
  std::vector<double> sup_full;       // sup norm of G_t inside the padded cone
  std::vector<double> outside_cone;   // sup of G_t over |x| >= cone_speed t + buffer
  double cone_speed = 0.0;            // cone_factor * max group velocity
  double max_group_velocity = 0.0;    // over the whole dual grid, all bands
  double slope = 0.0;                 // log-log fit of sup_far vs t
};

DecayDiagnostic decay_diagnostic(const DispersionTable& table, const std::vector<double>& ts,
                                 double delta, double cone_factor = 1.05,
                                 const CriticalSetOptions& opts = {});

}  // namespace latdyn
