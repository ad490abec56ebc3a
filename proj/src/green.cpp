#include "latdyn/green.hpp"

namespace latdyn {

double partition_bump(double s) {
  if (s <= 0.5) return 1.0;
  if (s >= 1.0) return 0.0;
  double x = 2.0 * (s - 0.5);  // 0..1 over the taper zone
  // quintic smootherstep, C^2 at both ends
  double step = x * x * x * (x * (6.0 * x - 15.0) + 10.0);
  return 1.0 - step;
}

std::vector<double> partition_weights(const DispersionTable& table, double delta,
                                      const CriticalSetOptions& opts) {
  require(delta > 0, "partition_weights: delta must be positive");
  std::vector<double> dist = critical_set_distance(table, opts);
  std::vector<double> f(dist.size(), 0.0);
  bool any_core = false;
  for (double v : dist)
    if (v == 0.0) {
      any_core = true;
      break;
    }
  if (!any_core) return f;  // empty critical set: f = 0, g = 1 everywhere
  for (size_t k = 0; k < dist.size(); ++k) f[k] = partition_bump(dist[k] / delta);
  return f;
}

namespace {

std::vector<Eigen::MatrixXd> transform_blocks(const DispersionTable& table, double t,
                                              const std::vector<double>* weight) {
  Grid g(table.lattice);
  int n = table.lattice.n;
  Fft fft(table.lattice.d, table.lattice.N);
  PropagatorTable prop = propagator_table(table, t);

  std::vector<Eigen::MatrixXd> out(g.size(), Eigen::MatrixXd::Zero(2 * n, 2 * n));
  Eigen::VectorXcd buf(g.size());
  for (int r = 0; r < 2 * n; ++r) {
    for (int c = 0; c < 2 * n; ++c) {
      for (Index k = 0; k < g.size(); ++k) {
        Complex val = prop.blocks[k](r, c);
        if (weight) val *= (*weight)[k];
        buf[k] = val;
      }
      fft.to_site(buf.data(), buf.data());
      double max_re = 0.0, max_im = 0.0;
      for (Index k = 0; k < g.size(); ++k) {
        max_re = std::max(max_re, std::abs(buf[k].real()));
        max_im = std::max(max_im, std::abs(buf[k].imag()));
      }
      require(max_im <= 1e-9 * std::max(1e-300, max_re),
              "green_function: kernel has non-real residue (symbol lacks evenness)");
      for (Index k = 0; k < g.size(); ++k) out[k](r, c) = buf[k].real();
      buf.resize(g.size());
    }
  }
  return out;
}

}  // namespace

GreenFunction green_function(const DispersionTable& table, double t,
                             std::optional<double> split_delta,
                             const CriticalSetOptions& opts) {
  GreenFunction gf;
  gf.lattice = table.lattice;
  gf.t = t;
  gf.full = transform_blocks(table, t, nullptr);
  if (split_delta) {
    std::vector<double> f = partition_weights(table, *split_delta, opts);
    gf.near_part = transform_blocks(table, t, &f);
    std::vector<double> gw(f.size());
    for (size_t i = 0; i < f.size(); ++i) gw[i] = 1.0 - f[i];
    gf.far_part = transform_blocks(table, t, &gw);
  }
  return gf;
}

double near_component_l2(const DispersionTable& table, double t, double delta,
                         const CriticalSetOptions& opts) {
  Grid g(table.lattice);
  std::vector<double> f = partition_weights(table, delta, opts);
  PropagatorTable prop = propagator_table(table, t);
  double acc = 0.0;
  for (Index k = 0; k < g.size(); ++k)
    acc += f[k] * f[k] * prop.blocks[k].squaredNorm();
  return acc / double(g.size());
}

DecayDiagnostic decay_diagnostic(const DispersionTable& table, const std::vector<double>& ts,
                                 double delta, double cone_factor,
                                 const CriticalSetOptions& opts) {
  require(!ts.empty(), "decay_diagnostic: need at least one time");
  Grid g(table.lattice);
  DecayDiagnostic diag;
  diag.ts = ts;

  // The propagation cone is set by the fastest modes anywhere on the grid;
  // the near-critical points typically carry the extremal group velocity.
  double vbar = 0.0;
  for (Index k = 0; k < g.size(); ++k)
    for (const Band& b : table.bands[k]) vbar = std::max(vbar, b.grad.norm());
  diag.max_group_velocity = vbar;
  diag.cone_speed = cone_factor * vbar;

  double tmax = *std::max_element(ts.begin(), ts.end());
  require(diag.cone_speed * tmax + 8.0 * std::cbrt(tmax) + 2.0 < 0.5 * table.lattice.N,
          "decay_diagnostic: cone leaves the torus, enlarge N or shorten times");

  for (double t : ts) {
    GreenFunction gf = green_function(table, t, delta, opts);
    double edge = diag.cone_speed * t + 8.0 * std::cbrt(t);
    double sup_g = 0.0, sup_f = 0.0, sup_in = 0.0, sup_out = 0.0;
    for (Index x = 0; x < g.size(); ++x) {
      double ng = (*gf.far_part)[x].cwiseAbs().maxCoeff();
      double nf = (*gf.near_part)[x].cwiseAbs().maxCoeff();
      double nfull = gf.full[x].cwiseAbs().maxCoeff();
      sup_g = std::max(sup_g, ng);
      sup_f = std::max(sup_f, nf);
      if (g.site_radius(x) >= edge)
        sup_out = std::max(sup_out, nfull);
      else
        sup_in = std::max(sup_in, nfull);
    }
    diag.sup_far.push_back(sup_g);
    diag.sup_near.push_back(sup_f);
    diag.sup_full.push_back(sup_in);
    diag.outside_cone.push_back(sup_out);
  }

  // least-squares slope of log sup_far against log t
  int m = int(ts.size());
  if (m >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < m; ++i) {
      double x = std::log(ts[i]), y = std::log(std::max(diag.sup_far[i], 1e-300));
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    diag.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  }
  return diag;
}

}  // namespace latdyn
