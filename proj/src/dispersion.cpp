#include "latdyn/dispersion.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <limits>

namespace latdyn {

namespace {

// Clamp policy for the PSD symbol: eigenvalues in [-1e-10, 0) are treated as
// exact zeros (roundoff from the Fourier sum); anything lower violates E3.
constexpr double kPsdClamp = 1e-10;

struct RawSpectrum {
  Eigen::ArrayXXd omega;                  // (npts, n) ascending per point
  std::vector<Eigen::MatrixXcd> vectors;  // n x n eigenvector columns
  double max_omega = 0.0;
  double min_symbol_eig = 0.0;
};

RawSpectrum raw_spectrum(const ForceField& ff, std::vector<Eigen::MatrixXcd>& symbol_out) {
  Grid g(ff.lattice);
  int n = ff.lattice.n;
  RawSpectrum raw;
  raw.omega.resize(g.size(), n);
  raw.vectors.resize(g.size());
  symbol_out.resize(g.size());
  double min_eig = std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es;
  for (Index k = 0; k < g.size(); ++k) {
    Eigen::MatrixXcd sym = fourier_symbol(ff, g.theta(k));
    symbol_out[k] = sym;
    es.compute(sym);
    require(es.info() == Eigen::Success, "dispersion: eigensolver failed");
    for (int j = 0; j < n; ++j) {
      double lam = es.eigenvalues()[j];
      min_eig = std::min(min_eig, lam);
      require(lam >= -kPsdClamp,
              "dispersion: symbol has an eigenvalue below -1e-10, coupling is not PSD");
      raw.omega(k, j) = std::sqrt(std::max(0.0, lam));
    }
    raw.vectors[k] = es.eigenvectors();
    raw.max_omega = std::max(raw.max_omega, raw.omega(k, n - 1));
  }
  raw.min_symbol_eig = min_eig;
  return raw;
}

// 1D squared-distance transform (lower envelope of parabolas), grid spacing h.
void edt_1d(const std::vector<double>& f, std::vector<double>& out, double h) {
  int m = int(f.size());
  std::vector<int> v(m);
  std::vector<double> z(m + 1);
  int k = 0;
  v[0] = 0;
  z[0] = -std::numeric_limits<double>::infinity();
  z[1] = std::numeric_limits<double>::infinity();
  auto sq = [](double x) { return x * x; };
  for (int q = 1; q < m; ++q) {
    double s = 0;
    while (true) {
      // abscissa where parabola q overtakes parabola v[k], in theta units
      s = ((f[q] + sq(q * h)) - (f[v[k]] + sq(v[k] * h))) / (2.0 * h * (q - v[k]));
      if (s <= z[k]) {
        --k;
      } else {
        break;
      }
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = std::numeric_limits<double>::infinity();
  }
  k = 0;
  out.resize(m);
  for (int q = 0; q < m; ++q) {
    while (z[k + 1] < q * h) ++k;
    out[q] = sq((q - v[k]) * h) + f[v[k]];
  }
}

}  // namespace

DispersionTable dispersion_table(const ForceField& ff, const DispersionOptions& opts) {
  require(has_even_symmetry(ff), "dispersion: coupling must satisfy V(-z) = V(z)^T");
  Grid g(ff.lattice);
  int n = ff.lattice.n, d = ff.lattice.d;
  double h = kTwoPi / ff.lattice.N;

  DispersionTable table;
  table.lattice = ff.lattice;
  table.opts = opts;
  RawSpectrum raw = raw_spectrum(ff, table.symbol);
  table.max_omega = raw.max_omega;
  double merge_tol = opts.degeneracy_rel_tol * std::max(raw.max_omega, 1e-300);

  // Finite differences act on the sorted eigenvalue streams omega_j(theta),
  // which stay continuous through band crossings.
  auto stream = [&](Index k, int j) { return raw.omega(k, j); };

  table.bands.resize(g.size());
  table.singular.assign(g.size(), 0);
  for (Index k = 0; k < g.size(); ++k) {
    // gradient and Hessian per stream
    Eigen::MatrixXd grads(d, n);
    std::vector<Eigen::MatrixXd> hess(n, Eigen::MatrixXd::Zero(d, d));
    for (int a = 0; a < d; ++a) {
      Index kp = g.neighbor(k, a, +1), km = g.neighbor(k, a, -1);
      for (int j = 0; j < n; ++j) {
        grads(a, j) = (stream(kp, j) - stream(km, j)) / (2.0 * h);
        hess[j](a, a) = (stream(kp, j) - 2.0 * stream(k, j) + stream(km, j)) / (h * h);
      }
      for (int b = a + 1; b < d; ++b) {
        Index kpp = g.neighbor(kp, b, +1), kpm = g.neighbor(kp, b, -1);
        Index kmp = g.neighbor(km, b, +1), kmm = g.neighbor(km, b, -1);
        for (int j = 0; j < n; ++j) {
          double mixed =
              (stream(kpp, j) - stream(kpm, j) - stream(kmp, j) + stream(kmm, j)) / (4.0 * h * h);
          hess[j](a, b) = mixed;
          hess[j](b, a) = mixed;
        }
      }
    }

    // merge near-degenerate eigenvalues into bands
    std::vector<Band>& bands = table.bands[k];
    int j = 0;
    while (j < n) {
      int j2 = j + 1;
      while (j2 < n && raw.omega(k, j2) - raw.omega(k, j2 - 1) < merge_tol) ++j2;
      Band b;
      b.mult = j2 - j;
      b.omega = raw.omega(k, Eigen::seq(j, j2 - 1)).mean();
      b.proj = Eigen::MatrixXcd::Zero(n, n);
      b.grad = Eigen::VectorXd::Zero(d);
      b.hess = Eigen::MatrixXd::Zero(d, d);
      for (int jj = j; jj < j2; ++jj) {
        b.proj += raw.vectors[k].col(jj) * raw.vectors[k].col(jj).adjoint();
        b.grad += grads.col(jj);
        b.hess += hess[jj];
      }
      b.grad /= double(b.mult);
      b.hess /= double(b.mult);
      b.hess_det = b.hess.determinant();
      if (b.omega < opts.singular_tol) table.singular[k] = 1;
      bands.push_back(std::move(b));
      j = j2;
    }
  }
  return table;
}

Eigen::MatrixXcd band_function(const std::vector<Band>& bands, int n,
                               const std::function<double(double)>& fn) {
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(n, n);
  for (const Band& b : bands) out += fn(b.omega) * b.proj;
  return out;
}

namespace {

void fill_e6(const ForceField& ff, int N, double& mean, double& masked_fraction) {
  LatticeSpec spec = ff.lattice;
  spec.N = N;
  Grid g(spec);
  // ||V_hat^-1||_2 = 1 / lambda_min; mask near-singular points
  double det_tol = 0.0;
  std::vector<double> lam_min(g.size());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es;
  double max_lam = 0.0;
  for (Index k = 0; k < g.size(); ++k) {
    es.compute(fourier_symbol(ff, g.theta(k)));
    lam_min[k] = std::max(0.0, es.eigenvalues()[0]);
    max_lam = std::max(max_lam, es.eigenvalues()[spec.n - 1]);
  }
  det_tol = 1e-12 * max_lam;
  double acc = 0.0;
  Index masked = 0;
  for (Index k = 0; k < g.size(); ++k) {
    if (lam_min[k] <= det_tol) {
      ++masked;
    } else {
      acc += 1.0 / lam_min[k];
    }
  }
  Index kept = g.size() - masked;
  mean = kept > 0 ? acc / double(kept) : std::numeric_limits<double>::infinity();
  masked_fraction = double(masked) / double(g.size());
}

}  // namespace

ConditionReport validate_conditions(const ForceField& ff, const DispersionTable& table) {
  ConditionReport r;
  Grid g(ff.lattice);
  int n = ff.lattice.n;

  // E1: stored couplings have finite range, which dominates any exponential
  r.e1.passed = true;
  r.e1.margin = ff.radius();
  r.e1.witness = "finite support, radius " + std::to_string(ff.radius());

  // E2
  double asym = 0.0;
  std::string bad;
  for (const auto& [z, m] : ff.terms) {
    const Eigen::MatrixXd* mirror = ff.at(-z);
    double res = mirror ? (*mirror - m.transpose()).cwiseAbs().maxCoeff()
                        : m.cwiseAbs().maxCoeff();
    if (res > asym) {
      asym = res;
      std::string zs = "(";
      for (int a = 0; a < z.size(); ++a) zs += std::to_string(z[a]) + (a + 1 < z.size() ? "," : "");
      bad = zs + ")";
    }
  }
  r.e2.passed = asym == 0.0;
  r.e2.margin = asym;
  r.e2.witness = r.e2.passed ? "exact" : "offset " + bad;

  // E3: smallest symbol eigenvalue across the dual grid
  double min_eig = std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es;
  for (Index k = 0; k < g.size(); ++k) {
    es.compute(table.symbol[k], Eigen::EigenvaluesOnly);
    min_eig = std::min(min_eig, es.eigenvalues()[0]);
  }
  r.e3_min_eig = min_eig;
  r.e3.passed = min_eig >= -kPsdClamp;
  r.e3.margin = min_eig;

  // E4: fraction of (point, band) pairs with vanishing Hessian determinant
  double max_det = 0.0;
  Index nbands = 0;
  for (Index k = 0; k < g.size(); ++k)
    for (const Band& b : table.bands[k]) {
      max_det = std::max(max_det, std::abs(b.hess_det));
      ++nbands;
    }
  Index degenerate = 0;
  double det_tol = 1e-8 * std::max(max_det, 1e-300);
  for (Index k = 0; k < g.size(); ++k)
    for (const Band& b : table.bands[k])
      if (std::abs(b.hess_det) < det_tol) ++degenerate;
  r.e4_degenerate_fraction = double(degenerate) / double(nbands);
  // a determinant that is zero on half the grid is treated as identically zero
  r.e4.passed = r.e4_degenerate_fraction < 0.5;
  r.e4.margin = r.e4_degenerate_fraction;

  // E5: sums and differences of distinct eigenvalue streams must not be
  // constant; identical streams merge into one band and are skipped
  r.e5.applicable = n > 1;
  r.e5.passed = true;
  if (n > 1) {
    double tol = 1e-8 * std::max(table.max_omega, 1e-300);
    Eigen::ArrayXXd omega(g.size(), n);
    for (Index k = 0; k < g.size(); ++k) {
      int j = 0;
      for (const Band& b : table.bands[k])
        for (int m = 0; m < b.mult; ++m) omega(k, j++) = b.omega;
    }
    double worst = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) {
      for (int j2 = j + 1; j2 < n; ++j2) {
        Eigen::ArrayXd diff = omega.col(j2) - omega.col(j);
        Eigen::ArrayXd sum = omega.col(j2) + omega.col(j);
        double spread_d = diff.maxCoeff() - diff.minCoeff();
        double spread_s = sum.maxCoeff() - sum.minCoeff();
        if (diff.abs().maxCoeff() < tol) continue;  // same band everywhere
        worst = std::min(worst, std::min(spread_d, spread_s));
        if (spread_d < tol || spread_s < tol) {
          r.e5.passed = false;
          r.e5.witness = "streams " + std::to_string(j) + "," + std::to_string(j2);
        }
      }
    }
    r.e5.margin = std::isfinite(worst) ? worst : 0.0;
  }

  // E6: masked-grid mean of ||V_hat^-1|| at two small refinements; growth
  // beyond 1.5x marks a non-integrable inverse symbol
  double mean_a = 0.0, frac_a = 0.0, mean_b = 0.0, frac_b = 0.0;
  int probe = std::min(64, ff.lattice.N);
  fill_e6(ff, probe, mean_a, frac_a);
  fill_e6(ff, 2 * probe, mean_b, frac_b);
  r.e6_grid_mean = mean_b;
  r.e6_masked_fraction = frac_b;
  double growth = mean_b / std::max(mean_a, 1e-300);
  r.e6_divergence_suspected = growth > 1.5;
  r.e6.passed = !r.e6_divergence_suspected;
  r.e6.margin = growth;
  r.e6.witness = "mean growth N->2N: " + std::to_string(growth);

  return r;
}

ConditionReport validate_conditions_refined(const ForceField& ff, int probe_N) {
  ForceField probe = ff;
  probe.lattice.N = probe_N;
  DispersionTable t = dispersion_table(probe);
  return validate_conditions(probe, t);
}

std::string condition_report_to_json(const ConditionReport& r) {
  nlohmann::json j;
  auto put = [&](const char* name, const ConditionReport::Entry& e) {
    j[name] = {{"passed", e.passed},
               {"applicable", e.applicable},
               {"margin", e.margin},
               {"witness", e.witness}};
  };
  put("E1", r.e1);
  put("E2", r.e2);
  put("E3", r.e3);
  put("E4", r.e4);
  put("E5", r.e5);
  put("E6", r.e6);
  j["e3_min_eig"] = r.e3_min_eig;
  j["e4_degenerate_fraction"] = r.e4_degenerate_fraction;
  j["e6_grid_mean"] = r.e6_grid_mean;
  j["e6_masked_fraction"] = r.e6_masked_fraction;
  j["e6_divergence_suspected"] = r.e6_divergence_suspected;
  j["all_passed"] = r.all_passed();
  return j.dump(2);
}

std::vector<double> critical_set_distance(const DispersionTable& table,
                                          const CriticalSetOptions& opts) {
  Grid g(table.lattice);
  int d = table.lattice.d;
  double h = kTwoPi / table.lattice.N;

  // scales for the relative tolerances
  double max_det = 0.0, max_curv = 0.0, max_symdet = 0.0;
  int max_bands = 0;
  for (Index k = 0; k < g.size(); ++k) {
    max_bands = std::max(max_bands, int(table.bands[k].size()));
    for (const Band& b : table.bands[k]) {
      max_det = std::max(max_det, std::abs(b.hess_det));
      for (int a = 0; a < d; ++a) max_curv = std::max(max_curv, std::abs(b.hess(a, a)));
    }
    max_symdet = std::max(max_symdet, std::abs(table.symbol[k].determinant()));
  }
  double det_tol = opts.hess_det_rel_tol * std::max(max_det, 1e-300);
  double curv_tol = opts.curvature_rel_tol * std::max(max_curv, 1e-300);
  double symdet_tol = opts.symbol_det_rel_tol * std::max(max_symdet, 1e-300);

  // "no seed yet" must stay finite: the parabola envelope below subtracts
  // cell values, and inf - inf would poison the whole line with NaN
  const double far = 1e30;
  std::vector<double> dist2(g.size(), far);
  for (Index k = 0; k < g.size(); ++k) {
    bool core = false;
    if (int(table.bands[k].size()) < max_bands) core = true;  // band crossing
    if (std::abs(table.symbol[k].determinant()) < symdet_tol) core = true;
    for (const Band& b : table.bands[k]) {
      if (core) break;
      if (std::abs(b.hess_det) < det_tol) core = true;
      for (int a = 0; a < d && !core; ++a)
        if (std::abs(b.hess(a, a)) < curv_tol) core = true;
    }
    if (core) dist2[k] = 0.0;
  }

  // exact Euclidean distance transform, axis by axis, wraparound via a
  // tripled line
  int N = table.lattice.N;
  std::vector<double> line(3 * N), out(3 * N);
  for (int axis = 0; axis < d; ++axis) {
    Index nlines = g.size() / N;
    for (Index l = 0; l < nlines; ++l) {
      // enumerate the N points of this grid line along `axis`
      int xbase[4] = {0, 0, 0, 0};
      Index rem = l;
      for (int a = d - 1; a >= 0; --a) {
        if (a == axis) continue;
        xbase[a] = int(rem % N);
        rem /= N;
      }
      std::vector<Index> idx(N);
      for (int i = 0; i < N; ++i) {
        int x[4] = {xbase[0], xbase[1], xbase[2], xbase[3]};
        x[axis] = i;
        idx[i] = g.flat(x);
      }
      for (int rep = 0; rep < 3; ++rep)
        for (int i = 0; i < N; ++i) line[rep * N + i] = dist2[idx[i]];
      edt_1d(line, out, h);
      for (int i = 0; i < N; ++i) dist2[idx[i]] = out[N + i];
    }
  }

  std::vector<double> dist(g.size());
  for (Index k = 0; k < g.size(); ++k)
    dist[k] = dist2[k] >= 0.5 * far ? std::numeric_limits<double>::infinity()
                                    : std::sqrt(dist2[k]);
  return dist;
}

std::vector<std::uint8_t> critical_set_mask(const DispersionTable& table, double delta,
                                            const CriticalSetOptions& opts) {
  std::vector<double> dist = critical_set_distance(table, opts);
  std::vector<std::uint8_t> mask(dist.size(), 0);
  for (size_t k = 0; k < dist.size(); ++k) mask[k] = dist[k] <= delta ? 1 : 0;
  return mask;
}

}  // namespace latdyn
