#include "doctest.h"

#include <cmath>

#include "latdyn/evolution.hpp"
#include "latdyn/stats.hpp"

using namespace latdyn;

namespace {

ForceField massive_chain(int N) {
  LatticeSpec s{1, 1, N};
  return nn_force_field(s, Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1));
}

std::vector<Eigen::VectorXi> chain_offsets(std::initializer_list<int> os) {
  std::vector<Eigen::VectorXi> v;
  for (int o : os) v.push_back(Eigen::VectorXi::Constant(1, o));
  return v;
}

}  // namespace

TEST_CASE("chunked moments agree with the two-pass formulas") {
  Rng rng(11, 0);
  const Index n = 200, dim = 3;
  std::vector<Eigen::VectorXcd> xs;
  ChunkedMoments acc(dim);
  for (Index i = 0; i < n; ++i) {
    Eigen::VectorXcd x(dim);
    for (Index j = 0; j < dim; ++j) x[j] = Complex(rng.normal(), rng.uniform_sym());
    xs.push_back(x);
    acc.push(x);
  }
  McMoments m = acc.finalize();
  CHECK(m.count == n);

  Eigen::VectorXcd mean = Eigen::VectorXcd::Zero(dim);
  for (const auto& x : xs) mean += x;
  mean /= double(n);
  Eigen::VectorXd re2 = Eigen::VectorXd::Zero(dim), im2 = Eigen::VectorXd::Zero(dim);
  for (const auto& x : xs) {
    re2 += x.real().cwiseAbs2().matrix();
    im2 += x.imag().cwiseAbs2().matrix();
  }
  double bessel = double(n) / double(n - 1);
  Eigen::VectorXd se_re =
      ((re2 / double(n) - mean.real().cwiseAbs2().matrix()) * bessel / double(n)).cwiseSqrt();
  Eigen::VectorXd se_im =
      ((im2 / double(n) - mean.imag().cwiseAbs2().matrix()) * bessel / double(n)).cwiseSqrt();
  CHECK((m.mean - mean).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((m.se_re - se_re).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((m.se_im - se_im).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("covariance estimation is reproducible and its errors shrink on schedule") {
  ForceField ff = massive_chain(64);
  DispersionTable table = dispersion_table(ff);
  HomogeneousSpectrum spec = gibbs_spectrum(table, 1.0);
  SpectrumSampler sampler(spec);
  SampleSource src = [&](Index i) { return sampler.draw(21, std::uint64_t(i)); };
  Eigen::VectorXi x0 = Eigen::VectorXi::Constant(1, 10);
  auto offsets = chain_offsets({0, 1});

  CovarianceEstimate a = estimate_covariance(1500, src, x0, offsets);
  CovarianceEstimate b = estimate_covariance(1500, src, x0, offsets);
  for (std::size_t o = 0; o < offsets.size(); ++o) {
    CHECK((a.mean[o] - b.mean[o]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.se[o] - b.se[o]).cwiseAbs().maxCoeff() == 0.0);
  }

  // doubling the sample count should shrink every standard error by about
  // 1/sqrt(2); the entrywise average filters the per-entry noise
  CovarianceEstimate c = estimate_covariance(3000, src, x0, offsets);
  double ratio_sum = 0.0;
  int ratio_n = 0;
  for (std::size_t o = 0; o < offsets.size(); ++o)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        if (a.se[o](i, j) > 0.0) {
          ratio_sum += c.se[o](i, j) / a.se[o](i, j);
          ++ratio_n;
        }
  double ratio = ratio_sum / ratio_n;
  CHECK(ratio > 0.6);
  CHECK(ratio < 0.85);
}

TEST_CASE("probe application is the advertised linear functional") {
  ForceField ff = massive_chain(8);
  Grid g(ff.lattice);
  PhaseField f = PhaseField::zero(ff.lattice);
  for (Index x = 0; x < g.size(); ++x) {
    f.u(x, 0) = double(x);
    f.v(x, 0) = -2.0 * double(x);
  }
  PairProbe probe;
  probe.sites = {Eigen::VectorXi::Constant(1, 2), Eigen::VectorXi::Constant(1, 5)};
  probe.wu = {Eigen::VectorXd::Constant(1, 1.5), Eigen::VectorXd::Constant(1, 0.0)};
  probe.wv = {Eigen::VectorXd::Constant(1, 0.0), Eigen::VectorXd::Constant(1, 2.0)};
  double expected = 1.5 * 2.0 + 2.0 * (-2.0 * 5.0);
  CHECK(probe_apply(probe, f) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("taper weights match their closed forms") {
  int y_max = 8;
  Eigen::VectorXi y0 = Eigen::VectorXi::Zero(1);
  Eigen::VectorXi y4 = Eigen::VectorXi::Constant(1, 4);
  Eigen::VectorXi ym4 = Eigen::VectorXi::Constant(1, -4);
  Eigen::VectorXi y8 = Eigen::VectorXi::Constant(1, 8);
  CHECK(taper_weight(y0, y_max, Taper::triangular) == doctest::Approx(1.0));
  CHECK(taper_weight(y4, y_max, Taper::triangular) == doctest::Approx(0.6));
  CHECK(taper_weight(ym4, y_max, Taper::triangular) == doctest::Approx(0.6));
  CHECK(taper_weight(y8, y_max, Taper::triangular) == doctest::Approx(0.2));
  CHECK(taper_weight(y8, y_max, Taper::boxcar) == doctest::Approx(1.0));

  Eigen::VectorXi y2d(2);
  y2d << 4, -8;
  CHECK(taper_weight(y2d, y_max, Taper::triangular) == doctest::Approx(0.6 * 0.2));
}

TEST_CASE("windowed Wigner estimate agrees with the windowed theory") {
  ForceField ff = massive_chain(64);
  DispersionTable table = dispersion_table(ff);
  Grid g(ff.lattice);
  double T = 1.0;
  HomogeneousSpectrum spec = gibbs_spectrum(table, T);
  SpectrumSampler sampler(spec);
  SampleSource src = [&](Index i) { return sampler.draw(33, std::uint64_t(i)); };

  // for the Gibbs state the macroscopic Wigner density is T / omega,
  // independent of r; push it through the same window as the estimator
  std::vector<Eigen::MatrixXcd> w_theory(g.size());
  for (Index k = 0; k < g.size(); ++k)
    w_theory[k] = Eigen::MatrixXcd::Constant(1, 1, T / table.bands[k][0].omega);

  double eps = 1.0 / 8.0;
  Eigen::VectorXd r = Eigen::VectorXd::Constant(1, 4.0);
  for (int y_max : {8, 16}) {
    WignerEstimate est = wigner_estimate(1200, src, table, 0.0, eps, r, y_max);
    std::vector<Eigen::MatrixXcd> th = windowed_wigner_theory(w_theory, table, y_max);
    double max_z = 0.0;
    for (Index k = 0; k < g.size(); ++k) {
      if (est.se_re[k](0, 0) > 0.0)
        max_z = std::max(max_z,
                         std::abs(est.w[k](0, 0).real() - th[k](0, 0).real()) / est.se_re[k](0, 0));
      if (est.se_im[k](0, 0) > 0.0)
        max_z = std::max(max_z,
                         std::abs(est.w[k](0, 0).imag() - th[k](0, 0).imag()) / est.se_im[k](0, 0));
    }
    CHECK(max_z < 5.0);
  }
}

TEST_CASE("conjugate-free pair moments expose coherence and vanish at equilibrium") {
  ForceField ff = massive_chain(64);
  DispersionTable table = dispersion_table(ff);
  Grid g(ff.lattice);
  Eigen::VectorXi x0 = Eigen::VectorXi::Constant(1, 12);
  auto offsets = chain_offsets({0, 1, 2});

  HomogeneousSpectrum gibbs = gibbs_spectrum(table, 1.0);
  SpectrumSampler eq(gibbs);
  SampleSource eq_src = [&](Index i) { return eq.draw(7, std::uint64_t(i)); };
  ComplexPairEstimate e0 = aa_covariance(1500, eq_src, table, x0, offsets);
  for (std::size_t o = 0; o < offsets.size(); ++o) {
    CHECK(std::abs(e0.mean[o](0, 0).real()) < 5.0 * e0.se_re[o](0, 0));
    CHECK(std::abs(e0.mean[o](0, 0).imag()) < 5.0 * e0.se_im[o](0, 0));
  }

  // a state with q11 far from omega^2 q00 has E[a a] = (omega q00 - q11/omega)/2
  // averaged over the grid, which lands entirely on the zero offset here
  HomogeneousSpectrum skew;
  skew.lattice = ff.lattice;
  skew.q.resize(g.size());
  double T = 1.0;
  for (Index k = 0; k < g.size(); ++k) {
    double omega = table.bands[k][0].omega;
    Eigen::MatrixXcd q = Eigen::MatrixXcd::Zero(2, 2);
    q(0, 0) = T / omega;
    q(1, 1) = 0.01 * T * omega;
    skew.q[k] = q;
  }
  SpectrumSampler sk(skew);
  SampleSource sk_src = [&](Index i) { return sk.draw(8, std::uint64_t(i)); };
  ComplexPairEstimate e1 = aa_covariance(1500, sk_src, table, x0, offsets);
  double expected = 0.5 * (T - 0.01 * T);
  CHECK(std::abs(e1.mean[0](0, 0).real() - expected) < 5.0 * e1.se_re[0](0, 0));
  CHECK(e1.mean[0](0, 0).real() > 10.0 * e1.se_re[0](0, 0));
}

TEST_CASE("time ladder bound check reads flat and growing sequences correctly") {
  ForceField ff = massive_chain(64);
  DispersionTable table = dispersion_table(ff);
  HomogeneousSpectrum spec = gibbs_spectrum(table, 1.0);
  SpectrumSampler sampler(spec);
  Eigen::VectorXi x0 = Eigen::VectorXi::Constant(1, 20);
  auto offsets = chain_offsets({0, 1});

  // Gibbs is flow-invariant, so the evolved covariances sit on a flat line
  std::vector<std::pair<double, CovarianceEstimate>> ladder;
  for (double t : {0.0, 5.0, 10.0, 20.0}) {
    PropagatorTable prop = propagator_table(table, t);
    SampleSource src = [&](Index i) {
      PhaseField f = sampler.draw(55, std::uint64_t(i));
      evolve(f, prop);
      return f;
    };
    ladder.emplace_back(t, estimate_covariance(500, src, x0, offsets));
  }
  BoundCheck flat = uniform_bound_check(ladder);
  CHECK(flat.ok);
  CHECK(flat.ts.size() == 4);

  // a hand-built ladder whose max norm grows linearly must trip the trend test
  std::vector<std::pair<double, CovarianceEstimate>> growing;
  for (double t : {0.0, 1.0, 2.0, 3.0}) {
    CovarianceEstimate ce;
    ce.lattice = ff.lattice;
    ce.base = x0;
    ce.offsets = offsets;
    ce.mean = {Eigen::MatrixXd::Constant(2, 2, 1.0 + 0.5 * t),
               Eigen::MatrixXd::Constant(2, 2, 0.1)};
    ce.se = {Eigen::MatrixXd::Constant(2, 2, 0.01), Eigen::MatrixXd::Constant(2, 2, 0.01)};
    ce.count = 100;
    growing.emplace_back(t, ce);
  }
  BoundCheck grow = uniform_bound_check(growing);
  CHECK(!grow.ok);
  CHECK(grow.slope > 3.0 * grow.slope_se);
}

TEST_CASE("equipartition probe separates balanced and skewed ensembles") {
  ForceField ff = massive_chain(64);
  DispersionTable table = dispersion_table(ff);
  Grid g(ff.lattice);
  Eigen::VectorXi x0 = Eigen::VectorXi::Constant(1, 30);

  HomogeneousSpectrum gibbs = gibbs_spectrum(table, 1.0);
  SpectrumSampler eq(gibbs);
  SampleSource eq_src = [&](Index i) { return eq.draw(91, std::uint64_t(i)); };
  EquipartitionCheck balanced = equipartition_check(800, eq_src, ff, x0);
  CHECK(std::abs(balanced.z()) < 4.0);
  CHECK(balanced.potential == doctest::Approx(1.0).epsilon(0.2));

  // cold velocities: potential stays at T, kinetic drops to T/4
  HomogeneousSpectrum skew;
  skew.lattice = ff.lattice;
  skew.q.resize(g.size());
  for (Index k = 0; k < g.size(); ++k) {
    Eigen::MatrixXcd q = Eigen::MatrixXcd::Zero(2, 2);
    q(0, 0) = 1.0 / table.symbol[k](0, 0).real();
    q(1, 1) = 0.25;
    skew.q[k] = q;
  }
  SpectrumSampler cold(skew);
  SampleSource cold_src = [&](Index i) { return cold.draw(92, std::uint64_t(i)); };
  EquipartitionCheck lop = equipartition_check(800, cold_src, ff, x0);
  CHECK(lop.z() > 10.0);
  CHECK(lop.diff == doctest::Approx(0.75).epsilon(0.25));
}
