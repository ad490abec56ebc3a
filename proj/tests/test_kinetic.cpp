#include "doctest.h"

#include <cmath>

#include "latdyn/transport.hpp"

using namespace latdyn;

namespace {

ForceField massive_chain(int N) {
  LatticeSpec s{1, 1, N};
  return nn_force_field(s, Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1));
}

ForceField coupled_two_band(int N) {
  ForceField ff;
  ff.lattice = {1, 2, N};
  Eigen::MatrixXd v0(2, 2), v1(2, 2);
  v0 << 3.0, 0.5, 0.5, 3.5;
  v1 = -0.8 * Eigen::MatrixXd::Identity(2, 2);
  Eigen::VectorXi zero = Eigen::VectorXi::Zero(1);
  Eigen::VectorXi plus = Eigen::VectorXi::Constant(1, 1);
  Eigen::VectorXi minus = Eigen::VectorXi::Constant(1, -1);
  ff.terms = {{zero, v0}, {plus, v1}, {minus, v1}};
  return ff;
}

}  // namespace

TEST_CASE("time averaging mixes the diagonal blocks and kills real cross terms") {
  ForceField ff = massive_chain(32);
  DispersionTable table = dispersion_table(ff);
  Grid g(ff.lattice);

  HomogeneousSpectrum q0;
  q0.lattice = ff.lattice;
  q0.q.resize(g.size());
  for (Index k = 0; k < g.size(); ++k) {
    double theta = g.theta(k)[0];
    Eigen::MatrixXcd q = Eigen::MatrixXcd::Zero(2, 2);
    q(0, 0) = 1.0 + 0.5 * std::cos(theta);
    q(1, 1) = 0.7;
    q(0, 1) = 0.1 * std::cos(theta);
    q(1, 0) = 0.1 * std::cos(theta);
    q0.q[k] = q;
  }
  LimitCovariance lim = limit_covariance(q0, table);
  CHECK(lim.masked_count() == 0);
  for (Index k = 0; k < g.size(); ++k) {
    double w2 = table.symbol[k](0, 0).real();
    double g00 = q0.q[k](0, 0).real(), g11 = q0.q[k](1, 1).real();
    CHECK(std::abs(lim.q[k](0, 0).real() - 0.5 * (g00 + g11 / w2)) < 1e-12);
    CHECK(std::abs(lim.q[k](1, 1).real() - 0.5 * (w2 * g00 + g11)) < 1e-12);
    CHECK(std::abs(lim.q[k](0, 1)) < 1e-12);
  }

  // pure position input: half stays, half moves to the velocity block
  HomogeneousSpectrum qpos;
  qpos.lattice = ff.lattice;
  qpos.q.resize(g.size());
  for (Index k = 0; k < g.size(); ++k) {
    Eigen::MatrixXcd q = Eigen::MatrixXcd::Zero(2, 2);
    q(0, 0) = 2.0;
    qpos.q[k] = q;
  }
  LimitCovariance lp = limit_covariance(qpos, table);
  for (Index k = 0; k < g.size(); ++k) {
    double w2 = table.symbol[k](0, 0).real();
    CHECK(std::abs(lp.q[k](0, 0).real() - 1.0) < 1e-12);
    CHECK(std::abs(lp.q[k](1, 1).real() - w2) < 1e-12);
  }
}

TEST_CASE("the limit covariance is a fixed point and is flow invariant") {
  ForceField ff = massive_chain(64);
  DispersionTable table = dispersion_table(ff);
  Grid g(ff.lattice);
  HomogeneousSpectrum q0 = nonequilibrium_spectrum(table, 1.0, 0.9);
  LimitCovariance lim = limit_covariance(q0, table);

  HomogeneousSpectrum again;
  again.lattice = ff.lattice;
  again.q = lim.q;
  LimitCovariance lim2 = limit_covariance(again, table);
  double drift = 0.0;
  for (Index k = 0; k < g.size(); ++k)
    drift = std::max(drift, (lim2.q[k] - lim.q[k]).cwiseAbs().maxCoeff());
  CHECK(drift < 1e-10);

  for (double t : {1.0, 7.3, 50.0}) CHECK(stationarity_check(lim, table, t) < 1e-8);
  CHECK(equipartition_residue(lim, table) < 1e-8);

  // the unaveraged input is genuinely moving, so the same test must fail on it
  LimitCovariance raw;
  raw.lattice = ff.lattice;
  raw.q = q0.q;
  raw.masked.assign(g.size(), 0);
  CHECK(stationarity_check(raw, table, 1.0) > 1e-3);
}

TEST_CASE("quadrature matrix squares to minus one and commutes with the limit") {
  ForceField ff = coupled_two_band(32);
  DispersionTable table = dispersion_table(ff);
  Grid g(ff.lattice);
  Rng rng(3, 0);

  HomogeneousSpectrum q0;
  q0.lattice = ff.lattice;
  q0.q.resize(g.size());
  for (Index k = 0; k < g.size(); ++k) {
    Eigen::MatrixXcd m(4, 4);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) m(i, j) = Complex(rng.normal(), rng.normal());
    q0.q[k] = m * m.adjoint();
  }
  // conjugate evenness q(-theta) = conj(q(theta)) so the spectrum is real
  for (Index k = 0; k < g.size(); ++k) {
    Index kc = g.conj_index(k);
    if (kc > k) q0.q[kc] = q0.q[k].conjugate();
  }

  for (Index k : {Index(0), Index(5), Index(16)}) {
    Eigen::MatrixXcd c = quadrature_matrix(table.bands[k], 2);
    CHECK((c * c + Eigen::MatrixXcd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-10);
  }

  LimitCovariance lim = limit_covariance(q0, table);
  for (double t : {1.0, 7.3, 50.0}) CHECK(stationarity_check(lim, table, t) < 1e-8);
  CHECK(equipartition_residue(lim, table) < 1e-8);
  for (Index k : {Index(0), Index(7), Index(20)}) {
    CHECK((lim.q[k] - lim.q[k].adjoint()).cwiseAbs().maxCoeff() < 1e-10);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(lim.q[k]);
    CHECK(es.eigenvalues().minCoeff() > -1e-10);
  }
}

TEST_CASE("initial Wigner matrices of stock profiles are the expected densities") {
  ForceField ff = massive_chain(64);
  DispersionTable table = dispersion_table(ff);
  Grid g(ff.lattice);

  auto flat_gibbs = constant_profile(1, 64.0, 1.3);
  auto flat_occ = constant_profile(1, 64.0, 0.7, ProfileStructure::occupation);
  auto grad = thermal_gradient_profile(1, 64.0, 1.0, 0.6);
  Eigen::VectorXd r = Eigen::VectorXd::Constant(1, 10.0);
  double T_r = 1.0 * (1.0 + 0.6 * std::cos(kTwoPi * 10.0 / 64.0));

  for (Index k : {Index(3), Index(17), Index(40)}) {
    double omega = table.bands[k][0].omega;
    CHECK(std::abs(initial_wigner(*flat_gibbs, table, r, k)(0, 0) - 1.3 / omega) < 1e-12);
    CHECK(std::abs(initial_wigner(*flat_occ, table, r, k)(0, 0) - 0.7) < 1e-12);
    CHECK(std::abs(initial_wigner(*grad, table, r, k)(0, 0) - T_r / omega) < 1e-12);
  }
}

TEST_CASE("the transported Wigner prediction rides the characteristics") {
  ForceField ff = massive_chain(64);
  DispersionTable table = dispersion_table(ff);
  Grid g(ff.lattice);
  auto grad = thermal_gradient_profile(1, 64.0, 1.0, 0.6);
  double tau = 2.5;
  Eigen::VectorXd r = Eigen::VectorXd::Constant(1, 20.0);

  WignerPrediction pred = wigner_prediction(*grad, table, tau, r);
  REQUIRE(pred.w.size() == std::size_t(g.size()));
  for (Index k = 0; k < g.size(); ++k) {
    if (pred.masked[k]) continue;
    Eigen::VectorXd back = r - tau * table.bands[k][0].grad;
    Eigen::MatrixXcd expected = initial_wigner(*grad, table, back, k);
    CHECK((pred.w[k] - expected).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("local covariance is equipartitioned, invariant and positive") {
  ForceField ff = massive_chain(64);
  DispersionTable table = dispersion_table(ff);
  auto grad = thermal_gradient_profile(1, 64.0, 1.0, 0.6);
  auto step = step_profile(1, 64.0, 0.5, 1.5, 32.0, 10.0, 4.0);
  auto packet = wave_packet_profile(1, 64.0, 0.2, 1.0, 32.0, 600.0, kPi / 2.0, 4.0);

  for (const SlowProfile* p : {grad.get(), step.get(), packet.get()}) {
    for (double tau : {0.5, 2.0}) {
      Eigen::VectorXd r = Eigen::VectorXd::Constant(1, 24.0);
      LimitCovariance q = local_covariance(*p, table, tau, r);
      CHECK(equipartition_residue(q, table) < 1e-8);
      CHECK(stationarity_check(q, table, 7.3) < 1e-8);
      for (Index k : {Index(2), Index(31)}) {
        CHECK((q.q[k] - q.q[k].adjoint()).cwiseAbs().maxCoeff() < 1e-10);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(q.q[k]);
        CHECK(es.eigenvalues().minCoeff() > -1e-10);
      }
    }
  }
}

TEST_CASE("free transport on the r-grid follows the exact characteristics") {
  ForceField ff = massive_chain(64);
  DispersionTable table = dispersion_table(ff);
  auto grad = thermal_gradient_profile(1, 64.0, 1.0, 0.6);
  std::vector<Index> thetas = {5, 20, 37};
  int cells = 512;
  WignerField w0 = initial_wigner_field(*grad, table, cells, thetas);
  TransportState s0 = project_wigner(w0, table);
  double tau = 1.5;
  TransportState s1 = transport_evolve(s0, tau);

  CHECK(std::abs(transport_total_trace(s1) - transport_total_trace(s0)) <
        1e-10 * std::abs(transport_total_trace(s0)));

  double h = s0.spacing();
  for (std::size_t ti = 0; ti < thetas.size(); ++ti) {
    const auto& band = s1.fields[ti][0];
    for (Index c = 0; c < s1.cell_count(); ++c) {
      Eigen::VectorXd rc = Eigen::VectorXd::Constant(1, (double(c) + 0.5) * h);
      Eigen::VectorXd back = rc - tau * band.grad;
      Eigen::MatrixXcd expected = initial_wigner(*grad, table, back, thetas[ti]);
      CHECK(std::abs(band.block[c](0, 0).real() - expected(0, 0).real()) < 1e-4);
    }
  }
}

TEST_CASE("the upwind oracle converges at first order to the exact shift") {
  ForceField ff = massive_chain(64);
  DispersionTable table = dispersion_table(ff);
  auto grad = thermal_gradient_profile(1, 64.0, 1.0, 0.6);
  std::vector<Index> thetas = {5, 20, 37};
  double tau = 0.5;

  auto gap = [&](int cells) {
    WignerField w0 = initial_wigner_field(*grad, table, cells, thetas);
    TransportState s0 = project_wigner(w0, table);
    TransportState exact = transport_evolve(s0, tau);
    TransportState upwind = transport_pde_oracle(s0, tau, 0.45);
    CHECK(std::abs(transport_total_trace(upwind) - transport_total_trace(s0)) <
          1e-10 * std::abs(transport_total_trace(s0)));
    return transport_l1_distance(exact, upwind);
  };

  double e1 = gap(256), e2 = gap(512);
  CHECK(e2 / e1 > 0.4);
  CHECK(e2 / e1 < 0.6);
}
