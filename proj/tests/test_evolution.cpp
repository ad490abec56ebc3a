#include "doctest.h"

#include <cmath>

#include "latdyn/evolution.hpp"

using namespace latdyn;

namespace {

ForceField massive_chain(int N) {
  LatticeSpec s{1, 1, N};
  return nn_force_field(s, Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1));
}

PhaseField random_field(const LatticeSpec& s, std::uint64_t seed) {
  PhaseField f = PhaseField::zero(s);
  Rng rng(seed, 0);
  for (Index x = 0; x < f.u.rows(); ++x)
    for (int c = 0; c < s.n; ++c) {
      f.u(x, c) = rng.normal();
      f.v(x, c) = rng.normal();
    }
  return f;
}

double field_gap(const PhaseField& a, const PhaseField& b) {
  return std::max((a.u - b.u).abs().maxCoeff(), (a.v - b.v).abs().maxCoeff());
}

// direct force evaluation -(V * u)(x) on site space, used by the integrator
Eigen::ArrayXXd force_of(const ForceField& ff, const Eigen::ArrayXXd& u) {
  Grid g(ff.lattice);
  Eigen::ArrayXXd out = Eigen::ArrayXXd::Zero(u.rows(), u.cols());
  for (const auto& [z, m] : ff.terms) {
    for (Index x = 0; x < g.size(); ++x) {
      Index y = g.shifted(x, z.data());
      for (int i = 0; i < ff.lattice.n; ++i)
        for (int j = 0; j < ff.lattice.n; ++j) out(x, i) -= m(i, j) * u(y, j);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("single normal modes rotate at their band frequency") {
  ForceField ff = massive_chain(16);
  DispersionTable table = dispersion_table(ff);
  Grid g(ff.lattice);

  for (Index k : {Index(1), Index(5)}) {
    double theta = g.theta(k)[0];
    double omega = std::sqrt(3.0 - 2.0 * std::cos(theta));
    PhaseField f = PhaseField::zero(ff.lattice);
    for (Index x = 0; x < g.size(); ++x) f.u(x, 0) = std::cos(theta * double(x));

    double t = 3.7;
    PropagatorTable prop = propagator_table(table, t);
    evolve(f, prop);
    for (Index x = 0; x < g.size(); ++x) {
      double cx = std::cos(theta * double(x));
      CHECK(std::abs(f.u(x, 0) - std::cos(omega * t) * cx) < 1e-9);
      CHECK(std::abs(f.v(x, 0) + omega * std::sin(omega * t) * cx) < 1e-9);
    }
  }
}

TEST_CASE("energy is conserved to machine precision over long times") {
  ForceField ff = massive_chain(64);
  DispersionTable table = dispersion_table(ff);
  PhaseField f = random_field(ff.lattice, 7);
  double e0 = energy(f, ff);
  CHECK(std::abs(energy_fourier(f, table) - e0) < 1e-10 * e0);

  for (double t : {1.0, 10.0, 100.0, 1000.0}) {
    PhaseField ft = f;
    evolve(ft, propagator_table(table, t));
    CHECK(std::abs(energy(ft, ff) - e0) < 1e-9 * e0);
  }
}

TEST_CASE("the flow is reversible and composes additively") {
  ForceField ff = massive_chain(64);
  DispersionTable table = dispersion_table(ff);
  PhaseField f = random_field(ff.lattice, 11);

  PhaseField fwd = f;
  evolve(fwd, propagator_table(table, 17.3));
  PhaseField back = fwd;
  evolve(back, propagator_table(table, -17.3));
  CHECK(field_gap(back, f) < 1e-9);

  PhaseField two_step = f;
  evolve(two_step, propagator_table(table, 5.2));
  evolve(two_step, propagator_table(table, 12.1));
  PhaseField one_step = f;
  evolve(one_step, propagator_table(table, 17.3));
  CHECK(field_gap(two_step, one_step) < 1e-9);
}

TEST_CASE("spectral evolution agrees with a velocity Verlet integrator") {
  ForceField ff = massive_chain(32);
  DispersionTable table = dispersion_table(ff);
  PhaseField f = random_field(ff.lattice, 3);

  // second-order symplectic steps: global error ~ t dt^2 omega^3 / 6 ~ 2e-6
  PhaseField num = f;
  double dt = 1e-3, t = 1.0;
  int steps = int(std::lround(t / dt));
  Eigen::ArrayXXd acc = force_of(ff, num.u);
  for (int s = 0; s < steps; ++s) {
    num.u += dt * num.v + (0.5 * dt * dt) * acc;
    Eigen::ArrayXXd acc_next = force_of(ff, num.u);
    num.v += (0.5 * dt) * (acc + acc_next);
    acc = acc_next;
  }

  PhaseField spec = f;
  evolve(spec, propagator_table(table, t));
  CHECK(field_gap(num, spec) < 1e-4);
}

TEST_CASE("the propagator handles near-singular modes smoothly") {
  CHECK(sinc_omega(0.0, 2.5) == doctest::Approx(2.5));
  CHECK(std::abs(sinc_omega(1e-9, 2.0) - 2.0) < 1e-12);
  CHECK(sinc_omega(2.0, 0.7) == doctest::Approx(std::sin(1.4) / 2.0));

  // gapless chain: the zero mode drifts linearly, u += t v, and the flow is
  // still exactly reversible
  LatticeSpec s{1, 1, 32};
  ForceField fl = nn_force_field(s, Eigen::VectorXd::Ones(1), Eigen::VectorXd::Zero(1));
  DispersionTable table = dispersion_table(fl);
  PhaseField f = random_field(s, 19);
  PhaseField ft = f;
  evolve(ft, propagator_table(table, 31.0));
  evolve(ft, propagator_table(table, -31.0));
  CHECK(field_gap(ft, f) < 1e-8);

  double mean_u0 = f.u.col(0).mean(), mean_v0 = f.v.col(0).mean();
  PhaseField drift = f;
  evolve(drift, propagator_table(table, 4.0));
  CHECK(std::abs(drift.u.col(0).mean() - (mean_u0 + 4.0 * mean_v0)) < 1e-10);
}
