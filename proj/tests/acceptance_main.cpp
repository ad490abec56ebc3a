// Acceptance battery: one criterion per line, every tolerance pinned here or
// in the experiment defaults it invokes.  Exit status 0 iff all criteria pass.
//
// LATDYN_NIGHTLY=1 widens the statistical-hygiene criterion from a 3-seed
// smoke check to the full 20-battery reseed study.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <functional>
#include <string>
#include <tuple>
#include <vector>

#include "latdyn/evolution.hpp"
#include "latdyn/experiment.hpp"
#include "latdyn/transport.hpp"

using namespace latdyn;

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// ---- criterion 1: spectral algebra ----------------------------------------

constexpr double kAlgebraTol = 1e-10;

ForceField nn_model(int d, int n, int N) {
  LatticeSpec s{d, n, N};
  Eigen::VectorXd gamma(n), mass(n);
  gamma[0] = 1.0;
  mass[0] = 1.0;
  if (n > 1) {
    gamma[1] = 0.7;
    mass[1] = 1.5;
  }
  return nn_force_field(s, gamma, mass);
}

bool spectral_algebra(std::string& detail) {
  double worst = 0.0;
  for (auto [d, n, N] : {std::tuple<int, int, int>{1, 1, 256},
                         {1, 2, 256},
                         {2, 1, 128},
                         {2, 2, 128}}) {
    ForceField ff = nn_model(d, n, N);
    DispersionTable table = dispersion_table(ff);
    Grid g(ff.lattice);
    Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(n, n);
    for (Index k = 0; k < g.size(); ++k) {
      const auto& bands = table.bands[k];
      Eigen::MatrixXcd psum = Eigen::MatrixXcd::Zero(n, n);
      Eigen::MatrixXcd osq = Eigen::MatrixXcd::Zero(n, n);
      for (std::size_t s = 0; s < bands.size(); ++s) {
        const Eigen::MatrixXcd& p = bands[s].proj;
        psum += p;
        osq += bands[s].omega * bands[s].omega * p;
        worst = std::max(worst, (p * p - p).cwiseAbs().maxCoeff());
        worst = std::max(worst, (p - p.adjoint()).cwiseAbs().maxCoeff());
        for (std::size_t r = s + 1; r < bands.size(); ++r)
          worst = std::max(worst, (p * bands[r].proj).cwiseAbs().maxCoeff());
      }
      worst = std::max(worst, (psum - eye).cwiseAbs().maxCoeff());
      worst = std::max(worst, (osq - table.symbol[k]).cwiseAbs().maxCoeff());

      // evenness: the frequency ladder at theta and -theta coincides
      auto ladder = [n](const std::vector<Band>& bs) {
        std::vector<double> l;
        for (const Band& b : bs)
          for (int m = 0; m < b.mult; ++m) l.push_back(b.omega);
        l.resize(std::size_t(n), l.empty() ? 0.0 : l.back());
        return l;
      };
      std::vector<double> here = ladder(bands);
      std::vector<double> even = ladder(table.bands[g.conj_index(k)]);
      for (int s = 0; s < n; ++s) worst = std::max(worst, std::abs(here[s] - even[s]));
    }
  }
  detail = "max identity residual " + fmt(worst) + " on 4 models, tol 1e-10";
  return worst < kAlgebraTol;
}

// ---- criterion 2: exactness of the flow ------------------------------------

constexpr double kFlowTol = 1e-9;
constexpr double kVerletTol = 1e-4;

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

Eigen::ArrayXXd force_of(const ForceField& ff, const Eigen::ArrayXXd& u) {
  Grid g(ff.lattice);
  Eigen::ArrayXXd out = Eigen::ArrayXXd::Zero(u.rows(), u.cols());
  for (const auto& [z, m] : ff.terms)
    for (Index x = 0; x < g.size(); ++x) {
      Index y = g.shifted(x, z.data());
      for (int i = 0; i < ff.lattice.n; ++i)
        for (int j = 0; j < ff.lattice.n; ++j) out(x, i) -= m(i, j) * u(y, j);
    }
  return out;
}

bool flow_exactness(std::string& detail) {
  double worst = 0.0;

  // single normal mode on a 16-site chain against the closed form
  {
    ForceField ff = nn_model(1, 1, 16);
    DispersionTable table = dispersion_table(ff);
    Grid g(ff.lattice);
    Index k = 3;
    double theta = g.theta(k)[0];
    double omega = std::sqrt(3.0 - 2.0 * std::cos(theta));
    PhaseField f = PhaseField::zero(ff.lattice);
    for (Index x = 0; x < g.size(); ++x) f.u(x, 0) = std::cos(theta * double(x));
    double t = 3.7;
    evolve(f, propagator_table(table, t));
    for (Index x = 0; x < g.size(); ++x) {
      double uex = std::cos(omega * t) * std::cos(theta * double(x));
      double vex = -omega * std::sin(omega * t) * std::cos(theta * double(x));
      worst = std::max({worst, std::abs(f.u(x, 0) - uex), std::abs(f.v(x, 0) - vex)});
    }
  }

  ForceField ff = nn_model(1, 1, 64);
  DispersionTable table = dispersion_table(ff);
  PhaseField f0 = random_field(ff.lattice, 17);
  double h0 = energy(f0, ff);

  // energy conservation out to t = 1000
  for (double t : {1.0, 10.0, 100.0, 1000.0}) {
    PhaseField f = f0;
    evolve(f, propagator_table(table, t));
    worst = std::max(worst, std::abs(energy(f, ff) - h0) / h0);
  }

  // reversibility and the group law
  {
    PhaseField f = f0;
    evolve(f, propagator_table(table, 17.3));
    evolve(f, propagator_table(table, -17.3));
    worst = std::max(worst, field_gap(f, f0));

    PhaseField a = f0, b = f0;
    evolve(a, propagator_table(table, 5.2));
    evolve(a, propagator_table(table, 12.1));
    evolve(b, propagator_table(table, 17.3));
    worst = std::max(worst, field_gap(a, b));
  }
  bool exact_ok = worst < kFlowTol;

  // independent time stepper: velocity Verlet at dt = 1e-3 down to t = 1
  ForceField ff32 = nn_model(1, 1, 32);
  DispersionTable table32 = dispersion_table(ff32);
  PhaseField ref = random_field(ff32.lattice, 23);
  PhaseField step = ref;
  const double dt = 1e-3;
  const int nsteps = 1000;
  Eigen::ArrayXXd acc = force_of(ff32, step.u);
  for (int i = 0; i < nsteps; ++i) {
    step.u += dt * step.v + 0.5 * dt * dt * acc;
    Eigen::ArrayXXd acc2 = force_of(ff32, step.u);
    step.v += 0.5 * dt * (acc + acc2);
    acc = acc2;
  }
  evolve(ref, propagator_table(table32, dt * nsteps));
  double verlet_gap = field_gap(step, ref);

  detail = "spectral flow residual " + fmt(worst) + " (tol 1e-9), Verlet gap " +
           fmt(verlet_gap) + " (tol 1e-4)";
  return exact_ok && verlet_gap < kVerletTol;
}

// ---- criteria 3-7: the packaged experiments --------------------------------

std::string out_root() {
  return (std::filesystem::temp_directory_path() / "latdyn-acceptance").string();
}

std::string summarize(const ExperimentResult& res) {
  int total = int(res.manifest.verdicts.size());
  int ok = 0;
  std::string failing;
  for (const Verdict& v : res.manifest.verdicts) {
    if (v.passed)
      ++ok;
    else
      failing += (failing.empty() ? "" : ", ") + v.name + " [" + v.detail + "]";
  }
  std::string s = std::to_string(ok) + "/" + std::to_string(total) + " verdicts";
  if (!failing.empty()) s += "; failing: " + failing;
  return s;
}

bool green_decay_both_dims(std::string& detail) {
  ExperimentConfig c1 = default_config(ExperimentKind::green_decay);
  c1.out_dir = out_root() + "/green-d1";
  ExperimentResult r1 = run_experiment(c1);

  ExperimentConfig c2 = default_config(ExperimentKind::green_decay);
  c2.force_field = nn_model(2, 1, 64);
  c2.extent = 512;  // the d = 1 default extent would square to an 8192^2 grid
  c2.out_dir = out_root() + "/green-d2";
  ExperimentResult r2 = run_experiment(c2);

  detail = "d=1: " + summarize(r1) + "; d=2: " + summarize(r2);
  return r1.passed && r2.passed;
}

bool run_default(ExperimentKind kind, const char* dir, std::string& detail) {
  ExperimentConfig cfg = default_config(kind);
  cfg.out_dir = out_root() + "/" + dir;
  ExperimentResult res = run_experiment(cfg);
  detail = summarize(res);
  return res.passed;
}

// ---- criterion 8: the two local-covariance constructions agree -------------

constexpr double kLocalResidueTol = 1e-8;

bool local_covariance_consistency(std::string& detail) {
  ForceField ff = nn_model(1, 1, 256);
  DispersionTable table = dispersion_table(ff);
  auto grad = thermal_gradient_profile(1, 64.0, 1.0, 0.6);
  auto step = step_profile(1, 64.0, 0.5, 1.5, 32.0, 10.0, 4.0);
  auto packet = wave_packet_profile(1, 64.0, 0.2, 1.0, 32.0, 600.0, kPi / 2.0, 4.0);

  int cases = 0;
  double worst = 0.0;
  for (const SlowProfile* p : {grad.get(), step.get(), packet.get()})
    for (double tau : {0.5, 1.0, 2.0})
      for (double rv : {16.0, 32.0, 48.0}) {
        Eigen::VectorXd r = Eigen::VectorXd::Constant(1, rv);
        // the construction itself cross-checks its two forms to 1e-8 and
        // throws on disagreement, so arriving here means they matched
        LimitCovariance q = local_covariance(*p, table, tau, r);
        worst = std::max(worst, equipartition_residue(q, table));
        worst = std::max(worst, stationarity_check(q, table, 7.3));
        ++cases;
      }
  detail = std::to_string(cases) + " profile/tau/r cases, worst invariance residue " + fmt(worst) +
           " (tol 1e-8)";
  return cases == 27 && worst < kLocalResidueTol;
}

// ---- criterion 9: statistical hygiene of the battery ------------------------

bool statistical_hygiene(std::string& detail) {
  bool nightly = false;
  if (const char* env = std::getenv("LATDYN_NIGHTLY")) nightly = std::strcmp(env, "1") == 0;
  int batteries = nightly ? 20 : 3;

  int failed = 0;
  std::string first_failure;
  for (int b = 0; b < batteries; ++b) {
    std::uint64_t seed = 1000 + std::uint64_t(b);
    bool ok = true;
    for (ExperimentKind kind :
         {ExperimentKind::homogeneous_convergence, ExperimentKind::local_stationarity,
          ExperimentKind::kinetic_wigner, ExperimentKind::gaussianization}) {
      ExperimentConfig cfg = default_config(kind);
      cfg.reduced = true;
      cfg.seed = seed;
      cfg.out_dir = out_root() + "/hygiene-" + std::to_string(b) + "-" + experiment_name(kind);
      ExperimentResult res = run_experiment(cfg);
      if (!res.passed) {
        ok = false;
        if (first_failure.empty())
          first_failure = experiment_name(kind) + "@seed" + std::to_string(seed) + ": " +
                          summarize(res);
      }
    }
    if (!ok) ++failed;
  }
  detail = std::to_string(failed) + "/" + std::to_string(batteries) + " reseeded batteries failed (" +
           (nightly ? "nightly mode, full 20-battery study" : "smoke mode, set LATDYN_NIGHTLY=1 for the full study") +
           ")";
  if (!first_failure.empty()) detail += "; first failure " + first_failure;
  return failed == 0;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<bool(std::string&)> body;
  };
  std::vector<Criterion> criteria = {
      {1, "spectral-algebra", spectral_algebra},
      {2, "flow-exactness", flow_exactness},
      {3, "green-decay", green_decay_both_dims},
      {4, "homogeneous-relaxation",
       [](std::string& d) {
         return run_default(ExperimentKind::homogeneous_convergence, "homogeneous", d);
       }},
      {5, "stationarity",
       [](std::string& d) {
         return run_default(ExperimentKind::local_stationarity, "stationarity", d);
       }},
      {6, "kinetic-wigner",
       [](std::string& d) { return run_default(ExperimentKind::kinetic_wigner, "kinetic", d); }},
      {7, "gaussianization",
       [](std::string& d) {
         return run_default(ExperimentKind::gaussianization, "gaussianization", d);
       }},
      {8, "local-covariance-consistency", local_covariance_consistency},
      {9, "statistical-hygiene", statistical_hygiene},
  };

  std::filesystem::create_directories(out_root());
  int passed = 0;
  for (const Criterion& c : criteria) {
    auto start = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = false;
    try {
      ok = c.body(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %d  %-30s %s  (%s; %.1f s)\n", c.id, c.name, ok ? "PASS" : "FAIL",
                detail.c_str(), secs);
    std::fflush(stdout);
    if (ok) ++passed;
  }
  std::printf("acceptance: %d/9 criteria passed\n", passed);
  return passed == 9 ? 0 : 1;
}
