#include "doctest.h"

#include <cmath>

#include "latdyn/fft.hpp"
#include "latdyn/sampling.hpp"
#include "latdyn/stats.hpp"

using namespace latdyn;

namespace {

ForceField massive_chain(int N) {
  LatticeSpec s{1, 1, N};
  return nn_force_field(s, Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1));
}

// Gibbs pair correlation on the finite dual grid: q_uu(y) = T/N sum 1/V_hat,
// q_vv(y) = T delta_y0, q_uv = 0.
double gibbs_quu(const DispersionTable& table, double T, int y) {
  Grid g(table.lattice);
  double acc = 0.0;
  for (Index k = 0; k < g.size(); ++k) {
    double theta = g.theta(k)[0];
    acc += std::cos(theta * y) / (3.0 - 2.0 * std::cos(theta));
  }
  return T * acc / double(g.size());
}

// constant tabulated density with a negative displacement block: legal to
// interpolate, but no covariance can look like it
std::unique_ptr<SlowProfile> non_psd_profile() {
  Eigen::MatrixXcd bad = Eigen::MatrixXcd::Zero(2, 2);
  bad(0, 0) = -0.5;
  bad(1, 1) = 1.0;
  std::vector<Eigen::MatrixXcd> values(16, bad);
  return std::make_unique<TabulatedProfile>(1, 1, 64.0, std::vector<int>{4},
                                            std::vector<int>{4}, values);
}

}  // namespace

TEST_CASE("stock spectra match their closed forms and validate") {
  ForceField ff = massive_chain(32);
  DispersionTable table = dispersion_table(ff);
  Grid g(ff.lattice);
  double T = 1.3;

  HomogeneousSpectrum gibbs = gibbs_spectrum(table, T);
  HomogeneousSpectrum flat = flat_occupation_spectrum(table, T);
  HomogeneousSpectrum tilt = nonequilibrium_spectrum(table, T, 0.9);

  for (Index k = 0; k < g.size(); ++k) {
    double theta = g.theta(k)[0];
    double vhat = 3.0 - 2.0 * std::cos(theta);
    double omega = std::sqrt(vhat);
    CHECK(std::abs(gibbs.q[k](0, 0) - T / vhat) < 1e-12);
    CHECK(std::abs(gibbs.q[k](1, 1) - T) < 1e-12);
    CHECK(std::abs(gibbs.q[k](0, 1)) < 1e-14);
    CHECK(std::abs(flat.q[k](0, 0) - T / omega) < 1e-12);
    CHECK(std::abs(flat.q[k](1, 1) - T * omega) < 1e-12);
    CHECK(std::abs(tilt.q[k](0, 0) - T * (1.0 + 0.9 * std::cos(theta)) / vhat) < 1e-12);
    CHECK(std::abs(tilt.q[k](1, 1) - T) < 1e-12);
  }

  for (const HomogeneousSpectrum* s : {&gibbs, &flat, &tilt}) {
    SpectrumReport rep = validate_spectrum(*s);
    CHECK(rep.ok);
    CHECK(rep.min_eigenvalue > 0.0);
    CHECK(rep.reality_residue < 1e-12);
  }
}

TEST_CASE("hermitian square roots square back") {
  Rng rng(5, 0);
  Eigen::MatrixXcd m(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m(i, j) = Complex(rng.normal(), rng.normal());
  Eigen::MatrixXcd psd = m * m.adjoint();
  Eigen::MatrixXcd root = hermitian_sqrt(psd);
  CHECK((root - root.adjoint()).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((root * root - psd).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("homogeneous sampler reproduces the Gibbs pair correlation") {
  ForceField ff = massive_chain(64);
  DispersionTable table = dispersion_table(ff);
  double T = 1.3;
  HomogeneousSpectrum spec = gibbs_spectrum(table, T);

  std::vector<Eigen::VectorXi> offsets;
  for (int o : {0, 1, 5}) offsets.push_back(Eigen::VectorXi::Constant(1, o));
  Eigen::VectorXi x0 = Eigen::VectorXi::Constant(1, 32);

  for (NoiseKind noise : {NoiseKind::gaussian, NoiseKind::uniform_filtered}) {
    SpectrumSampler sampler(spec, noise);
    SampleSource src = [&](Index i) { return sampler.draw(42, std::uint64_t(i)); };
    CovarianceEstimate est = estimate_covariance(3000, src, x0, offsets);
    for (std::size_t o = 0; o < offsets.size(); ++o) {
      int y = offsets[o][0];
      CHECK(std::abs(est.mean[o](0, 0) - gibbs_quu(table, T, y)) < 4.0 * est.se[o](0, 0));
      double qvv = y == 0 ? T : 0.0;
      CHECK(std::abs(est.mean[o](1, 1) - qvv) < 4.0 * est.se[o](1, 1));
      CHECK(std::abs(est.mean[o](0, 1)) < 4.0 * est.se[o](0, 1));
    }
  }
}

TEST_CASE("normal coordinates reconstruct the phase field") {
  ForceField ff = massive_chain(32);
  DispersionTable table = dispersion_table(ff);
  Grid g(ff.lattice);
  HomogeneousSpectrum spec = gibbs_spectrum(table, 0.8);
  SpectrumSampler sampler(spec);
  PhaseField f = sampler.draw(9, 0);

  Eigen::ArrayXXcd a = a_field(f, table);
  Fft fft(1, 32);
  Eigen::VectorXcd a_site = a.col(0).matrix();
  Eigen::VectorXcd a_dual(g.size());
  fft.to_dual(a_site.data(), a_dual.data());

  Eigen::VectorXcd u_dual(g.size()), v_dual(g.size());
  for (Index k = 0; k < g.size(); ++k) {
    double omega = table.bands[k][0].omega;
    Complex plus = a_dual[k] + std::conj(a_dual[g.conj_index(k)]);
    Complex minus = a_dual[k] - std::conj(a_dual[g.conj_index(k)]);
    u_dual[k] = plus / (std::sqrt(2.0) * std::sqrt(omega));
    v_dual[k] = Complex(0.0, -1.0) * minus * std::sqrt(omega) / std::sqrt(2.0);
  }
  Eigen::ArrayXd u_back(g.size()), v_back(g.size());
  fft.to_site_real(u_dual, u_back);
  fft.to_site_real(v_dual, v_back);
  CHECK((u_back - f.u.col(0)).abs().maxCoeff() < 1e-9);
  CHECK((v_back - f.v.col(0)).abs().maxCoeff() < 1e-9);
}

TEST_CASE("filtered uniform noise shows its quartic deficit through probes") {
  ForceField ff = massive_chain(64);
  DispersionTable table = dispersion_table(ff);
  HomogeneousSpectrum spec = gibbs_spectrum(table, 1.0);

  // velocity coloring under the Gibbs density is the identity in site space,
  // so a one-site velocity probe reads a single white coordinate: normalized
  // excess kurtosis exactly 1.8/3 - 1 = -0.4 for uniform noise
  PairProbe vprobe;
  vprobe.sites = {Eigen::VectorXi::Constant(1, 20)};
  vprobe.wu = {Eigen::VectorXd::Zero(1)};
  vprobe.wv = {Eigen::VectorXd::Ones(1)};

  // a displacement probe mixes many coordinates; prediction from the exact
  // coloring coefficients c: excess = -0.4 sum c^4 / (sum c^2)^2
  PairProbe uprobe;
  uprobe.sites = {Eigen::VectorXi::Constant(1, 20)};
  uprobe.wu = {Eigen::VectorXd::Ones(1)};
  uprobe.wv = {Eigen::VectorXd::Zero(1)};

  SpectrumSampler uni(spec, NoiseKind::uniform_filtered);
  SampleSource src = [&](Index i) { return uni.draw(77, std::uint64_t(i)); };
  auto res = fourth_cumulant_test(6000, src, {vprobe, uprobe}, 1234);
  REQUIRE(res.size() == 2);

  CHECK(std::abs(res[0].excess - (-0.4)) < 4.0 * res[0].se);
  CHECK(res[0].z() < -5.0);
  CHECK(std::abs(res[0].variance - 1.0) < 0.1);  // q_vv(0) = T = 1

  Eigen::ArrayXXd cu = uni.probe_coefficients(uprobe);
  double c2 = (cu * cu).sum();
  double c4 = (cu * cu * cu * cu).sum();
  double predicted = -0.4 * c4 / (c2 * c2);
  CHECK(std::abs(res[1].excess - predicted) < 4.0 * res[1].se);

  // the same functionals of a Gaussian ensemble carry no excess
  SpectrumSampler gau(spec, NoiseKind::gaussian);
  SampleSource gsrc = [&](Index i) { return gau.draw(78, std::uint64_t(i)); };
  auto gres = fourth_cumulant_test(6000, gsrc, {vprobe}, 4321);
  CHECK(std::abs(gres[0].z()) < 4.0);
}

TEST_CASE("characteristic functional of a Gaussian ensemble matches its variance") {
  ForceField ff = massive_chain(64);
  DispersionTable table = dispersion_table(ff);
  HomogeneousSpectrum spec = gibbs_spectrum(table, 1.3);
  SpectrumSampler sampler(spec);

  PairProbe probe;
  probe.sites = {Eigen::VectorXi::Constant(1, 10), Eigen::VectorXi::Constant(1, 13)};
  probe.wu = {Eigen::VectorXd::Ones(1), 0.5 * Eigen::VectorXd::Ones(1)};
  probe.wv = {Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1)};

  Eigen::ArrayXXd c = sampler.probe_coefficients(probe);
  double variance = (c * c).sum();
  SampleSource src = [&](Index i) { return sampler.draw(5, std::uint64_t(i)); };
  CharFuncResult res = characteristic_functional(4000, src, probe, variance);
  CHECK(res.difference < 4.0 * res.se);
}

TEST_CASE("slow sampler freezes the local Gibbs state on each cube") {
  ForceField ff = massive_chain(1024);
  std::unique_ptr<SlowProfile> profile = thermal_gradient_profile(1, 64.0, 1.0, 0.6);
  SlowFamilyConfig fam;
  fam.eps = 1.0 / 16.0;
  fam.block_side = 32;
  fam.noise = NoiseKind::gaussian;
  SlowSampler sampler(*profile, ff, fam);
  CHECK(sampler.cube_count() == 32);

  // cube 0 spans sites [0, 32), center site 16, macroscopic point r = 1
  Eigen::VectorXd r0 = sampler.cube_center(0);
  CHECK(r0[0] == doctest::Approx(1.0));
  double T_frozen = 1.0 * (1.0 + 0.6 * std::cos(kTwoPi * r0[0] / 64.0));

  DispersionTable table = dispersion_table(ff);
  std::vector<Eigen::VectorXi> offsets;
  for (int o : {0, 1, 2}) offsets.push_back(Eigen::VectorXi::Constant(1, o));
  Eigen::VectorXi x0 = Eigen::VectorXi::Constant(1, 16);
  SampleSource src = [&](Index i) { return sampler.draw(3, std::uint64_t(i)); };
  CovarianceEstimate est = estimate_covariance(1500, src, x0, offsets);

  // frozen state inside the cube = homogeneous Gibbs at T(r_cube); the dual
  // sum runs over the cube's own 32-point grid
  LatticeSpec cube{1, 1, 32};
  ForceField ff_cube = nn_force_field(cube, Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1));
  DispersionTable cube_table = dispersion_table(ff_cube);
  for (std::size_t o = 0; o < offsets.size(); ++o) {
    int y = offsets[o][0];
    CHECK(std::abs(est.mean[o](0, 0) - gibbs_quu(cube_table, T_frozen, y)) <
          4.0 * est.se[o](0, 0));
    double qvv = y == 0 ? T_frozen : 0.0;
    CHECK(std::abs(est.mean[o](1, 1) - qvv) < 4.0 * est.se[o](1, 1));
  }
}

TEST_CASE("profile admissibility checks accept stock profiles and reject a signed one") {
  ForceField ff = massive_chain(256);
  DispersionTable table = dispersion_table(ff);
  std::vector<Eigen::VectorXd> r_samples;
  for (int i = 0; i < 7; ++i) r_samples.push_back(Eigen::VectorXd::Constant(1, 64.0 * i / 7.0));

  auto grad = thermal_gradient_profile(1, 64.0, 1.0, 0.6);
  ProfileReport rg = validate_profile(*grad, table, r_samples);
  CHECK(rg.all_passed());

  auto packet = wave_packet_profile(1, 64.0, 0.2, 1.0, 32.0, 600.0, kPi / 2.0, 4.0);
  ProfileReport rp = validate_profile(*packet, table, r_samples);
  CHECK(rp.all_passed());

  auto step = step_profile(1, 64.0, 0.5, 1.5, 32.0, 10.0, 4.0);
  ProfileReport rs = validate_profile(*step, table, r_samples);
  CHECK(rs.all_passed());

  auto bad = non_psd_profile();
  ProfileReport rb = validate_profile(*bad, table, r_samples);
  CHECK(!rb.psd_ok);
  CHECK(rb.min_eigenvalue < 0.0);
}

TEST_CASE("profiles parse from JSON with their parameters intact") {
  const char* doc = R"({"kind": "thermal-gradient", "n": 1, "box": 64,
                        "T0": 1.0, "amplitude": 0.6})";
  std::unique_ptr<SlowProfile> p = profile_from_json(doc);
  CHECK(p->components() == 1);
  CHECK(p->box() == doctest::Approx(64.0));

  ForceField ff = massive_chain(64);
  DispersionTable table = dispersion_table(ff);
  auto ref = thermal_gradient_profile(1, 64.0, 1.0, 0.6);
  Eigen::VectorXd r = Eigen::VectorXd::Constant(1, 7.3);
  Grid g(ff.lattice);
  for (Index k : {Index(3), Index(40)}) {
    Eigen::MatrixXcd a = p->density(r, table, k);
    Eigen::MatrixXcd b = ref->density(r, table, k);
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
  }

  CHECK_THROWS(profile_from_json("{\"kind\": \"no-such-profile\"}"));
}
