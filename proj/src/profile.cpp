#include "latdyn/profile.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "latdyn/fft.hpp"

namespace latdyn {

namespace {

// quintic ramp: 0 below 0, 1 above 1, C^2 at both ends
double edge01(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return x * x * x * (10.0 + x * (-15.0 + 6.0 * x));
}

}  // namespace

Eigen::MatrixXcd ScalarWeightProfile::density(const Eigen::VectorXd& r,
                                              const DispersionTable& table, Index k) const {
  require(table.lattice.n == components(), "profile: component count mismatch");
  require(!table.singular[k], "profile: dispersion is singular at a requested dual point");
  Grid g(table.lattice);
  int n = components();
  double S = weight(r, g.theta(k));
  require(S >= 0.0 && std::isfinite(S), "profile: weight must be finite and nonnegative");
  Eigen::MatrixXcd q = Eigen::MatrixXcd::Zero(2 * n, 2 * n);
  if (structure() == ProfileStructure::gibbs) {
    q.topLeftCorner(n, n) =
        S * band_function(table.bands[k], n, [](double w) { return 1.0 / (w * w); });
    q.bottomRightCorner(n, n) = S * Eigen::MatrixXcd::Identity(n, n);
  } else {
    q.topLeftCorner(n, n) =
        S * band_function(table.bands[k], n, [](double w) { return 1.0 / w; });
    q.bottomRightCorner(n, n) =
        S * band_function(table.bands[k], n, [](double w) { return w; });
  }
  return q;
}

namespace {

class ThermalGradientProfile final : public ScalarWeightProfile {
 public:
  ThermalGradientProfile(int n, double box, double T0, double a, int axis, double phase)
      : ScalarWeightProfile(n, box, ProfileStructure::gibbs),
        T0_(T0), a_(a), axis_(axis), phase_(phase) {
    require(T0 > 0 && std::abs(a) < 1.0, "thermal-gradient: need T0 > 0 and |a| < 1");
    require(axis >= 0, "thermal-gradient: axis must be nonnegative");
  }

  double weight(const Eigen::VectorXd& r, const Eigen::VectorXd&) const override {
    require(axis_ < r.size(), "thermal-gradient: axis out of range");
    return T0_ * (1.0 + a_ * std::cos(kTwoPi * (r[axis_] - phase_) / box()));
  }

  std::string describe() const override { return "thermal-gradient"; }
  double lipschitz_bound() const override { return T0_ * std::abs(a_) * kTwoPi / box(); }

 private:
  double T0_, a_;
  int axis_;
  double phase_;
};

class StepProfile final : public ScalarWeightProfile {
 public:
  StepProfile(int n, double box, double T_low, double T_high, double center,
              double half_width, double transition, int axis)
      : ScalarWeightProfile(n, box, ProfileStructure::gibbs),
        T_low_(T_low), T_high_(T_high), center_(center), half_(half_width),
        trans_(transition), axis_(axis) {
    require(T_low > 0 && T_high > 0, "step: temperatures must be positive");
    require(transition > 0, "step: transition width must be positive");
    require(half_width + transition / 2 < box / 2, "step: plateau must fit in the box");
    require(axis >= 0, "step: axis must be nonnegative");
  }

  double weight(const Eigen::VectorXd& r, const Eigen::VectorXd&) const override {
    require(axis_ < r.size(), "step: axis out of range");
    double du = wrap(r[axis_] - center_ + box() / 2) - box() / 2;  // in [-box/2, box/2)
    double window = edge01((half_ + trans_ / 2 - std::abs(du)) / trans_);
    return T_low_ + (T_high_ - T_low_) * window;
  }

  std::string describe() const override { return "step"; }
  double lipschitz_bound() const override {
    return std::abs(T_high_ - T_low_) * 1.875 / trans_;  // max slope of the quintic ramp
  }

 private:
  double T_low_, T_high_, center_, half_, trans_;
  int axis_;
};

class WavePacketProfile final : public ScalarWeightProfile {
 public:
  WavePacketProfile(int n, double box, double T0, double A, double r0, double kappa_r,
                    double theta_star, double kappa_theta, int axis)
      : ScalarWeightProfile(n, box, ProfileStructure::occupation),
        T0_(T0), A_(A), r0_(r0), kr_(kappa_r), ts_(theta_star), kt_(kappa_theta),
        axis_(axis) {
    require(T0 > 0 && A >= 0, "wave-packet: need T0 > 0 and A >= 0");
    require(kappa_r >= 0 && kappa_theta >= 0, "wave-packet: concentration must be >= 0");
    require(axis >= 0, "wave-packet: axis must be nonnegative");
  }

  double weight(const Eigen::VectorXd& r, const Eigen::VectorXd& theta) const override {
    require(axis_ < r.size() && axis_ < theta.size(), "wave-packet: axis out of range");
    double env = std::exp(kr_ * (std::cos(kTwoPi * (r[axis_] - r0_) / box()) - 1.0));
    double th = theta[axis_];
    double vm = std::exp(kt_ * (std::cos(th - ts_) - 1.0)) +
                std::exp(kt_ * (std::cos(th + ts_) - 1.0));
    return T0_ + A_ * env * vm;
  }

  std::string describe() const override { return "wave-packet"; }
  double lipschitz_bound() const override {
    // |d env/dr| <= kappa_r 2 pi / box, vm <= 2
    return 2.0 * A_ * kr_ * kTwoPi / box();
  }

 private:
  double T0_, A_, r0_, kr_, ts_, kt_;
  int axis_;
};

class ConstantProfile final : public ScalarWeightProfile {
 public:
  ConstantProfile(int n, double box, double T, ProfileStructure structure)
      : ScalarWeightProfile(n, box, structure), T_(T) {
    require(T > 0, "constant profile: T must be positive");
  }

  double weight(const Eigen::VectorXd&, const Eigen::VectorXd&) const override { return T_; }
  std::string describe() const override { return "constant"; }
  double lipschitz_bound() const override { return 0.0; }

 private:
  double T_;
};

}  // namespace

std::unique_ptr<SlowProfile> thermal_gradient_profile(int n, double box, double T0, double a,
                                                      int axis, double phase) {
  return std::make_unique<ThermalGradientProfile>(n, box, T0, a, axis, phase);
}

std::unique_ptr<SlowProfile> step_profile(int n, double box, double T_low, double T_high,
                                          double center, double half_width, double transition,
                                          int axis) {
  return std::make_unique<StepProfile>(n, box, T_low, T_high, center, half_width, transition,
                                       axis);
}

std::unique_ptr<SlowProfile> wave_packet_profile(int n, double box, double T0, double A,
                                                 double r0, double kappa_r, double theta_star,
                                                 double kappa_theta, int axis) {
  return std::make_unique<WavePacketProfile>(n, box, T0, A, r0, kappa_r, theta_star,
                                             kappa_theta, axis);
}

std::unique_ptr<SlowProfile> constant_profile(int n, double box, double T,
                                              ProfileStructure structure) {
  return std::make_unique<ConstantProfile>(n, box, T, structure);
}

TabulatedProfile::TabulatedProfile(int d, int n, double box, std::vector<int> shape_r,
                                   std::vector<int> shape_theta,
                                   std::vector<Eigen::MatrixXcd> values)
    : d_(d), n_(n), box_(box), shape_r_(std::move(shape_r)),
      shape_theta_(std::move(shape_theta)), values_(std::move(values)) {
  require(d >= 1 && d <= 4 && n >= 1 && box > 0, "tabulated: bad d/n/box");
  require(int(shape_r_.size()) == d && int(shape_theta_.size()) == d,
          "tabulated: need one shape entry per axis");
  Index total = 1;
  for (int m : shape_r_) {
    require(m >= 1, "tabulated: shape entries must be >= 1");
    total *= m;
  }
  for (int m : shape_theta_) {
    require(m >= 1, "tabulated: shape entries must be >= 1");
    total *= m;
  }
  require(Index(values_.size()) == total, "tabulated: value count does not match shape");
  for (const auto& v : values_)
    require(v.rows() == 2 * n && v.cols() == 2 * n, "tabulated: blocks must be 2n x 2n");
}

Eigen::MatrixXcd TabulatedProfile::value_at(const Eigen::VectorXd& r,
                                            const Eigen::VectorXd& theta) const {
  require(r.size() == d_ && theta.size() == d_, "tabulated: coordinate dimension mismatch");
  // cell coordinates along the 2d interpolation axes (r axes then theta axes)
  int base[8];
  double frac[8];
  int shape[8];
  for (int a = 0; a < d_; ++a) {
    double unit = r[a] / box_ - std::floor(r[a] / box_);
    double p = unit * shape_r_[a];
    base[a] = int(std::floor(p)) % shape_r_[a];
    frac[a] = p - std::floor(p);
    shape[a] = shape_r_[a];
  }
  for (int a = 0; a < d_; ++a) {
    double unit = theta[a] / kTwoPi - std::floor(theta[a] / kTwoPi);
    double p = unit * shape_theta_[a];
    base[d_ + a] = int(std::floor(p)) % shape_theta_[a];
    frac[d_ + a] = p - std::floor(p);
    shape[d_ + a] = shape_theta_[a];
  }
  int axes = 2 * d_;
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(2 * n_, 2 * n_);
  for (int corner = 0; corner < (1 << axes); ++corner) {
    double w = 1.0;
    Index idx = 0;
    for (int a = 0; a < axes; ++a) {
      int hi = (corner >> a) & 1;
      int coord = (base[a] + hi) % shape[a];
      w *= hi ? frac[a] : 1.0 - frac[a];
      idx = idx * shape[a] + coord;
    }
    if (w != 0.0) out += w * values_[idx];
  }
  return out;
}

Eigen::MatrixXcd TabulatedProfile::density(const Eigen::VectorXd& r,
                                           const DispersionTable& table, Index k) const {
  require(table.lattice.n == n_, "tabulated: component count mismatch");
  Grid g(table.lattice);
  return value_at(r, g.theta(k));
}

std::unique_ptr<SlowProfile> profile_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  std::string kind = j.at("kind").get<std::string>();
  int n = j.value("n", 1);
  double box = j.at("box").get<double>();
  if (kind == "thermal-gradient") {
    return thermal_gradient_profile(n, box, j.at("T0").get<double>(),
                                    j.at("amplitude").get<double>(), j.value("axis", 0),
                                    j.value("phase", 0.0));
  }
  if (kind == "step") {
    return step_profile(n, box, j.at("T_low").get<double>(), j.at("T_high").get<double>(),
                        j.at("center").get<double>(), j.at("half_width").get<double>(),
                        j.at("transition").get<double>(), j.value("axis", 0));
  }
  if (kind == "wave-packet") {
    return wave_packet_profile(n, box, j.at("T0").get<double>(), j.at("amplitude").get<double>(),
                               j.at("r0").get<double>(), j.at("kappa_r").get<double>(),
                               j.at("theta_star").get<double>(),
                               j.at("kappa_theta").get<double>(), j.value("axis", 0));
  }
  if (kind == "constant") {
    ProfileStructure st = j.value("structure", std::string("gibbs")) == "occupation"
                              ? ProfileStructure::occupation
                              : ProfileStructure::gibbs;
    return constant_profile(n, box, j.at("T").get<double>(), st);
  }
  if (kind == "tabulated") {
    int d = j.at("d").get<int>();
    std::vector<int> shape_r = j.at("shape_r").get<std::vector<int>>();
    std::vector<int> shape_theta = j.at("shape_theta").get<std::vector<int>>();
    std::vector<Eigen::MatrixXcd> values;
    for (const auto& block : j.at("values")) {
      Eigen::MatrixXcd m(2 * n, 2 * n);
      require(int(block.size()) == 2 * n, "tabulated: block row count");
      for (int row = 0; row < 2 * n; ++row) {
        require(int(block[row].size()) == 2 * n, "tabulated: block column count");
        for (int col = 0; col < 2 * n; ++col) {
          const auto& e = block[row][col];
          if (e.is_array())
            m(row, col) = Complex(e[0].get<double>(), e[1].get<double>());
          else
            m(row, col) = Complex(e.get<double>(), 0.0);
        }
      }
      values.push_back(std::move(m));
    }
    return std::make_unique<TabulatedProfile>(d, n, box, shape_r, shape_theta, values);
  }
  throw std::runtime_error("profile_from_json: unknown kind '" + kind + "'");
}

int slow_block_side(int N, double eps, double beta) {
  require(N >= 8 && N % 2 == 0, "slow_block_side: N must be even and >= 8");
  require(eps > 0 && eps < 1, "slow_block_side: eps must lie in (0,1)");
  require(beta > 0.5 && beta < 1.0, "slow_block_side: beta must lie in (1/2, 1)");
  double target = std::pow(eps, -beta);
  int best = 0;
  double best_err = std::numeric_limits<double>::infinity();
  for (int m = 4; m <= N / 2; m += 2) {
    if (N % m != 0) continue;
    double err = std::abs(double(m) - target);
    if (err < best_err || (err == best_err && m > best)) {
      best = m;
      best_err = err;
    }
  }
  require(best > 0, "slow_block_side: no even divisor of N in [4, N/2]");
  return best;
}

SlowFamilyConfig make_slow_family_config(int N, double eps, double beta, NoiseKind noise) {
  SlowFamilyConfig cfg;
  cfg.eps = eps;
  cfg.beta = beta;
  cfg.block_side = slow_block_side(N, eps, beta);
  cfg.noise = noise;
  return cfg;
}

ProfileReport validate_profile(const SlowProfile& profile, const DispersionTable& table,
                               const std::vector<Eigen::VectorXd>& r_samples) {
  require(!r_samples.empty(), "validate_profile: need at least one r sample");
  Grid g(table.lattice);
  int n = table.lattice.n;
  int nb = 2 * n;
  Fft fft(table.lattice.d, table.lattice.N);

  ProfileReport rep;
  rep.min_eigenvalue = std::numeric_limits<double>::infinity();
  rep.fitted_gamma = std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es;

  std::vector<Eigen::VectorXcd> entry(nb * nb);  // dual-grid column per matrix entry
  for (auto& col : entry) col.resize(g.size());

  for (const auto& r : r_samples) {
    for (Index k = 0; k < g.size(); ++k) {
      Eigen::MatrixXcd q = profile.density(r, table, k);
      double adj = std::max((q.topLeftCorner(n, n) - q.topLeftCorner(n, n).adjoint())
                                .cwiseAbs().maxCoeff(),
                            (q.bottomRightCorner(n, n) - q.bottomRightCorner(n, n).adjoint())
                                .cwiseAbs().maxCoeff());
      adj = std::max(adj, (q.topRightCorner(n, n) - q.bottomLeftCorner(n, n).adjoint())
                              .cwiseAbs().maxCoeff());
      rep.adjoint_residue = std::max(rep.adjoint_residue, adj);
      es.compute(Eigen::MatrixXcd(0.5 * (q + q.adjoint())), Eigen::EigenvaluesOnly);
      rep.min_eigenvalue = std::min(rep.min_eigenvalue, es.eigenvalues()[0]);
      for (int i = 0; i < nb; ++i)
        for (int jj = 0; jj < nb; ++jj) entry[i * nb + jj][k] = q(i, jj);
    }

    // I1: transform each entry to position space, fit the decay of the
    // sitewise max norm against (1 + |x|) on a log-log scale
    std::vector<double> norm(g.size(), 0.0);
    Eigen::VectorXcd kernel(g.size());
    for (int e = 0; e < nb * nb; ++e) {
      fft.to_site(entry[e].data(), kernel.data());
      for (Index x = 0; x < g.size(); ++x)
        norm[x] = std::max(norm[x], std::abs(kernel[x]));
    }
    double scale = norm[0];
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    Index cnt = 0;
    for (Index x = 1; x < g.size(); ++x) {
      double rad = g.site_radius(x);
      if (rad < 2.0 || rad > table.lattice.N / 4.0) continue;
      if (norm[x] <= 1e-13 * scale) continue;
      double lx = std::log(1.0 + rad), ly = std::log(norm[x]);
      sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
      ++cnt;
    }
    double gamma_fit;
    if (cnt < 4) {
      // kernel under the noise floor everywhere past |x| ~ 2: decay is
      // faster than any power the fit could certify
      gamma_fit = std::numeric_limits<double>::infinity();
    } else {
      double denom = double(cnt) * sxx - sx * sx;
      require(denom > 0, "validate_profile: degenerate decay fit");
      gamma_fit = -(double(cnt) * sxy - sx * sy) / denom;
    }
    rep.fitted_gamma = std::min(rep.fitted_gamma, gamma_fit);

    // I4: centered finite difference along each macroscopic axis
    double h = profile.box() * 1e-4;
    for (int a = 0; a < table.lattice.d; ++a) {
      Eigen::VectorXd rp = r, rm = r;
      rp[a] += h;
      rm[a] -= h;
      // probe a fixed stencil of dual points rather than the whole grid
      for (Index k = 0; k < g.size(); k += std::max<Index>(1, g.size() / 64)) {
        double diff = (profile.density(rp, table, k) - profile.density(rm, table, k))
                          .cwiseAbs().maxCoeff() / (2 * h);
        rep.gradient_bound = std::max(rep.gradient_bound, diff);
      }
    }
  }

  rep.adjoint_ok = rep.adjoint_residue <= 1e-10;
  rep.psd_ok = rep.min_eigenvalue >= -1e-10;
  rep.decay_ok = rep.fitted_gamma > double(table.lattice.d);
  rep.gradient_ok = std::isfinite(rep.gradient_bound);
  return rep;
}

std::string profile_report_to_json(const ProfileReport& r) {
  nlohmann::json j;
  j["adjoint_ok"] = r.adjoint_ok;
  j["adjoint_residue"] = r.adjoint_residue;
  j["psd_ok"] = r.psd_ok;
  j["min_eigenvalue"] = r.min_eigenvalue;
  j["decay_ok"] = r.decay_ok;
  j["fitted_gamma"] = std::isfinite(r.fitted_gamma) ? r.fitted_gamma : 1e308;
  j["gradient_ok"] = r.gradient_ok;
  j["gradient_bound"] = r.gradient_bound;
  j["all_passed"] = r.all_passed();
  return j.dump(2);
}

}  // namespace latdyn
