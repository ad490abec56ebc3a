#include "latdyn/kinetic.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

#include "latdyn/evolution.hpp"

namespace latdyn {

namespace {

// Numerical guarantees on constructed covariances.  These are algebraic
// identities of the formulas, so a violation means a transcription bug,
// not statistical noise; the bounds only need to absorb roundoff.
constexpr double kHermitianTol = 1e-10;
constexpr double kPsdTol = 1e-10;
constexpr double kCrossFormTol = 1e-8;
constexpr double kBandMatchTol = 1e-8;

// sum_sigma P_sigma B P_sigma applied to each n x n block of a 2n x 2n matrix.
// This is the part of B that commutes with the flow; everything cross-band
// oscillates at frequency omega_sigma - omega_sigma' and averages away.
Eigen::MatrixXcd band_project_blocks(const Eigen::MatrixXcd& m,
                                     const std::vector<Band>& bands, int n) {
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(2 * n, 2 * n);
  for (const Band& b : bands) {
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        out.block(i * n, j * n, n, n) +=
            b.proj * m.block(i * n, j * n, n, n) * b.proj;
  }
  return out;
}

void require_hermitian_psd(const Eigen::MatrixXcd& m, Index k, const char* what) {
  double scale = std::max(1.0, m.norm());
  double herm = (m - m.adjoint()).norm();
  require(herm <= kHermitianTol * scale,
          std::string(what) + ": non-Hermitian output at grid point " +
              std::to_string(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(
      Eigen::MatrixXcd(0.5 * (m + m.adjoint())), Eigen::EigenvaluesOnly);
  require(es.eigenvalues().minCoeff() >= -kPsdTol * scale,
          std::string(what) + ": negative eigenvalue at grid point " +
              std::to_string(k));
}

}  // namespace

Eigen::MatrixXcd quadrature_matrix(const std::vector<Band>& bands, Index n) {
  Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(2 * n, 2 * n);
  c.block(0, n, n, n) = band_function(bands, static_cast<int>(n),
                                      [](double w) { return 1.0 / w; });
  c.block(n, 0, n, n) = -band_function(bands, static_cast<int>(n),
                                       [](double w) { return w; });
  return c;
}

LimitCovariance limit_covariance(const HomogeneousSpectrum& q0,
                                 const DispersionTable& table) {
  require(q0.lattice.d == table.lattice.d && q0.lattice.n == table.lattice.n &&
              q0.lattice.N == table.lattice.N,
          "limit_covariance: spectrum and dispersion table disagree on the lattice");
  const int n = table.lattice.n;
  Grid grid(table.lattice);

  LimitCovariance out;
  out.lattice = table.lattice;
  out.q.assign(grid.size(), Eigen::MatrixXcd::Zero(2 * n, 2 * n));
  out.masked.assign(grid.size(), 0);

  for (Index k = 0; k < grid.size(); ++k) {
    if (table.singular[k]) {
      out.masked[k] = 1;
      continue;
    }
    const std::vector<Band>& bands = table.bands[k];
    Eigen::MatrixXcd c = quadrature_matrix(bands, n);
    Eigen::MatrixXcd m0 = 0.5 * (q0.q[k] + c * q0.q[k] * c.adjoint());
    out.q[k] = band_project_blocks(m0, bands, n);
    require_hermitian_psd(out.q[k], k, "limit_covariance");
  }
  return out;
}

Eigen::MatrixXcd initial_wigner(const SlowProfile& profile,
                                const DispersionTable& table,
                                const Eigen::VectorXd& r, Index k) {
  require(!table.singular[k],
          "initial_wigner: grid point " + std::to_string(k) +
              " has a vanishing band frequency");
  const int n = table.lattice.n;
  const std::vector<Band>& bands = table.bands[k];
  Eigen::MatrixXcd sq =
      band_function(bands, n, [](double w) { return std::sqrt(w); });
  Eigen::MatrixXcd isq =
      band_function(bands, n, [](double w) { return 1.0 / std::sqrt(w); });

  Eigen::MatrixXcd rr = profile.density(r, table, k);
  const Complex iu(0.0, 1.0);
  Eigen::MatrixXcd w =
      0.5 * (sq * rr.block(0, 0, n, n) * sq + isq * rr.block(n, n, n, n) * isq +
             iu * sq * rr.block(0, n, n, n) * isq -
             iu * isq * rr.block(n, 0, n, n) * sq);
  return w;
}

WignerPrediction wigner_prediction(const SlowProfile& profile,
                                   const DispersionTable& table, double tau,
                                   const Eigen::VectorXd& r) {
  const int n = table.lattice.n;
  Grid grid(table.lattice);
  WignerPrediction out;
  out.lattice = table.lattice;
  out.tau = tau;
  out.w.assign(grid.size(), Eigen::MatrixXcd::Zero(n, n));
  out.masked.assign(grid.size(), 0);

  for (Index k = 0; k < grid.size(); ++k) {
    if (table.singular[k]) {
      out.masked[k] = 1;
      continue;
    }
    for (const Band& b : table.bands[k]) {
      Eigen::VectorXd back = r - tau * b.grad;
      out.w[k] += b.proj * initial_wigner(profile, table, back, k) * b.proj;
    }
  }
  return out;
}

LimitCovariance local_covariance(const SlowProfile& profile,
                                 const DispersionTable& table, double tau,
                                 const Eigen::VectorXd& r) {
  const int n = table.lattice.n;
  Grid grid(table.lattice);
  LimitCovariance out;
  out.lattice = table.lattice;
  out.q.assign(grid.size(), Eigen::MatrixXcd::Zero(2 * n, 2 * n));
  out.masked.assign(grid.size(), 0);

  const Complex iu(0.0, 1.0);
  for (Index k = 0; k < grid.size(); ++k) {
    Index kc = grid.conj_index(k);
    if (table.singular[k] || table.singular[kc]) {
      out.masked[k] = 1;
      continue;
    }
    const std::vector<Band>& bands = table.bands[k];
    const std::vector<Band>& cbands = table.bands[kc];
    require(bands.size() == cbands.size(),
            "local_covariance: band structure differs between theta and -theta");

    // Reference form: recover the covariance blocks from the transported
    // band-projected Wigner matrix at theta and at -theta.  The -theta factor
    // enters elementwise conjugated (it is the dual density of the reversed
    // pairing E[a(x+y) conj(a(x))]).
    Eigen::MatrixXcd q00 = Eigen::MatrixXcd::Zero(n, n);
    Eigen::MatrixXcd q01 = Eigen::MatrixXcd::Zero(n, n);
    Eigen::MatrixXcd q11 = Eigen::MatrixXcd::Zero(n, n);
    for (std::size_t s = 0; s < bands.size(); ++s) {
      const Band& b = bands[s];
      const Band& bc = cbands[s];
      require(std::abs(b.omega - bc.omega) <=
                  kBandMatchTol * std::max(1.0, table.max_omega),
              "local_covariance: band frequencies differ between theta and -theta");
      Eigen::MatrixXcd wp =
          b.proj * initial_wigner(profile, table, r - tau * b.grad, k) * b.proj;
      Eigen::MatrixXcd wm =
          (bc.proj * initial_wigner(profile, table, r - tau * bc.grad, kc) *
           bc.proj)
              .conjugate();
      Eigen::MatrixXcd avg = 0.5 * (wp + wm);
      Eigen::MatrixXcd dif = -0.5 * iu * (wp - wm);
      q00 += avg / b.omega;
      q11 += b.omega * avg;
      q01 += dif;
    }
    out.q[k].block(0, 0, n, n) = q00;
    out.q[k].block(0, n, n, n) = q01;
    out.q[k].block(n, 0, n, n) = -q01;
    out.q[k].block(n, n, n, n) = q11;

    // Independent form, assembled directly from the profile density with the
    // quadrature matrix: even/odd parts of the density along the band
    // characteristic, symmetrized (even) and commutator-rotated (odd).
    Eigen::MatrixXcd c = quadrature_matrix(bands, n);
    Eigen::MatrixXcd alt = Eigen::MatrixXcd::Zero(2 * n, 2 * n);
    for (const Band& b : bands) {
      Eigen::MatrixXcd rp = profile.density(r + tau * b.grad, table, k);
      Eigen::MatrixXcd rm = profile.density(r - tau * b.grad, table, k);
      Eigen::MatrixXcd r_even = 0.5 * (rp + rm);
      Eigen::MatrixXcd r_odd = 0.5 * (rp - rm);
      Eigen::MatrixXcd m_plus = 0.5 * (r_even + c * r_even * c.adjoint());
      Eigen::MatrixXcd m_minus =
          0.5 * iu * (c * r_odd - r_odd * c.adjoint());
      Eigen::MatrixXcd term = m_plus + m_minus;
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          alt.block(i * n, j * n, n, n) +=
              b.proj * term.block(i * n, j * n, n, n) * b.proj;
    }

    double scale = std::max(1.0, out.q[k].norm());
    double mismatch = (alt - out.q[k]).norm();
    if (mismatch > kCrossFormTol * scale) {
      std::ostringstream msg;
      msg << "local_covariance: the two constructions disagree at grid point "
          << k << " (|diff| = " << mismatch
          << "); one of the formulas is transcribed wrong";
      require(false, msg.str());
    }
  }
  return out;
}

double stationarity_check(const LimitCovariance& q, const DispersionTable& table,
                          double t) {
  require(q.lattice.d == table.lattice.d && q.lattice.n == table.lattice.n &&
              q.lattice.N == table.lattice.N,
          "stationarity_check: covariance and table disagree on the lattice");
  PropagatorTable prop = propagator_table(table, t);
  double worst = 0.0;
  for (Index k = 0; k < static_cast<Index>(q.q.size()); ++k) {
    if (q.masked[k]) continue;
    Eigen::MatrixXcd evolved = prop.blocks[k] * q.q[k] * prop.blocks[k].adjoint();
    double dev = (evolved - q.q[k]).norm() / std::max(1.0, q.q[k].norm());
    worst = std::max(worst, dev);
  }
  return worst;
}

double equipartition_residue(const LimitCovariance& q,
                             const DispersionTable& table) {
  const int n = table.lattice.n;
  double worst = 0.0;
  for (Index k = 0; k < static_cast<Index>(q.q.size()); ++k) {
    if (q.masked[k] || table.singular[k]) continue;
    Eigen::MatrixXcd om =
        band_function(table.bands[k], n, [](double w) { return w; });
    Eigen::MatrixXcd om_inv =
        band_function(table.bands[k], n, [](double w) { return 1.0 / w; });
    double res = (om * q.q[k].block(0, 0, n, n) -
                  om_inv * q.q[k].block(n, n, n, n))
                     .norm();
    worst = std::max(worst, res);
  }
  return worst;
}

}  // namespace latdyn
