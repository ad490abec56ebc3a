#include "latdyn/spectrum.hpp"

#include <cmath>
#include <limits>

namespace latdyn {

SpectrumReport validate_spectrum(const HomogeneousSpectrum& s) {
  Grid g(s.lattice);
  int n = s.lattice.n;
  SpectrumReport r;
  r.min_eigenvalue = std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es;
  double energy = 0.0;
  for (Index k = 0; k < g.size(); ++k) {
    require(s.q[k].rows() == 2 * n && s.q[k].cols() == 2 * n, "spectrum: block size mismatch");
    double herm = (s.q[k] - s.q[k].adjoint()).cwiseAbs().maxCoeff();
    r.reality_residue = std::max(r.reality_residue, herm);
    es.compute(s.q[k], Eigen::EigenvaluesOnly);
    r.min_eigenvalue = std::min(r.min_eigenvalue, es.eigenvalues()[0]);
    Index kc = g.conj_index(k);
    double pair = (s.q[kc] - s.q[k].conjugate()).cwiseAbs().maxCoeff();
    r.reality_residue = std::max(r.reality_residue, pair);
    energy += s.q[k].topLeftCorner(n, n).real().trace() +
              s.q[k].bottomRightCorner(n, n).real().trace();
  }
  r.energy_density = energy / double(g.size());
  r.ok = r.min_eigenvalue >= -1e-10 && r.reality_residue <= 1e-12 &&
         std::isfinite(r.energy_density);
  return r;
}

namespace {

HomogeneousSpectrum diagonal_spectrum(const DispersionTable& table,
                                      const std::function<double(double)>& f00,
                                      const std::function<double(double)>& f11,
                                      const std::function<double(Index)>& weight00) {
  Grid g(table.lattice);
  int n = table.lattice.n;
  HomogeneousSpectrum s;
  s.lattice = table.lattice;
  s.q.resize(g.size());
  for (Index k = 0; k < g.size(); ++k) {
    require(!table.singular[k],
            "spectrum: dispersion has a singular mode (omega ~ 0); use a massive model");
    Eigen::MatrixXcd q00 = weight00(k) * band_function(table.bands[k], n, f00);
    Eigen::MatrixXcd q11 = band_function(table.bands[k], n, f11);
    Eigen::MatrixXcd q = Eigen::MatrixXcd::Zero(2 * n, 2 * n);
    q.topLeftCorner(n, n) = q00;
    q.bottomRightCorner(n, n) = q11;
    s.q[k] = q;
  }
  return s;
}

}  // namespace

HomogeneousSpectrum gibbs_spectrum(const DispersionTable& table, double T) {
  require(T > 0, "gibbs_spectrum: T must be positive");
  return diagonal_spectrum(
      table, [T](double w) { return T / (w * w); }, [T](double) { return T; },
      [](Index) { return 1.0; });
}

HomogeneousSpectrum flat_occupation_spectrum(const DispersionTable& table, double T) {
  require(T > 0, "flat_occupation_spectrum: T must be positive");
  return diagonal_spectrum(
      table, [T](double w) { return T / w; }, [T](double w) { return T * w; },
      [](Index) { return 1.0; });
}

HomogeneousSpectrum nonequilibrium_spectrum(const DispersionTable& table, double T, double eta) {
  require(T > 0 && std::abs(eta) < 1.0, "nonequilibrium_spectrum: need T > 0, |eta| < 1");
  Grid g(table.lattice);
  return diagonal_spectrum(
      table, [T](double w) { return T / (w * w); }, [T](double) { return T; },
      [&, eta](Index k) { return 1.0 + eta * std::cos(g.theta(k)[0]); });
}

Eigen::MatrixXcd hermitian_sqrt(const Eigen::MatrixXcd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
  require(es.info() == Eigen::Success, "hermitian_sqrt: eigensolver failed");
  Eigen::VectorXd lam = es.eigenvalues();
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    require(lam[i] >= -1e-10, "hermitian_sqrt: matrix is not PSD");
    lam[i] = std::sqrt(std::max(0.0, lam[i]));
  }
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace latdyn
