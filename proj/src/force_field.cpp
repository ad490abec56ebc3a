#include "latdyn/force_field.hpp"

#include <nlohmann/json.hpp>

namespace latdyn {

ForceField nn_force_field(const LatticeSpec& lat, const Eigen::VectorXd& gamma,
                          const Eigen::VectorXd& mass) {
  validate(lat);
  require(gamma.size() == lat.n && mass.size() == lat.n,
          "nn_force_field: gamma and mass must have n entries");
  require((gamma.array() > 0).all(), "nn_force_field: gamma must be positive");
  require((mass.array() >= 0).all(), "nn_force_field: mass must be nonnegative");

  ForceField ff;
  ff.lattice = lat;
  Eigen::VectorXd diag0 = 2.0 * lat.d * gamma + mass.cwiseProduct(mass);
  ff.terms.emplace_back(Eigen::VectorXi::Zero(lat.d), Eigen::MatrixXd(diag0.asDiagonal()));
  for (int a = 0; a < lat.d; ++a) {
    for (int s : {+1, -1}) {
      Eigen::VectorXi z = Eigen::VectorXi::Zero(lat.d);
      z[a] = s;
      ff.terms.emplace_back(z, Eigen::MatrixXd((-gamma).asDiagonal()));
    }
  }
  return ff;
}

bool has_even_symmetry(const ForceField& ff) {
  for (const auto& [z, m] : ff.terms) {
    const Eigen::MatrixXd* mirror = ff.at(-z);
    if (!mirror || *mirror != m.transpose()) return false;
  }
  return true;
}

Eigen::MatrixXcd fourier_symbol(const ForceField& ff, const Eigen::VectorXd& theta) {
  require(theta.size() == ff.lattice.d, "fourier_symbol: theta dimension mismatch");
  int n = ff.lattice.n;
  Eigen::MatrixXcd sym = Eigen::MatrixXcd::Zero(n, n);
  for (const auto& [z, m] : ff.terms) {
    double phase = theta.dot(z.cast<double>());
    sym += Complex(std::cos(phase), std::sin(phase)) * m;
  }
  double scale = std::max(1.0, sym.cwiseAbs().maxCoeff());
  double residue = (sym - sym.adjoint()).cwiseAbs().maxCoeff();
  require(residue <= 1e-12 * scale,
          "fourier_symbol: symbol not Hermitian (coupling violates V(-z) = V(z)^T)");
  return 0.5 * (sym + Eigen::MatrixXcd(sym.adjoint()));
}

std::string force_field_to_json(const ForceField& ff) {
  nlohmann::json j;
  j["d"] = ff.lattice.d;
  j["n"] = ff.lattice.n;
  j["N"] = ff.lattice.N;
  j["entries"] = nlohmann::json::array();
  for (const auto& [z, m] : ff.terms) {
    nlohmann::json e;
    e["offset"] = std::vector<int>(z.data(), z.data() + z.size());
    std::vector<std::vector<double>> rows(m.rows());
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      rows[r] = std::vector<double>(m.row(r).begin(), m.row(r).end());
    e["matrix"] = rows;
    j["entries"].push_back(e);
  }
  return j.dump(2);
}

ForceField force_field_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  ForceField ff;
  ff.lattice.d = j.at("d").get<int>();
  ff.lattice.n = j.at("n").get<int>();
  ff.lattice.N = j.at("N").get<int>();
  validate(ff.lattice);
  for (const auto& e : j.at("entries")) {
    auto off = e.at("offset").get<std::vector<int>>();
    require(int(off.size()) == ff.lattice.d, "force field json: offset dimension mismatch");
    Eigen::VectorXi z = Eigen::Map<Eigen::VectorXi>(off.data(), off.size());
    auto rows = e.at("matrix").get<std::vector<std::vector<double>>>();
    require(int(rows.size()) == ff.lattice.n, "force field json: matrix row count mismatch");
    Eigen::MatrixXd m(ff.lattice.n, ff.lattice.n);
    for (int r = 0; r < ff.lattice.n; ++r) {
      require(int(rows[r].size()) == ff.lattice.n, "force field json: matrix column count mismatch");
      for (int c = 0; c < ff.lattice.n; ++c) m(r, c) = rows[r][c];
    }
    require(ff.at(z) == nullptr, "force field json: duplicate offset");
    ff.terms.emplace_back(z, m);
  }
  require(has_even_symmetry(ff), "force field json: V(-z) != V(z)^T");
  return ff;
}

}  // namespace latdyn
