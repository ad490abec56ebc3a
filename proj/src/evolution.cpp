#include "latdyn/evolution.hpp"

namespace latdyn {

PropagatorTable propagator_table(const DispersionTable& table, double t) {
  Grid g(table.lattice);
  int n = table.lattice.n;
  PropagatorTable prop;
  prop.lattice = table.lattice;
  prop.t = t;
  prop.blocks.resize(g.size());
  for (Index k = 0; k < g.size(); ++k) {
    const auto& bands = table.bands[k];
    Eigen::MatrixXcd c = band_function(bands, n, [&](double w) { return std::cos(w * t); });
    Eigen::MatrixXcd s = band_function(bands, n, [&](double w) { return sinc_omega(w, t); });
    Eigen::MatrixXcd ws =
        band_function(bands, n, [&](double w) { return -w * std::sin(w * t); });
    Eigen::MatrixXcd blk(2 * n, 2 * n);
    blk.topLeftCorner(n, n) = c;
    blk.topRightCorner(n, n) = s;
    blk.bottomLeftCorner(n, n) = ws;
    blk.bottomRightCorner(n, n) = c;
    prop.blocks[k] = blk;
  }
  return prop;
}

void evolve(PhaseField& field, const PropagatorTable& prop) {
  require(field.lattice.d == prop.lattice.d && field.lattice.n == prop.lattice.n &&
              field.lattice.N == prop.lattice.N,
          "evolve: field and propagator lattices differ");
  Grid g(field.lattice);
  int n = field.lattice.n;
  Fft fft(field.lattice.d, field.lattice.N);

  Eigen::MatrixXcd uh(g.size(), n), vh(g.size(), n);
  Eigen::VectorXcd buf;
  for (int c = 0; c < n; ++c) {
    fft.to_dual(field.u.col(c), buf);
    uh.col(c) = buf;
    fft.to_dual(field.v.col(c), buf);
    vh.col(c) = buf;
  }

  Eigen::VectorXcd y(2 * n);
  for (Index k = 0; k < g.size(); ++k) {
    y.head(n) = uh.row(k).transpose();
    y.tail(n) = vh.row(k).transpose();
    y = prop.blocks[k] * y;
    uh.row(k) = y.head(n).transpose();
    vh.row(k) = y.tail(n).transpose();
  }

  for (int c = 0; c < n; ++c) {
    fft.to_site_real(uh.col(c), field.u.col(c));
    fft.to_site_real(vh.col(c), field.v.col(c));
  }
}

double energy(const PhaseField& field, const ForceField& ff) {
  Grid g(field.lattice);
  int n = field.lattice.n;
  double kin = 0.5 * field.v.matrix().squaredNorm();
  // potential: 1/2 sum_x u(x) . (V u)(x), (V u)(x) = sum_z V(z) u(x - z)
  double pot = 0.0;
  std::vector<int> zbuf(field.lattice.d);
  for (const auto& [z, m] : ff.terms) {
    for (int a = 0; a < field.lattice.d; ++a) zbuf[a] = -z[a];
    for (Index x = 0; x < g.size(); ++x) {
      Index xs = g.shifted(x, zbuf.data());
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) pot += field.u(x, i) * m(i, j) * field.u(xs, j);
    }
  }
  return kin + 0.5 * pot;
}

double energy_fourier(const PhaseField& field, const DispersionTable& table) {
  Grid g(field.lattice);
  int n = field.lattice.n;
  Fft fft(field.lattice.d, field.lattice.N);
  Eigen::MatrixXcd uh(g.size(), n), vh(g.size(), n);
  Eigen::VectorXcd buf;
  for (int c = 0; c < n; ++c) {
    fft.to_dual(field.u.col(c), buf);
    uh.col(c) = buf;
    fft.to_dual(field.v.col(c), buf);
    vh.col(c) = buf;
  }
  double acc = 0.0;
  for (Index k = 0; k < g.size(); ++k) {
    Eigen::VectorXcd u = uh.row(k).transpose(), v = vh.row(k).transpose();
    acc += v.squaredNorm() + (u.adjoint() * table.symbol[k] * u).real()(0, 0);
  }
  return 0.5 * acc / double(g.size());
}

}  // namespace latdyn
