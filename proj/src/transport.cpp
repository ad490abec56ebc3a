#include "latdyn/transport.hpp"

#include <cmath>

namespace latdyn {

namespace {

constexpr double kProjectorTol = 1e-10;
constexpr double kTraceTol = 1e-8;

// row-major cell odometer (axis 0 slowest), same layout as Grid
void cell_coords(Index flat, int d, int m, int* out) {
  for (int a = d - 1; a >= 0; --a) {
    out[a] = static_cast<int>(flat % m);
    flat /= m;
  }
}

Index cell_flat(const int* coords, int d, int m) {
  Index f = 0;
  for (int a = 0; a < d; ++a) f = f * m + coords[a];
  return f;
}

int wrap_cell(int c, int m) {
  int r = c % m;
  return r < 0 ? r + m : r;
}

// Rigid shift of a periodic grid field by `shift` (in r units), multilinear.
// The offset is the same for every cell, so the stencil and weights are
// computed once.
std::vector<Eigen::MatrixXcd> shift_field(const std::vector<Eigen::MatrixXcd>& f,
                                          const Eigen::VectorXd& shift, double h,
                                          int d, int m) {
  // back-trace: value at cell c comes from position c - shift/h (cell units)
  int base_off[4];
  double frac[4];
  for (int a = 0; a < d; ++a) {
    double off = -shift[a] / h;
    double fl = std::floor(off);
    base_off[a] = static_cast<int>(fl);
    frac[a] = off - fl;
  }

  std::vector<Eigen::MatrixXcd> out(f.size());
  int c[4], src[4];
  for (Index cell = 0; cell < static_cast<Index>(f.size()); ++cell) {
    cell_coords(cell, d, m, c);
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(f[0].rows(), f[0].cols());
    for (int corner = 0; corner < (1 << d); ++corner) {
      double w = 1.0;
      for (int a = 0; a < d; ++a) {
        int bit = (corner >> a) & 1;
        w *= bit ? frac[a] : (1.0 - frac[a]);
        src[a] = wrap_cell(c[a] + base_off[a] + bit, m);
      }
      if (w == 0.0) continue;
      acc += w * f[cell_flat(src, d, m)];
    }
    out[cell] = std::move(acc);
  }
  return out;
}

double field_trace(const std::vector<Eigen::MatrixXcd>& f) {
  double t = 0.0;
  for (const Eigen::MatrixXcd& b : f) t += b.real().trace();
  return t;
}

void require_same_shape(const TransportState& a, const TransportState& b,
                        const char* what) {
  require(a.lattice.d == b.lattice.d && a.lattice.n == b.lattice.n &&
              a.cells == b.cells && a.box == b.box &&
              a.theta_indices == b.theta_indices,
          std::string(what) + ": transport states have different shapes");
}

}  // namespace

WignerField initial_wigner_field(const SlowProfile& profile,
                                 const DispersionTable& table, int cells,
                                 const std::vector<Index>& theta_indices) {
  require(cells >= 2, "initial_wigner_field: need at least 2 cells per axis");
  require(!theta_indices.empty(), "initial_wigner_field: empty dual subset");
  const int d = table.lattice.d;
  WignerField w;
  w.lattice = table.lattice;
  w.box = profile.box();
  w.cells = cells;
  w.theta_indices = theta_indices;

  const double h = w.spacing();
  const Index ncells = w.cell_count();
  int c[4];
  w.values.resize(theta_indices.size());
  for (std::size_t s = 0; s < theta_indices.size(); ++s) {
    Index k = theta_indices[s];
    require(!table.singular[k],
            "initial_wigner_field: dual subset contains a singular point");
    w.values[s].resize(ncells);
    for (Index cell = 0; cell < ncells; ++cell) {
      cell_coords(cell, d, w.cells, c);
      Eigen::VectorXd r(d);
      for (int a = 0; a < d; ++a) r[a] = (c[a] + 0.5) * h;
      w.values[s][cell] = initial_wigner(profile, table, r, k);
    }
  }
  return w;
}

TransportState project_wigner(const WignerField& w0, const DispersionTable& table) {
  require(w0.lattice.d == table.lattice.d && w0.lattice.n == table.lattice.n &&
              w0.lattice.N == table.lattice.N,
          "project_wigner: field and table disagree on the lattice");
  TransportState st;
  st.lattice = w0.lattice;
  st.box = w0.box;
  st.cells = w0.cells;
  st.tau = 0.0;
  st.theta_indices = w0.theta_indices;
  st.fields.resize(w0.theta_indices.size());

  for (std::size_t s = 0; s < w0.theta_indices.size(); ++s) {
    Index k = w0.theta_indices[s];
    const std::vector<Band>& bands = table.bands[k];
    st.fields[s].resize(bands.size());
    for (std::size_t bi = 0; bi < bands.size(); ++bi) {
      TransportState::BandField& bf = st.fields[s][bi];
      bf.omega = bands[bi].omega;
      bf.grad = bands[bi].grad;
      bf.proj = bands[bi].proj;
      bf.block.resize(w0.values[s].size());
      for (std::size_t cell = 0; cell < w0.values[s].size(); ++cell) {
        bf.block[cell] = bf.proj * w0.values[s][cell] * bf.proj;
        double scale = std::max(1.0, bf.block[cell].norm());
        require((bf.proj * bf.block[cell] * bf.proj - bf.block[cell]).norm() <=
                    kProjectorTol * scale,
                "project_wigner: projected block is not band-diagonal");
      }
    }
  }
  return st;
}

TransportState transport_evolve(const TransportState& state, double dtau) {
  TransportState out = state;
  out.tau = state.tau + dtau;
  if (dtau == 0.0) return out;

  const int d = state.lattice.d;
  const double h = state.spacing();
  for (std::size_t s = 0; s < state.fields.size(); ++s) {
    for (std::size_t bi = 0; bi < state.fields[s].size(); ++bi) {
      const TransportState::BandField& src = state.fields[s][bi];
      Eigen::VectorXd shift = dtau * src.grad;
      out.fields[s][bi].block = shift_field(src.block, shift, h, d, state.cells);
      double before = field_trace(src.block);
      double after = field_trace(out.fields[s][bi].block);
      require(std::abs(after - before) <= kTraceTol * std::max(1.0, std::abs(before)),
              "transport_evolve: trace integral not conserved");
    }
  }
  return out;
}

TransportState transport_pde_oracle(const TransportState& state, double dtau,
                                    double cfl) {
  require(cfl > 0.0 && cfl <= 0.9,
          "transport_pde_oracle: cfl must lie in (0, 0.9]");
  TransportState out = state;
  out.tau = state.tau + dtau;
  if (dtau == 0.0) return out;

  const int d = state.lattice.d;
  const int m = state.cells;
  const double h = state.spacing();
  int c[4], nb[4];

  for (std::size_t s = 0; s < state.fields.size(); ++s) {
    for (std::size_t bi = 0; bi < state.fields[s].size(); ++bi) {
      const TransportState::BandField& src = state.fields[s][bi];
      // advect with velocity v for time |dtau|; reversing time reverses v
      Eigen::VectorXd v = src.grad;
      double span = std::abs(dtau);
      if (dtau < 0.0) v = -v;

      double speed = v.cwiseAbs().sum();
      int steps = std::max<int>(1, static_cast<int>(std::ceil(speed * span / (cfl * h))));
      double dt = span / steps;

      std::vector<Eigen::MatrixXcd> cur = src.block;
      std::vector<Eigen::MatrixXcd> next(cur.size());
      for (int step = 0; step < steps; ++step) {
        for (Index cell = 0; cell < static_cast<Index>(cur.size()); ++cell) {
          cell_coords(cell, d, m, c);
          Eigen::MatrixXcd flux =
              Eigen::MatrixXcd::Zero(cur[0].rows(), cur[0].cols());
          for (int a = 0; a < d; ++a) {
            double vp = std::max(v[a], 0.0);
            double vn = std::min(v[a], 0.0);
            for (int q = 0; q < d; ++q) nb[q] = c[q];
            nb[a] = wrap_cell(c[a] - 1, m);
            Index left = cell_flat(nb, d, m);
            nb[a] = wrap_cell(c[a] + 1, m);
            Index right = cell_flat(nb, d, m);
            flux += (dt / h) * (vp * (cur[cell] - cur[left]) +
                                vn * (cur[right] - cur[cell]));
          }
          next[cell] = cur[cell] - flux;
        }
        cur.swap(next);
      }
      double before = field_trace(src.block);
      double after = field_trace(cur);
      require(std::abs(after - before) <= kTraceTol * std::max(1.0, std::abs(before)),
              "transport_pde_oracle: trace integral not conserved");
      out.fields[s][bi].block = std::move(cur);
    }
  }
  return out;
}

double transport_l1_distance(const TransportState& a, const TransportState& b) {
  require_same_shape(a, b, "transport_l1_distance");
  double hd = 1.0;
  for (int q = 0; q < a.lattice.d; ++q) hd *= a.spacing();
  double total = 0.0;
  for (std::size_t s = 0; s < a.fields.size(); ++s) {
    require(a.fields[s].size() == b.fields[s].size(),
            "transport_l1_distance: band count mismatch");
    for (std::size_t bi = 0; bi < a.fields[s].size(); ++bi) {
      const auto& fa = a.fields[s][bi].block;
      const auto& fb = b.fields[s][bi].block;
      for (std::size_t cell = 0; cell < fa.size(); ++cell)
        total += (fa[cell] - fb[cell]).norm();
    }
  }
  return hd * total;
}

double transport_total_trace(const TransportState& state) {
  double hd = 1.0;
  for (int q = 0; q < state.lattice.d; ++q) hd *= state.spacing();
  double total = 0.0;
  for (const auto& slot : state.fields)
    for (const auto& bf : slot) total += field_trace(bf.block);
  return hd * total;
}

}  // namespace latdyn
