#include "latdyn/sampling.hpp"

#include <cmath>

#include "latdyn/fft.hpp"

namespace latdyn {

double probe_apply(const PairProbe& probe, const PhaseField& y) {
  Grid g(y.lattice);
  require(probe.sites.size() == probe.wu.size() && probe.sites.size() == probe.wv.size(),
          "probe: sites and weights must align");
  double acc = 0.0;
  for (std::size_t s = 0; s < probe.sites.size(); ++s) {
    require(probe.sites[s].size() == y.lattice.d, "probe: site dimension mismatch");
    require(probe.wu[s].size() == y.lattice.n && probe.wv[s].size() == y.lattice.n,
            "probe: weight dimension mismatch");
    Index k = g.flat(probe.sites[s].data());
    for (int c = 0; c < y.lattice.n; ++c)
      acc += probe.wu[s][c] * y.u(k, c) + probe.wv[s][c] * y.v(k, c);
  }
  return acc;
}

namespace {

void fill_noise(Eigen::ArrayXXd& w, Rng& rng, NoiseKind kind) {
  // row-major walk (site outer, component inner) pins the draw order
  for (Index x = 0; x < w.rows(); ++x)
    for (Index c = 0; c < w.cols(); ++c)
      w(x, c) = kind == NoiseKind::gaussian ? rng.normal() : rng.uniform_sym();
}

// Color white noise by per-point matrices and return the position-space
// field columns: out = to_site(color .* to_dual(w)). All columns real.
void color_field(const Eigen::ArrayXXd& w, const std::vector<Eigen::MatrixXcd>& color,
                 const Fft& fft, int n, Eigen::ArrayXXd& u_out, Eigen::ArrayXXd& v_out) {
  Index npts = w.rows();
  int nb = 2 * n;
  Eigen::MatrixXcd what(npts, nb);
  Eigen::VectorXcd col(npts);
  for (int c = 0; c < nb; ++c) {
    fft.to_dual(w.col(c), col);
    what.col(c) = col;
  }
  Eigen::VectorXcd in(nb), out(nb);
  for (Index k = 0; k < npts; ++k) {
    in = what.row(k).transpose();
    out.noalias() = color[k] * in;
    what.row(k) = out.transpose();
  }
  for (int c = 0; c < nb; ++c) {
    col = what.col(c);
    if (c < n)
      fft.to_site_real(col, u_out.col(c));
    else
      fft.to_site_real(col, v_out.col(c - n));
  }
}

// adjoint of color_field applied to a probe: c(x, alpha) with
// <Y, psi> = sum c(x, alpha) w(x, alpha)
void probe_pullback(const Eigen::ArrayXXd& psi, const std::vector<Eigen::MatrixXcd>& color,
                    const Fft& fft, int n, Eigen::ArrayXXd& coeff) {
  Index npts = psi.rows();
  int nb = 2 * n;
  Eigen::MatrixXcd psihat(npts, nb);
  Eigen::VectorXcd col(npts);
  for (int c = 0; c < nb; ++c) {
    fft.to_dual(psi.col(c), col);
    psihat.col(c) = col;
  }
  Eigen::VectorXcd in(nb), out(nb);
  for (Index k = 0; k < npts; ++k) {
    in = psihat.row(k).transpose();
    out.noalias() = color[k].adjoint() * in;
    psihat.row(k) = out.transpose();
  }
  for (int c = 0; c < nb; ++c) {
    col = psihat.col(c);
    fft.to_site_real(col, coeff.col(c));
  }
}

}  // namespace

SpectrumSampler::SpectrumSampler(const HomogeneousSpectrum& spec, NoiseKind noise)
    : lattice_(spec.lattice), noise_(noise) {
  Grid g(lattice_);
  require(Index(spec.q.size()) == g.size(), "sampler: spectrum size mismatch");
  color_.resize(g.size());
  for (Index k = 0; k < g.size(); ++k) color_[k] = hermitian_sqrt(spec.q[k]);
}

PhaseField SpectrumSampler::draw(std::uint64_t seed, std::uint64_t counter) const {
  Grid g(lattice_);
  Fft fft(lattice_.d, lattice_.N);
  Eigen::ArrayXXd w(g.size(), 2 * lattice_.n);
  Rng rng(seed, counter);
  fill_noise(w, rng, noise_);
  PhaseField f = PhaseField::zero(lattice_);
  color_field(w, color_, fft, lattice_.n, f.u, f.v);
  return f;
}

Eigen::ArrayXXd SpectrumSampler::probe_coefficients(const PairProbe& probe) const {
  Grid g(lattice_);
  Fft fft(lattice_.d, lattice_.N);
  Eigen::ArrayXXd psi = Eigen::ArrayXXd::Zero(g.size(), 2 * lattice_.n);
  for (std::size_t s = 0; s < probe.sites.size(); ++s) {
    Index k = g.flat(probe.sites[s].data());
    for (int c = 0; c < lattice_.n; ++c) {
      psi(k, c) += probe.wu[s][c];
      psi(k, lattice_.n + c) += probe.wv[s][c];
    }
  }
  Eigen::ArrayXXd coeff(g.size(), 2 * lattice_.n);
  probe_pullback(psi, color_, fft, lattice_.n, coeff);
  return coeff;
}

SlowSampler::SlowSampler(const SlowProfile& profile, const ForceField& ff,
                         const SlowFamilyConfig& cfg)
    : lattice_(ff.lattice), cfg_(cfg), block_(cfg.block_side) {
  validate(lattice_);
  require(profile.components() == lattice_.n, "slow sampler: component mismatch");
  require(block_ >= 4 && block_ % 2 == 0, "slow sampler: block side must be even, >= 4");
  require(lattice_.N % block_ == 0, "slow sampler: block side must divide N");
  require(cfg.eps > 0 && cfg.eps < 1, "slow sampler: eps must lie in (0,1)");
  double macro = cfg.eps * lattice_.N;
  require(std::abs(macro - profile.box()) <= 1e-9 * profile.box(),
          "slow sampler: profile period must equal eps * N");
  require(2 * ff.radius() < block_, "slow sampler: coupling range exceeds the block");

  cube_lattice_ = LatticeSpec{lattice_.d, lattice_.n, block_};
  ForceField cube_ff{cube_lattice_, ff.terms};
  DispersionTable cube_table = dispersion_table(cube_ff);

  cubes_per_axis_ = lattice_.N / block_;
  ncubes_ = 1;
  for (int a = 0; a < lattice_.d; ++a) ncubes_ *= cubes_per_axis_;

  Grid cg(cube_lattice_);
  color_.resize(ncubes_);
  for (Index cube = 0; cube < ncubes_; ++cube) {
    Eigen::VectorXd r = cube_center(cube);
    color_[cube].resize(cg.size());
    for (Index j = 0; j < cg.size(); ++j)
      color_[cube][j] = hermitian_sqrt(profile.density(r, cube_table, j));
  }
}

Index SlowSampler::cube_origin_flat(Index cube, int* origin) const {
  Index rem = cube;
  for (int a = lattice_.d - 1; a >= 0; --a) {
    origin[a] = int(rem % cubes_per_axis_) * block_;
    rem /= cubes_per_axis_;
  }
  return cube;
}

Eigen::VectorXd SlowSampler::cube_center(Index cube) const {
  int origin[4];
  cube_origin_flat(cube, origin);
  Eigen::VectorXd r(lattice_.d);
  for (int a = 0; a < lattice_.d; ++a)
    r[a] = cfg_.eps * double(origin[a] + block_ / 2);
  return r;
}

PhaseField SlowSampler::draw(std::uint64_t seed, std::uint64_t counter) const {
  Grid g(lattice_);
  Grid cg(cube_lattice_);
  Fft fft(cube_lattice_.d, cube_lattice_.N);
  PhaseField f = PhaseField::zero(lattice_);
  Eigen::ArrayXXd w(cg.size(), 2 * lattice_.n);
  Eigen::ArrayXXd cu(cg.size(), lattice_.n), cv(cg.size(), lattice_.n);
  int origin[4], local[4], site[4];
  for (Index cube = 0; cube < ncubes_; ++cube) {
    // one independent stream per (sample, cube)
    Rng rng(seed, counter, std::uint64_t(cube) + 1);
    fill_noise(w, rng, cfg_.noise);
    color_field(w, color_[cube], fft, lattice_.n, cu, cv);
    cube_origin_flat(cube, origin);
    for (Index x = 0; x < cg.size(); ++x) {
      cg.coords(x, local);
      for (int a = 0; a < lattice_.d; ++a) site[a] = origin[a] + local[a];
      Index gk = g.flat(site);
      for (int c = 0; c < lattice_.n; ++c) {
        f.u(gk, c) = cu(x, c);
        f.v(gk, c) = cv(x, c);
      }
    }
  }
  return f;
}

Eigen::ArrayXXd SlowSampler::probe_coefficients(const PairProbe& probe) const {
  Grid g(lattice_);
  Grid cg(cube_lattice_);
  Fft fft(cube_lattice_.d, cube_lattice_.N);
  // scatter the probe onto the full torus
  Eigen::ArrayXXd psi = Eigen::ArrayXXd::Zero(g.size(), 2 * lattice_.n);
  for (std::size_t s = 0; s < probe.sites.size(); ++s) {
    Index k = g.flat(probe.sites[s].data());
    for (int c = 0; c < lattice_.n; ++c) {
      psi(k, c) += probe.wu[s][c];
      psi(k, lattice_.n + c) += probe.wv[s][c];
    }
  }
  Eigen::ArrayXXd coeff(g.size(), 2 * lattice_.n);
  Eigen::ArrayXXd cpsi(cg.size(), 2 * lattice_.n), ccoeff(cg.size(), 2 * lattice_.n);
  int origin[4], local[4], site[4];
  for (Index cube = 0; cube < ncubes_; ++cube) {
    cube_origin_flat(cube, origin);
    for (Index x = 0; x < cg.size(); ++x) {
      cg.coords(x, local);
      for (int a = 0; a < lattice_.d; ++a) site[a] = origin[a] + local[a];
      Index gk = g.flat(site);
      for (int c = 0; c < 2 * lattice_.n; ++c) cpsi(x, c) = psi(gk, c);
    }
    probe_pullback(cpsi, color_[cube], fft, lattice_.n, ccoeff);
    for (Index x = 0; x < cg.size(); ++x) {
      cg.coords(x, local);
      for (int a = 0; a < lattice_.d; ++a) site[a] = origin[a] + local[a];
      Index gk = g.flat(site);
      for (int c = 0; c < 2 * lattice_.n; ++c) coeff(gk, c) = ccoeff(x, c);
    }
  }
  return coeff;
}

}  // namespace latdyn
