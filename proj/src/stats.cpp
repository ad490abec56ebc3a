#include "latdyn/stats.hpp"

#include <cmath>
#include <sstream>

#include "latdyn/fft.hpp"

namespace latdyn {

ChunkedMoments::ChunkedMoments(Index dim) : dim_(dim) {
  require(dim >= 1, "moments: dimension must be positive");
  open_ = Eigen::VectorXcd::Zero(dim);
  open_re2_ = Eigen::VectorXd::Zero(dim);
  open_im2_ = Eigen::VectorXd::Zero(dim);
}

void ChunkedMoments::push(const Eigen::VectorXcd& x) {
  require(x.size() == dim_, "moments: statistic dimension changed");
  open_ += x;
  open_re2_ += x.real().cwiseAbs2().matrix();
  open_im2_ += x.imag().cwiseAbs2().matrix();
  ++open_n_;
  ++count_;
  if (open_n_ == kChunk) {
    sums_.push_back(open_);
    re2_.push_back(open_re2_);
    im2_.push_back(open_im2_);
    open_.setZero();
    open_re2_.setZero();
    open_im2_.setZero();
    open_n_ = 0;
  }
}

McMoments ChunkedMoments::finalize() const {
  require(count_ >= 2, "moments: need at least 2 samples");
  std::vector<Eigen::VectorXcd> sums = sums_;
  std::vector<Eigen::VectorXd> re2 = re2_, im2 = im2_;
  if (open_n_ > 0) {
    sums.push_back(open_);
    re2.push_back(open_re2_);
    im2.push_back(open_im2_);
  }
  McMoments m;
  m.count = count_;
  double inv = 1.0 / double(count_);
  m.mean = pairwise_sum(sums) * inv;
  Eigen::VectorXd mre2 = pairwise_sum(re2) * inv;
  Eigen::VectorXd mim2 = pairwise_sum(im2) * inv;
  Eigen::VectorXd var_re = (mre2 - m.mean.real().cwiseAbs2().matrix()).cwiseMax(0.0);
  Eigen::VectorXd var_im = (mim2 - m.mean.imag().cwiseAbs2().matrix()).cwiseMax(0.0);
  double bessel = double(count_) / double(count_ - 1);
  m.se_re = (var_re * bessel * inv).cwiseSqrt();
  m.se_im = (var_im * bessel * inv).cwiseSqrt();
  return m;
}

CovarianceEstimate estimate_covariance(Index nsamples, const SampleSource& src,
                                       const Eigen::VectorXi& x0,
                                       const std::vector<Eigen::VectorXi>& offsets) {
  require(nsamples >= 2, "covariance: need at least 2 samples");
  require(!offsets.empty(), "covariance: need at least one offset");
  PhaseField first = src(0);
  const LatticeSpec lat = first.lattice;
  Grid g(lat);
  require(x0.size() == lat.d, "covariance: base point dimension mismatch");
  int nb = 2 * lat.n;
  Index dim = Index(offsets.size()) * nb * nb;
  ChunkedMoments acc(dim);

  Index base = g.flat(x0.data());
  std::vector<Index> shiftidx(offsets.size());
  for (std::size_t o = 0; o < offsets.size(); ++o) {
    require(offsets[o].size() == lat.d, "covariance: offset dimension mismatch");
    shiftidx[o] = g.shifted(base, offsets[o].data());
  }

  Eigen::VectorXcd stat(dim);
  Eigen::VectorXd za(nb), zb(nb);
  for (Index i = 0; i < nsamples; ++i) {
    PhaseField f = i == 0 ? std::move(first) : src(i);
    require(f.lattice.N == lat.N && f.lattice.d == lat.d && f.lattice.n == lat.n,
            "covariance: sample lattice changed");
    for (int c = 0; c < lat.n; ++c) {
      zb[c] = f.u(base, c);
      zb[lat.n + c] = f.v(base, c);
    }
    Index pos = 0;
    for (std::size_t o = 0; o < offsets.size(); ++o) {
      Index xa = shiftidx[o];
      for (int c = 0; c < lat.n; ++c) {
        za[c] = f.u(xa, c);
        za[lat.n + c] = f.v(xa, c);
      }
      for (int rr = 0; rr < nb; ++rr)
        for (int cc = 0; cc < nb; ++cc) stat[pos++] = za[rr] * zb[cc];
    }
    acc.push(stat);
  }

  McMoments m = acc.finalize();
  CovarianceEstimate est;
  est.lattice = lat;
  est.base = x0;
  est.offsets = offsets;
  est.count = nsamples;
  est.mean.resize(offsets.size());
  est.se.resize(offsets.size());
  for (std::size_t o = 0; o < offsets.size(); ++o) {
    est.mean[o].resize(nb, nb);
    est.se[o].resize(nb, nb);
    for (int rr = 0; rr < nb; ++rr)
      for (int cc = 0; cc < nb; ++cc) {
        Index pos = Index(o) * nb * nb + rr * nb + cc;
        est.mean[o](rr, cc) = m.mean[pos].real();
        est.se[o](rr, cc) = m.se_re[pos];
      }
  }
  return est;
}

Eigen::ArrayXXcd a_field(const PhaseField& y, const DispersionTable& table,
                         bool mask_singular) {
  require(y.lattice.N == table.lattice.N && y.lattice.d == table.lattice.d &&
              y.lattice.n == table.lattice.n,
          "a_field: lattice mismatch");
  Grid g(y.lattice);
  int n = y.lattice.n;
  Fft fft(y.lattice.d, y.lattice.N);

  Eigen::MatrixXcd uhat(g.size(), n), vhat(g.size(), n);
  Eigen::VectorXcd col(g.size());
  for (int c = 0; c < n; ++c) {
    fft.to_dual(y.u.col(c), col);
    uhat.col(c) = col;
    fft.to_dual(y.v.col(c), col);
    vhat.col(c) = col;
  }

  std::vector<Index> bad;
  Eigen::MatrixXcd ahat(g.size(), n);
  Eigen::VectorXcd uv(n), vv(n);
  const Complex im(0.0, 1.0);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (Index k = 0; k < g.size(); ++k) {
    if (table.singular[k]) {
      if (!mask_singular && bad.size() < 8) bad.push_back(k);
      ahat.row(k).setZero();
      continue;
    }
    Eigen::MatrixXcd sq = band_function(table.bands[k], n, [](double w) { return std::sqrt(w); });
    Eigen::MatrixXcd isq =
        band_function(table.bands[k], n, [](double w) { return 1.0 / std::sqrt(w); });
    uv = uhat.row(k).transpose();
    vv = vhat.row(k).transpose();
    ahat.row(k) = (inv_sqrt2 * (sq * uv + im * (isq * vv))).transpose();
  }
  if (!mask_singular && !bad.empty()) {
    std::ostringstream os;
    os << "a_field: omega vanishes at dual grid points {";
    for (std::size_t i = 0; i < bad.size(); ++i) os << (i ? ", " : "") << bad[i];
    os << "}; enable the singular-mode mask or use a massive model";
    throw std::runtime_error(os.str());
  }

  Eigen::ArrayXXcd a(g.size(), n);
  Eigen::VectorXcd site(g.size());
  for (int c = 0; c < n; ++c) {
    col = ahat.col(c);
    fft.to_site(col.data(), site.data());
    a.col(c) = site.array();
  }
  return a;
}

double taper_weight(const Eigen::VectorXi& y, int y_max, Taper taper) {
  if (taper == Taper::boxcar) return 1.0;
  double w = 1.0;
  for (Eigen::Index a = 0; a < y.size(); ++a)
    w *= 1.0 - double(std::abs(y[a])) / double(y_max + 2);
  return w;
}

namespace {

// all even offsets with |y|_inf <= y_max
std::vector<Eigen::VectorXi> even_offsets(int d, int y_max) {
  std::vector<Eigen::VectorXi> out;
  int per_axis = y_max / 2 * 2;  // largest even <= y_max
  Eigen::VectorXi y = Eigen::VectorXi::Constant(d, -per_axis);
  while (true) {
    out.push_back(y);
    int a = d - 1;
    while (a >= 0) {
      y[a] += 2;
      if (y[a] <= per_axis) break;
      y[a] = -per_axis;
      --a;
    }
    if (a < 0) break;
  }
  return out;
}

// e^{i theta_k . y} for every grid point
Eigen::VectorXcd phase_column(const Grid& g, const Eigen::VectorXi& y) {
  Eigen::VectorXcd ph(g.size());
  for (Index k = 0; k < g.size(); ++k) {
    double arg = g.theta(k).dot(y.cast<double>());
    ph[k] = Complex(std::cos(arg), std::sin(arg));
  }
  return ph;
}

}  // namespace

WignerEstimate wigner_estimate(Index nsamples, const SampleSource& src,
                               const DispersionTable& table, double tau, double eps,
                               const Eigen::VectorXd& r, int y_max, Taper taper) {
  const LatticeSpec lat = table.lattice;
  Grid g(lat);
  int n = lat.n;
  require(nsamples >= 2, "wigner: need at least 2 samples");
  require(eps > 0, "wigner: eps must be positive");
  require(r.size() == lat.d, "wigner: r dimension mismatch");
  require(y_max >= 2 && y_max < lat.N / 2, "wigner: window exceeds torus");

  Eigen::VectorXi x0(lat.d);
  for (int a = 0; a < lat.d; ++a) x0[a] = int(std::floor(r[a] / eps));
  Index base = g.flat(x0.data());

  std::vector<Eigen::VectorXi> ys = even_offsets(lat.d, y_max);
  std::vector<double> tw(ys.size());
  std::vector<Eigen::VectorXcd> phase(ys.size());
  std::vector<Index> plus(ys.size()), minus(ys.size());
  for (std::size_t o = 0; o < ys.size(); ++o) {
    tw[o] = taper_weight(ys[o], y_max, taper);
    phase[o] = phase_column(g, ys[o]);
    Eigen::VectorXi half = ys[o] / 2;
    plus[o] = g.shifted(base, half.data());
    Eigen::VectorXi mhalf = -half;
    minus[o] = g.shifted(base, mhalf.data());
  }

  Index dim = g.size() * n * n;
  ChunkedMoments acc(dim);
  Eigen::VectorXcd stat(dim);
  std::vector<Eigen::MatrixXcd> eta(ys.size(), Eigen::MatrixXcd(n, n));
  for (Index i = 0; i < nsamples; ++i) {
    PhaseField f = src(i);
    Eigen::ArrayXXcd a = a_field(f, table, true);
    for (std::size_t o = 0; o < ys.size(); ++o) {
      for (int ii = 0; ii < n; ++ii)
        for (int jj = 0; jj < n; ++jj)
          eta[o](ii, jj) = std::conj(a(plus[o], ii)) * a(minus[o], jj);
      eta[o] *= tw[o];
    }
    stat.setZero();
    for (std::size_t o = 0; o < ys.size(); ++o) {
      const Eigen::VectorXcd& ph = phase[o];
      for (Index k = 0; k < g.size(); ++k) {
        Complex p = ph[k];
        Index pos = k * n * n;
        for (int ii = 0; ii < n; ++ii)
          for (int jj = 0; jj < n; ++jj) stat[pos + ii * n + jj] += p * eta[o](ii, jj);
      }
    }
    acc.push(stat);
  }

  McMoments m = acc.finalize();
  WignerEstimate est;
  est.lattice = lat;
  est.tau = tau;
  est.eps = eps;
  est.r = r;
  est.base = x0;
  est.y_max = y_max;
  est.taper = taper;
  est.count = nsamples;
  est.w.resize(g.size());
  est.se_re.resize(g.size());
  est.se_im.resize(g.size());
  for (Index k = 0; k < g.size(); ++k) {
    est.w[k].resize(n, n);
    est.se_re[k].resize(n, n);
    est.se_im[k].resize(n, n);
    for (int ii = 0; ii < n; ++ii)
      for (int jj = 0; jj < n; ++jj) {
        Index pos = k * n * n + ii * n + jj;
        est.w[k](ii, jj) = m.mean[pos];
        est.se_re[k](ii, jj) = m.se_re[pos];
        est.se_im[k](ii, jj) = m.se_im[pos];
      }
  }
  return est;
}

std::vector<Eigen::MatrixXcd> windowed_wigner_theory(
    const std::vector<Eigen::MatrixXcd>& w_theory, const DispersionTable& table, int y_max,
    Taper taper) {
  const LatticeSpec lat = table.lattice;
  Grid g(lat);
  int n = lat.n;
  require(Index(w_theory.size()) == g.size(), "windowed theory: grid size mismatch");
  require(y_max >= 2 && y_max < lat.N / 2, "windowed theory: window exceeds torus");

  std::vector<Eigen::VectorXi> ys = even_offsets(lat.d, y_max);
  std::vector<Eigen::MatrixXcd> out(g.size(), Eigen::MatrixXcd::Zero(n, n));
  double invN = 1.0 / double(g.size());
  for (const auto& y : ys) {
    Eigen::VectorXcd ph = phase_column(g, y);
    // correlation at offset y: rho_y = N^-d sum_k conj(phase) W(theta_k)
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(n, n);
    for (Index k = 0; k < g.size(); ++k) rho += std::conj(ph[k]) * w_theory[k];
    rho *= invN * taper_weight(y, y_max, taper);
    for (Index k = 0; k < g.size(); ++k) out[k] += ph[k] * rho;
  }
  return out;
}

ComplexPairEstimate aa_covariance(Index nsamples, const SampleSource& src,
                                  const DispersionTable& table, const Eigen::VectorXi& x0,
                                  const std::vector<Eigen::VectorXi>& offsets,
                                  bool mask_singular) {
  require(nsamples >= 2, "aa: need at least 2 samples");
  require(!offsets.empty(), "aa: need at least one offset");
  const LatticeSpec lat = table.lattice;
  Grid g(lat);
  int n = lat.n;
  Index base = g.flat(x0.data());
  std::vector<Index> shiftidx(offsets.size());
  for (std::size_t o = 0; o < offsets.size(); ++o)
    shiftidx[o] = g.shifted(base, offsets[o].data());

  Index dim = Index(offsets.size()) * n * n;
  ChunkedMoments acc(dim);
  Eigen::VectorXcd stat(dim);
  for (Index i = 0; i < nsamples; ++i) {
    PhaseField f = src(i);
    Eigen::ArrayXXcd a = a_field(f, table, mask_singular);
    Index pos = 0;
    for (std::size_t o = 0; o < offsets.size(); ++o)
      for (int ii = 0; ii < n; ++ii)
        for (int jj = 0; jj < n; ++jj) stat[pos++] = a(shiftidx[o], ii) * a(base, jj);
    acc.push(stat);
  }

  McMoments m = acc.finalize();
  ComplexPairEstimate est;
  est.base = x0;
  est.offsets = offsets;
  est.count = nsamples;
  est.mean.resize(offsets.size());
  est.se_re.resize(offsets.size());
  est.se_im.resize(offsets.size());
  for (std::size_t o = 0; o < offsets.size(); ++o) {
    est.mean[o].resize(n, n);
    est.se_re[o].resize(n, n);
    est.se_im[o].resize(n, n);
    for (int ii = 0; ii < n; ++ii)
      for (int jj = 0; jj < n; ++jj) {
        Index pos = Index(o) * n * n + ii * n + jj;
        est.mean[o](ii, jj) = m.mean[pos];
        est.se_re[o](ii, jj) = m.se_re[pos];
        est.se_im[o](ii, jj) = m.se_im[pos];
      }
  }
  return est;
}

std::vector<KurtosisResult> fourth_cumulant_test(Index nsamples, const SampleSource& src,
                                                 const std::vector<PairProbe>& probes,
                                                 std::uint64_t bootstrap_seed,
                                                 int bootstrap_rounds) {
  require(nsamples >= 1000, "kurtosis: need at least 1000 samples");
  require(!probes.empty(), "kurtosis: need at least one probe");
  require(bootstrap_rounds >= 16, "kurtosis: need at least 16 bootstrap rounds");

  std::vector<std::vector<double>> xi(probes.size());
  for (auto& v : xi) v.reserve(nsamples);
  for (Index i = 0; i < nsamples; ++i) {
    PhaseField f = src(i);
    for (std::size_t p = 0; p < probes.size(); ++p) xi[p].push_back(probe_apply(probes[p], f));
  }

  std::vector<KurtosisResult> out(probes.size());
  std::vector<double> pw2(nsamples), pw4(nsamples);
  for (std::size_t p = 0; p < probes.size(); ++p) {
    for (Index i = 0; i < nsamples; ++i) {
      double x2 = xi[p][i] * xi[p][i];
      pw2[i] = x2;
      pw4[i] = x2 * x2;
    }
    double m2 = pairwise_sum(pw2) / double(nsamples);
    double m4 = pairwise_sum(pw4) / double(nsamples);
    require(m2 > 1e-300, "kurtosis: degenerate probe (zero variance)");
    out[p].excess = m4 / (3.0 * m2 * m2) - 1.0;
    out[p].variance = m2;
    out[p].count = nsamples;

    // seeded bootstrap over sample indices
    std::vector<double> reps(bootstrap_rounds);
    for (int b = 0; b < bootstrap_rounds; ++b) {
      Rng rng(bootstrap_seed, std::uint64_t(b), std::uint64_t(p) + 1);
      double s2 = 0.0, s4 = 0.0;
      for (Index i = 0; i < nsamples; ++i) {
        Index j = Index(rng.uniform() * double(nsamples));
        if (j >= nsamples) j = nsamples - 1;
        double x2 = xi[p][j] * xi[p][j];
        s2 += x2;
        s4 += x2 * x2;
      }
      s2 /= double(nsamples);
      s4 /= double(nsamples);
      reps[b] = s4 / (3.0 * s2 * s2) - 1.0;
    }
    double rmean = pairwise_sum(reps) / double(bootstrap_rounds);
    double rvar = 0.0;
    for (double v : reps) rvar += (v - rmean) * (v - rmean);
    rvar /= double(bootstrap_rounds - 1);
    out[p].se = std::sqrt(std::max(rvar, 1e-300));
  }
  return out;
}

CharFuncResult characteristic_functional(Index nsamples, const SampleSource& src,
                                         const PairProbe& probe, double theory_Q) {
  require(nsamples >= 2, "characteristic functional: need at least 2 samples");
  ChunkedMoments acc(1);
  Eigen::VectorXcd stat(1);
  for (Index i = 0; i < nsamples; ++i) {
    PhaseField f = src(i);
    double xi = probe_apply(probe, f);
    stat[0] = Complex(std::cos(xi), std::sin(xi));
    acc.push(stat);
  }
  McMoments m = acc.finalize();
  CharFuncResult r;
  r.empirical = m.mean[0];
  r.se = std::hypot(m.se_re[0], m.se_im[0]);
  r.theory = std::exp(-0.5 * theory_Q);
  r.difference = std::abs(r.empirical - Complex(r.theory, 0.0));
  r.count = nsamples;
  return r;
}

BoundCheck uniform_bound_check(const std::vector<std::pair<double, CovarianceEstimate>>& pairs) {
  require(pairs.size() >= 3, "bound check: need at least 3 time points");
  BoundCheck bc;
  for (const auto& [t, est] : pairs) {
    double best = 0.0, best_se = 0.0;
    for (std::size_t o = 0; o < est.mean.size(); ++o) {
      for (Eigen::Index rr = 0; rr < est.mean[o].rows(); ++rr)
        for (Eigen::Index cc = 0; cc < est.mean[o].cols(); ++cc) {
          double v = std::abs(est.mean[o](rr, cc));
          if (v > best) {
            best = v;
            best_se = est.se[o](rr, cc);
          }
        }
    }
    bc.ts.push_back(t);
    bc.max_norm.push_back(best);
    bc.max_se.push_back(best_se);
  }
  // weighted least squares for the time trend of the max norm
  double sw = 0, swt = 0, swy = 0, swtt = 0, swty = 0;
  for (std::size_t i = 0; i < bc.ts.size(); ++i) {
    double sigma = std::max(bc.max_se[i], 1e-12);
    double w = 1.0 / (sigma * sigma);
    sw += w;
    swt += w * bc.ts[i];
    swy += w * bc.max_norm[i];
    swtt += w * bc.ts[i] * bc.ts[i];
    swty += w * bc.ts[i] * bc.max_norm[i];
  }
  double denom = sw * swtt - swt * swt;
  require(denom > 0, "bound check: degenerate time grid");
  bc.slope = (sw * swty - swt * swy) / denom;
  bc.slope_se = std::sqrt(sw / denom);
  bc.ok = bc.slope <= 3.0 * bc.slope_se;
  return bc;
}

EquipartitionCheck equipartition_check(Index nsamples, const SampleSource& src,
                                       const ForceField& ff, const Eigen::VectorXi& x0) {
  require(nsamples >= 2, "equipartition: need at least 2 samples");
  Grid g(ff.lattice);
  Index base = g.flat(x0.data());
  ChunkedMoments acc(3);
  Eigen::VectorXcd stat(3);
  Eigen::VectorXd ub(ff.lattice.n), conv(ff.lattice.n);
  for (Index i = 0; i < nsamples; ++i) {
    PhaseField f = src(i);
    conv.setZero();
    for (const auto& [z, m] : ff.terms) {
      Eigen::VectorXi mz = -z;
      Index xs = g.shifted(base, mz.data());
      conv += m * f.u.row(xs).matrix().transpose();
    }
    ub = f.u.row(base).matrix().transpose();
    double pot = ub.dot(conv);
    double kin = f.v.row(base).matrix().squaredNorm();
    stat[0] = pot;
    stat[1] = kin;
    stat[2] = pot - kin;
    acc.push(stat);
  }
  McMoments m = acc.finalize();
  EquipartitionCheck ec;
  ec.potential = m.mean[0].real();
  ec.kinetic = m.mean[1].real();
  ec.diff = m.mean[2].real();
  ec.se = m.se_re[2];
  ec.count = nsamples;
  return ec;
}

}  // namespace latdyn
