#include "latdyn/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>

namespace latdyn {

namespace {

struct PlanPair {
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
};

// FFTW planning is not thread-safe; plans are created once per (d, N) under a
// lock and executed via fftw_execute_dft, which is.
PlanPair& plans_for(int d, int N) {
  static std::map<std::pair<int, int>, PlanPair> cache;
  static std::mutex mtx;
  std::lock_guard<std::mutex> lock(mtx);
  auto key = std::make_pair(d, N);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;

  Index npts = 1;
  for (int a = 0; a < d; ++a) npts *= N;
  fftw_complex* scratch = fftw_alloc_complex(size_t(npts));
  std::vector<int> dims(d, N);
  PlanPair p;
  unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  p.fwd = fftw_plan_dft(d, dims.data(), scratch, scratch, FFTW_FORWARD, flags);
  p.bwd = fftw_plan_dft(d, dims.data(), scratch, scratch, FFTW_BACKWARD, flags);
  fftw_free(scratch);
  require(p.fwd && p.bwd, "fft: plan creation failed");
  return cache.emplace(key, p).first->second;
}

}  // namespace

Fft::Fft(int d, int N) : d_(d), N_(N) {
  require(d >= 1 && d <= 4 && N >= 2, "fft: bad dimensions");
  npts_ = 1;
  for (int a = 0; a < d; ++a) npts_ *= N;
  PlanPair& p = plans_for(d, N);
  plan_fwd_ = p.fwd;
  plan_bwd_ = p.bwd;
}

void Fft::to_dual(const Complex* in, Complex* out) const {
  // exp(+i x theta) accumulation is FFTW's BACKWARD sign
  fftw_execute_dft(static_cast<fftw_plan>(plan_bwd_),
                   reinterpret_cast<fftw_complex*>(const_cast<Complex*>(in)),
                   reinterpret_cast<fftw_complex*>(out));
}

void Fft::to_site(const Complex* in, Complex* out) const {
  fftw_execute_dft(static_cast<fftw_plan>(plan_fwd_),
                   reinterpret_cast<fftw_complex*>(const_cast<Complex*>(in)),
                   reinterpret_cast<fftw_complex*>(out));
  double scale = 1.0 / double(npts_);
  for (Index i = 0; i < npts_; ++i) out[i] *= scale;
}

void Fft::to_dual(const Eigen::Ref<const Eigen::ArrayXd>& in, Eigen::VectorXcd& out) const {
  require(in.size() == npts_, "fft: size mismatch");
  out.resize(npts_);
  for (Index i = 0; i < npts_; ++i) out[i] = Complex(in[i], 0.0);
  to_dual(out.data(), out.data());
}

void Fft::to_site_real(const Eigen::VectorXcd& in, Eigen::Ref<Eigen::ArrayXd> out,
                       double tol) const {
  require(in.size() == npts_ && out.size() == npts_, "fft: size mismatch");
  Eigen::VectorXcd buf(npts_);
  to_site(in.data(), buf.data());
  double max_re = 0.0, max_im = 0.0;
  for (Index i = 0; i < npts_; ++i) {
    max_re = std::max(max_re, std::abs(buf[i].real()));
    max_im = std::max(max_im, std::abs(buf[i].imag()));
  }
  require(max_im <= tol * std::max(1e-300, max_re),
          "fft: inverse transform has non-real residue beyond tolerance");
  for (Index i = 0; i < npts_; ++i) out[i] = buf[i].real();
}

}  // namespace latdyn
