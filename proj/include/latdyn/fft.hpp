#pragma once

#include "latdyn/lattice.hpp"

namespace latdyn {

// Discrete transforms on the torus, convention
//   to_dual:  f_hat(theta_k) = sum_x f(x) exp(+i x . theta_k)      (unnormalized)
//   to_site:  f(x) = N^-d sum_k f_hat(theta_k) exp(-i x . theta_k)
// matching the continuum convention q_hat(theta) = sum_z q(z) e^{i z theta}.
// Backed by FFTW complex rank-d plans, cached per (d, N); execution is
// thread-safe, planning is serialized internally.
class Fft {
 public:
  Fft(int d, int N);

  Index size() const { return npts_; }

  // in and out may alias
  void to_dual(const Complex* in, Complex* out) const;
  void to_site(const Complex* in, Complex* out) const;

  // real column helpers
  void to_dual(const Eigen::Ref<const Eigen::ArrayXd>& in, Eigen::VectorXcd& out) const;

  // inverse transform expected to land on a real field; throws if the
  // imaginary residue exceeds tol * max|result|
  void to_site_real(const Eigen::VectorXcd& in, Eigen::Ref<Eigen::ArrayXd> out,
                    double tol = 1e-9) const;

 private:
  int d_ = 0, N_ = 0;
  Index npts_ = 0;
  void* plan_fwd_ = nullptr;  // exp(-i...) direction
  void* plan_bwd_ = nullptr;  // exp(+i...) direction
};

}  // namespace latdyn
