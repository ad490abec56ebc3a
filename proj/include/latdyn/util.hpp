#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace latdyn {

using Real = double;
using Complex = std::complex<double>;
using Index = std::int64_t;

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::runtime_error(msg);
}

// splitmix64 finisher; scrambles the key derivation so that nearby
// counters give uncorrelated streams.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Per-sample generator: sample i under master seed s draws from a stream
// keyed by (mix64(s), i). The seed is hashed before the counter is folded
// in: a plain s xor i key would let two seeds differing in a few low bits
// relabel each other's counter streams instead of decorrelating them, and
// then every statistic averaged over i would be seed-independent. An
// optional subkey separates independent blocks within one sample (e.g.
// cubes of the slow-variation sampler).
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t counter, std::uint64_t subkey = 0) {
    state_ = mix64(mix64(seed) ^ counter);
    inc_ = (mix64(state_ ^ mix64(subkey)) << 1u) | 1u;
    has_cached_ = false;
    next();  // discard first output (correlated with the key for trivial states)
  }

  std::uint64_t next() {
    // pcg64-style xorshift-multiply step on a 64-bit state; period 2^64.
    state_ = state_ * 6364136223846793005ULL + inc_;
    std::uint64_t x = state_;
    x ^= x >> 33;
    x *= 0xff51afd7ed558ccdULL;
    x ^= x >> 33;
    return x;
  }

  // uniform on [0,1)
  double uniform() { return double(next() >> 11) * 0x1.0p-53; }

  // unit-variance symmetric uniform, i.e. sqrt(3)*(2u-1)
  double uniform_sym() { return 1.7320508075688772 * (2.0 * uniform() - 1.0); }

  // standard normal via Box-Muller (deterministic draw count)
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    double u2 = uniform();
    double rad = std::sqrt(-2.0 * std::log(u1));
    double ang = 6.283185307179586476925287 * u2;
    cached_ = rad * std::sin(ang);
    has_cached_ = true;
    return rad * std::cos(ang);
  }

 private:
  std::uint64_t state_ = 0, inc_ = 0;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

// Pairwise (tree) summation over a span. The reduction tree depends only on
// the element count, so results are bit-identical for any thread count that
// produced the inputs.
template <typename T>
T pairwise_sum(const T* data, Index count) {
  if (count == 0) throw std::runtime_error("pairwise_sum: empty input");
  if (count == 1) return data[0];
  if (count <= 8) {
    T acc = data[0];
    for (Index i = 1; i < count; ++i) acc += data[i];
    return acc;
  }
  Index half = count / 2;
  T left = pairwise_sum(data, half);
  T right = pairwise_sum(data + half, count - half);
  left += right;
  return left;
}

template <typename T>
T pairwise_sum(const std::vector<T>& v) {
  return pairwise_sum(v.data(), static_cast<Index>(v.size()));
}

// Runs fn(i) for i in [0,n) on `threads` workers over fixed contiguous
// blocks. Work must be independent per index.
inline void parallel_for(Index n, int threads, const std::function<void(Index)>& fn) {
  if (threads <= 1 || n < 2) {
    for (Index i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  Index block = (n + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    Index lo = t * block, hi = std::min(n, lo + block);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (Index i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

// Monte Carlo mean/variance driver. worker(i, out) fills a fixed-length
// vector of statistics for sample i; results are accumulated in chunks of 64
// consecutive samples and combined with a pairwise tree, so the output is
// independent of the thread count. Returns per-entry mean, and the standard
// error of the mean computed from per-sample scatter (real and imaginary
// parts separately).
struct McMoments {
  Eigen::VectorXcd mean;
  Eigen::VectorXd se_re;   // standard error of Re(mean)
  Eigen::VectorXd se_im;   // standard error of Im(mean)
  Index count = 0;
};

inline McMoments mc_accumulate(Index nsamples, Index dim, int threads,
                               const std::function<void(Index, Eigen::VectorXcd&)>& worker) {
  require(nsamples >= 2, "mc_accumulate: need at least 2 samples");
  constexpr Index kChunk = 64;
  Index nchunks = (nsamples + kChunk - 1) / kChunk;
  std::vector<Eigen::VectorXcd> sum(nchunks);
  std::vector<Eigen::VectorXd> sum_re2(nchunks), sum_im2(nchunks);

  parallel_for(nchunks, threads, [&](Index c) {
    Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(dim);
    Eigen::VectorXd acc_re2 = Eigen::VectorXd::Zero(dim);
    Eigen::VectorXd acc_im2 = Eigen::VectorXd::Zero(dim);
    Eigen::VectorXcd val(dim);
    Index lo = c * kChunk, hi = std::min(nsamples, lo + kChunk);
    for (Index i = lo; i < hi; ++i) {
      val.setZero();
      worker(i, val);
      acc += val;
      acc_re2 += val.real().cwiseAbs2().matrix();
      acc_im2 += val.imag().cwiseAbs2().matrix();
    }
    sum[c] = acc;
    sum_re2[c] = acc_re2;
    sum_im2[c] = acc_im2;
  });

  McMoments m;
  m.count = nsamples;
  m.mean = pairwise_sum(sum) / double(nsamples);
  Eigen::VectorXd re2 = pairwise_sum(sum_re2) / double(nsamples);
  Eigen::VectorXd im2 = pairwise_sum(sum_im2) / double(nsamples);
  Eigen::VectorXd var_re = (re2 - m.mean.real().cwiseAbs2().matrix()).cwiseMax(0.0);
  Eigen::VectorXd var_im = (im2 - m.mean.imag().cwiseAbs2().matrix()).cwiseMax(0.0);
  double bessel = double(nsamples) / double(nsamples - 1);
  m.se_re = (var_re * bessel / double(nsamples)).cwiseSqrt();
  m.se_im = (var_im * bessel / double(nsamples)).cwiseSqrt();
  return m;
}

}  // namespace latdyn
