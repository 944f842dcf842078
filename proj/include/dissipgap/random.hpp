// Copyright (c) 2026 the dissipgap authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string_view>

#include "dissipgap/kernel.hpp"
#include "dissipgap/types.hpp"

namespace dissipgap {

/// Deterministic random stream. The Gaussian transform is implemented here
/// (Box-Muller over mt19937_64 bits) instead of std::normal_distribution so
/// that identical seeds produce identical draws on every toolchain.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double uniform01() {
    // 53 uniformly distributed bits in [0, 1)
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(angle);
    have_spare_ = true;
    return r * std::cos(angle);
  }

  /// Standard complex Gaussian, E|z|^2 = 1.
  Complex complex_gaussian() {
    const double re = gaussian();
    const double im = gaussian();
    return Complex(re, im) / std::sqrt(2.0);
  }

  std::uint64_t raw() { return eng_(); }

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

/// Derive an independent stream seed from a base seed and a stream name, so
/// adding new checks never perturbs existing draws.
inline std::uint64_t stream_seed(std::uint64_t base, std::string_view name) {
  // FNV-1a over the name, then a splitmix64 finalizer over the combination.
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : name) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::uint64_t z = base + 0x9E3779B97F4A7C15ull * (h | 1ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline Matrix random_matrix(Rng& rng, Index rows, Index cols) {
  Matrix g(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) g(i, j) = rng.complex_gaussian();
  return g;
}

inline Matrix random_hermitian(Rng& rng, Index n) {
  Matrix g = random_matrix(rng, n, n);
  return (g + g.adjoint()) / 2.0;
}

/// W W* with W of the requested rank; PSD with that rank (a.s.).
inline Matrix random_psd(Rng& rng, Index n, Index rank) {
  if (rank <= 0) return Matrix::Zero(n, n);
  Matrix w = random_matrix(rng, n, rank);
  Matrix p = w * w.adjoint();
  return (p + p.adjoint()) / 2.0;
}

/// A = i H0 - G G* with H0 Hermitian and G square complex Gaussian.
/// Dissipative with full-rank Hermitian defect (a.s.); seed recorded by the
/// caller.
inline Matrix random_dissipative(Rng& rng, Index n) {
  Matrix h0 = random_hermitian(rng, n);
  Matrix g = random_matrix(rng, n, n);
  return Complex(0, 1) * h0 - g * g.adjoint();
}

/// Random matrix rescaled to the requested operator norm (< 1 gives a strict
/// contraction with positive-definite defects).
inline Matrix random_contraction(Rng& rng, Index n, double norm_target) {
  Matrix g = random_matrix(rng, n, n);
  const double nrm = operator_norm(g);
  if (nrm == 0.0) return g;
  return g * (norm_target / nrm);
}

inline Vector random_vector(Rng& rng, Index n) {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = rng.complex_gaussian();
  return v;
}

inline Vector random_unit_vector(Rng& rng, Index n) {
  Vector v = random_vector(rng, n);
  const double nrm = v.norm();
  if (nrm == 0.0) {
    v.setZero();
    v(0) = 1.0;
    return v;
  }
  return v / nrm;
}

}  // namespace dissipgap
