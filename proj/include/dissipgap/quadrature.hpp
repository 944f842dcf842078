// Copyright (c) 2026 the dissipgap authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <utility>

#include "dissipgap/types.hpp"

namespace dissipgap {

namespace detail {

// 15-point Kronrod / 7-point Gauss pair on [-1, 1].
inline constexpr double kGk15Nodes[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769,
    0.741531185599394, 0.586087235467691, 0.405845151377397,
    0.207784955007898, 0.0};
inline constexpr double kGk15WeightsK[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728};
inline constexpr double kGk15WeightsG[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469};

inline double norm_of(double x) { return std::abs(x); }
inline double norm_of(const Complex& x) { return std::abs(x); }
inline double norm_of(const Matrix& x) { return x.norm(); }

template <class F>
struct QuadPanel {
  using Value = std::decay_t<decltype(std::declval<F&>()(0.0))>;
  Value kronrod;
  double error;
};

template <class F>
QuadPanel<F> gk15(F& f, double a, double b) {
  using Value = typename QuadPanel<F>::Value;
  const double half = (b - a) / 2.0;
  const double mid = (a + b) / 2.0;

  Value center = f(mid);
  Value kron = kGk15WeightsK[7] * center;
  Value gauss = kGk15WeightsG[3] * center;
  for (int i = 0; i < 7; ++i) {
    const double dx = half * kGk15Nodes[i];
    Value lo = f(mid - dx);
    Value hi = f(mid + dx);
    Value sum = lo + hi;
    kron += kGk15WeightsK[i] * sum;
    if (i % 2 == 1) gauss += kGk15WeightsG[i / 2] * sum;
  }
  kron *= half;
  gauss *= half;
  return {kron, norm_of(Value(kron - gauss))};
}

template <class F, class Value>
void adaptive_recurse(F& f, double a, double b, double tol, int depth,
                      Value& acc, double& err_acc) {
  auto panel = gk15(f, a, b);
  if (panel.error <= tol || depth >= 28 ||
      (b - a) < 1e-14 * (std::abs(a) + std::abs(b) + 1.0)) {
    acc += panel.kronrod;
    err_acc += panel.error;
    return;
  }
  const double mid = (a + b) / 2.0;
  adaptive_recurse(f, a, mid, tol / 2.0, depth + 1, acc, err_acc);
  adaptive_recurse(f, mid, b, tol / 2.0, depth + 1, acc, err_acc);
}

}  // namespace detail

/// Adaptive Gauss-Kronrod quadrature of a scalar-, complex- or
/// matrix-valued integrand over [a, b]. `tol_abs` is the absolute target for
/// the accumulated error estimate; callers pass a scale-relative budget.
template <class F>
auto adaptive_quadrature(F&& f, double a, double b, double tol_abs) {
  using Value = std::decay_t<decltype(f(a))>;
  Value first = f(a);
  Value acc = first;
  acc -= first;  // zero of the correct shape
  double err = 0.0;
  if (a == b) return std::pair<Value, double>(acc, 0.0);
  detail::adaptive_recurse(f, a, b, tol_abs, 0, acc, err);
  return std::pair<Value, double>(acc, err);
}

}  // namespace dissipgap
