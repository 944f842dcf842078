// Copyright (c) 2026 the dissipgap authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "dissipgap/kernel.hpp"
#include "dissipgap/random.hpp"
#include "dissipgap/semigroup.hpp"
#include "dissipgap/types.hpp"

namespace dissipgap {

/// Certified contraction: ||T|| <= 1 + tol. Inputs slightly above 1 are
/// rejected, never renormalized (renormalization would change the minimal
/// constant).
struct Contraction {
  Matrix T;
  double norm_certificate = 0.0;

  Index dim() const { return T.rows(); }
};

inline Contraction make_contraction(const Matrix& t, double tol = 1e-10) {
  require_square(t, "make_contraction");
  const double nrm = operator_norm(t);
  if (nrm > 1.0 + tol)
    throw NotContractionError(
        "make_contraction: ||T|| = " + std::to_string(nrm) + " exceeds 1",
        nrm);
  return Contraction{t, nrm};
}

/// Defect operators of a pair: D_right = (I - B*B)^{1/2} and
/// D_left = (I - A A*)^{1/2}.
struct DefectPair {
  HermitianPsd D_right;
  HermitianPsd D_left;
};

inline DefectPair compute_defects(const Contraction& a, const Contraction& b,
                                  double tol = 1e-8) {
  require_same_shape(a.T, b.T, "compute_defects");
  const Index n = a.dim();
  const Matrix ident = Matrix::Identity(n, n);
  const Matrix right = ident - b.T.adjoint() * b.T;
  const Matrix left = ident - a.T * a.T.adjoint();
  return DefectPair{psd_sqrt(certify_psd(right, tol)),
                    psd_sqrt(certify_psd(left, tol))};
}

/// Minimal eps with |((B-A)x, y)|^2 <= eps^2 ((I-B*B)x,x) ((I-AA*)y,y):
/// ||(I-AA*)^{†/2} (B-A) (I-B*B)^{†/2}|| under the two range checks, +inf
/// otherwise.
inline EpsilonResult epsilon_min_discrete(const Contraction& a,
                                          const Contraction& b,
                                          double rank_tol = kDefaultRankTol,
                                          double range_tol = 1e-8) {
  require_same_shape(a.T, b.T, "epsilon_min_discrete");
  EpsilonResult out;
  const Matrix delta = b.T - a.T;
  const double norm_d = operator_norm(delta);
  if (norm_d == 0.0) return out;

  const Index n = a.dim();
  const Matrix ident = Matrix::Identity(n, n);
  const HermitianPsd right = certify_psd((ident - b.T.adjoint() * b.T).eval(), 1e-8);
  const HermitianPsd left = certify_psd((ident - a.T * a.T.adjoint()).eval(), 1e-8);
  const PseudoInvSqrt pr = pseudo_inv_sqrt(right, rank_tol);
  const PseudoInvSqrt pl = pseudo_inv_sqrt(left, rank_tol);
  detail::weighted_min_constant(delta, pl, pr, range_tol, norm_d, out.epsilon,
                                out.range_compatible, out.range_defect,
                                &out.violating_direction);
  double dual_defect = 0.0;
  // adjoint-pair constant, reported alongside
  const Matrix delta_star = delta.adjoint();
  const HermitianPsd right_d = certify_psd((ident - b.T * b.T.adjoint()).eval(), 1e-8);
  const HermitianPsd left_d = certify_psd((ident - a.T.adjoint() * a.T).eval(), 1e-8);
  const PseudoInvSqrt prd = pseudo_inv_sqrt(right_d, rank_tol);
  const PseudoInvSqrt pld = pseudo_inv_sqrt(left_d, rank_tol);
  detail::weighted_min_constant(delta_star, pld, prd, range_tol, norm_d,
                                out.dual_epsilon, out.dual_range_compatible,
                                dual_defect, nullptr);
  return out;
}

/// Strong limit Q(T) = lim T*^n T^n by doubling n; Q at the first n whose
/// doubling moves the product by <= tol.
struct QLimit {
  HermitianPsd Q;
  long converged_at_n = 0;
  double residual = 0.0;
  bool converged = false;
};

inline QLimit q_limit(const Contraction& t, long n_max = (1L << 22),
                      double tol = 1e-8) {
  QLimit out;
  long n = 1;
  Matrix power = t.T;  // T^n
  Matrix q = power.adjoint() * power;
  while (true) {
    const Matrix power2 = power * power;  // T^{2n}
    const Matrix q2 = power2.adjoint() * power2;
    const double residual = operator_norm((q2 - q).eval());
    if (residual <= tol) {
      out.converged = true;
      out.converged_at_n = n;
      out.residual = residual;
      out.Q = certify_psd(((q + q.adjoint()) / 2.0).eval(), 1e-8);
      return out;
    }
    if (2 * n > n_max) {
      out.converged = false;
      out.converged_at_n = n;
      out.residual = residual;
      out.Q = certify_psd(((q + q.adjoint()) / 2.0).eval(), 1e-8);
      return out;
    }
    n *= 2;
    power = power2;
    q = q2;
  }
}

/// Power-difference bound report: for each n,
///   ||B^n - A^n|| <= eps sqrt(||I - Q(A*)|| ||I - Q(B)||) <= eps,
/// with the weak two-vector form spot-checked on seeded vectors.
struct PowerBoundReport {
  double epsilon = 0.0;
  double middle_bound = 0.0;  // eps sqrt(||I-Q(A*)|| ||I-Q(B)||)
  double sup_diff_norm = 0.0;
  long n_at_sup = 0;
  double max_weak_ratio = 0.0;  // max |((B^n-A^n)x,y)|^2 / weighted weights
  std::vector<CurvePoint> curve;  // (n, ||B^n - A^n||)
};

inline PowerBoundReport verify_power_bound(const Contraction& a,
                                           const Contraction& b, long n_max,
                                           std::uint64_t seed,
                                           int weak_samples = 16,
                                           double slack = 1e-8) {
  require_same_shape(a.T, b.T, "verify_power_bound");
  const EpsilonResult er = epsilon_min_discrete(a, b);
  if (!er.range_compatible)
    throw PreconditionError("verify_power_bound: eps infinite");
  PowerBoundReport rep;
  rep.epsilon = er.epsilon;

  // tight Q limits so the middle bound is not weakened by truncation
  const QLimit qa_star = q_limit(make_contraction(a.T.adjoint()), 1L << 22, 1e-10);
  const QLimit qb = q_limit(b, 1L << 22, 1e-10);
  const Index n_dim = a.dim();
  const Matrix ident = Matrix::Identity(n_dim, n_dim);
  const Matrix w_x = ident - qb.Q.H;       // I - Q(B)
  const Matrix w_y = ident - qa_star.Q.H;  // I - Q(A*)
  rep.middle_bound =
      er.epsilon * std::sqrt(operator_norm(w_y) * operator_norm(w_x));

  Rng rng(stream_seed(seed, "verify_power_bound"));
  std::vector<Vector> xs, ys;
  for (int s = 0; s < weak_samples; ++s) {
    xs.push_back(random_unit_vector(rng, n_dim));
    ys.push_back(random_unit_vector(rng, n_dim));
  }

  Matrix pa = ident, pb = ident;
  rep.curve.reserve(static_cast<size_t>(n_max));
  for (long n = 1; n <= n_max; ++n) {
    pa = (pa * a.T).eval();
    pb = (pb * b.T).eval();
    const Matrix diff = pb - pa;
    const double nrm = operator_norm(diff);
    rep.curve.push_back({static_cast<double>(n), nrm});
    if (nrm > rep.sup_diff_norm) {
      rep.sup_diff_norm = nrm;
      rep.n_at_sup = n;
    }
    if (nrm > rep.middle_bound + slack || nrm > er.epsilon + slack)
      throw BoundViolationError("verify_power_bound: ||B^n - A^n|| exceeds bound",
                                static_cast<double>(n), nrm,
                                std::min(rep.middle_bound, er.epsilon) + slack);
    for (int s = 0; s < weak_samples; ++s) {
      const double num = std::norm(xs[static_cast<size_t>(s)]
                                       .dot(diff * ys[static_cast<size_t>(s)])
                                       );
      const double dx = std::max(
          std::real(xs[static_cast<size_t>(s)].dot(w_x * xs[static_cast<size_t>(s)])), 0.0);
      const double dy = std::max(
          std::real(ys[static_cast<size_t>(s)].dot(w_y * ys[static_cast<size_t>(s)])), 0.0);
      const double den = dx * dy;
      if (den <= 1e-24) continue;
      const double ratio = num / den;
      rep.max_weak_ratio = std::max(rep.max_weak_ratio, ratio);
      if (ratio > er.epsilon * er.epsilon + slack)
        throw BoundViolationError("verify_power_bound: weak form bound violated",
                                  static_cast<double>(n), ratio,
                                  er.epsilon * er.epsilon + slack);
    }
  }
  return rep;
}

/// || sum_{k=0}^{n-1} A^k (I - AB) B^k - (I - A^n B^n) ||; an algebraic
/// identity, machine-exact at bounded scale for any square pair.
inline double telescoping_residual(const Matrix& a, const Matrix& b, long n) {
  require_same_shape(a, b, "telescoping_residual");
  require_square(a, "telescoping_residual");
  if (n < 1) throw PreconditionError("telescoping_residual: n >= 1 required");
  const Index dim = a.rows();
  const Matrix ident = Matrix::Identity(dim, dim);
  const Matrix core = ident - a * b;
  Matrix pa = ident, pb = ident;
  Matrix acc = Matrix::Zero(dim, dim);
  for (long k = 0; k < n; ++k) {
    acc += pa * core * pb;
    pa = (pa * a).eval();
    pb = (pb * b).eval();
  }
  const Matrix rhs = ident - pa * pb;  // pa = A^n, pb = B^n after the loop
  return operator_norm((acc - rhs).eval());
}

/// Discrete stability transfer: with eps < 1, spectral radius < 1 for one
/// contraction forces the same for the other.
struct DiscreteTransferVerdict {
  bool applicable = false;
  double epsilon = kInf;
  double radius_a = 0.0;
  double radius_b = 0.0;
  bool stable_a = false;
  bool stable_b = false;
  bool equivalent = false;
};

inline DiscreteTransferVerdict discrete_stability_transfer(
    const Contraction& a, const Contraction& b) {
  DiscreteTransferVerdict v;
  const EpsilonResult er = epsilon_min_discrete(a, b);
  v.epsilon = er.epsilon;
  if (!er.range_compatible || er.epsilon >= 1.0) {
    v.applicable = false;
    return v;
  }
  v.applicable = true;
  v.radius_a = spectral_radius(a.T);
  v.radius_b = spectral_radius(b.T);
  v.stable_a = v.radius_a < 1.0 - 1e-12;
  v.stable_b = v.radius_b < 1.0 - 1e-12;
  v.equivalent = v.stable_a == v.stable_b;
  return v;
}

}  // namespace dissipgap
