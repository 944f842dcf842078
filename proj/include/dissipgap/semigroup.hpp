// Copyright (c) 2026 the dissipgap authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "dissipgap/kernel.hpp"
#include "dissipgap/quadrature.hpp"
#include "dissipgap/random.hpp"
#include "dissipgap/types.hpp"

namespace dissipgap {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Generator of a contraction semigroup: a square matrix A together with its
/// certified Hermitian defect H = -(A + A*)/2 >= 0. The quadratic form
/// (H y, y) realizes Re(-A y, y); finite-dimensionally the same H serves A*.
struct DissipativeOperator {
  Matrix A;
  HermitianPsd H;           // hermitian_part(-A), PSD-certified
  double dissipativity_margin = 0.0;  // smallest eigenvalue of H

  Index dim() const { return A.rows(); }
};

inline DissipativeOperator make_dissipative(const Matrix& a,
                                            double tol = kDefaultRankTol) {
  require_square(a, "make_dissipative");
  Matrix h = hermitian_part((-a).eval());
  const double norm_a = operator_norm(a);
  HermitianPsd cert;
  try {
    cert = certify_psd(h, tol, norm_a);
  } catch (const NotPsdError& e) {
    throw NotDissipativeError(
        "make_dissipative: Hermitian defect has eigenvalue " +
            std::to_string(e.offending_eigenvalue) + " < -tol*||A||",
        e.offending_eigenvalue);
  }
  const double margin = cert.min_eig;
  return DissipativeOperator{a, std::move(cert), margin};
}

/// Adjoint generator; shares the Hermitian defect with the original.
inline DissipativeOperator adjoint_of(const DissipativeOperator& op) {
  return DissipativeOperator{op.A.adjoint(), op.H, op.dissipativity_margin};
}

/// Result of a minimal-constant computation for the two-sided weighted form
/// bound. epsilon = +inf with range_compatible = false is a first-class
/// outcome (the hypothesis genuinely fails); the violating direction then
/// records where.
struct EpsilonResult {
  double epsilon = 0.0;
  bool range_compatible = true;
  double dual_epsilon = 0.0;
  bool dual_range_compatible = true;
  double range_defect = 0.0;  // worst projector-violation norm / ||B - A||
  Vector violating_direction;
};

namespace detail {

/// Least eps with |(x, D y)|^2 <= eps^2 (Wx x, x)(Wy y, y), where Wx, Wy are
/// certified PSD weights: the operator norm of Wx^{†/2} D Wy^{†/2} under the
/// two range-compatibility checks, +inf otherwise.
inline void weighted_min_constant(const Matrix& d, const PseudoInvSqrt& wx,
                                  const PseudoInvSqrt& wy, double range_tol,
                                  double norm_d, double& eps_out,
                                  bool& compatible_out, double& defect_out,
                                  Vector* violating) {
  const Index n = d.rows();
  const Matrix ident = Matrix::Identity(n, n);
  const double left_defect = operator_norm(((ident - wx.P_ran) * d).eval());
  const double right_defect = operator_norm((d * (ident - wy.P_ran)).eval());
  defect_out = std::max(left_defect, right_defect) / norm_d;
  if (defect_out > range_tol) {
    eps_out = kInf;
    compatible_out = false;
    if (violating) {
      // unit vector on which the form bound has a vanishing weight but a
      // non-vanishing pairing
      if (right_defect >= left_defect) {
        Eigen::JacobiSVD<Matrix> svd((d * (ident - wy.P_ran)).eval(),
                                     Eigen::ComputeFullV);
        *violating = svd.matrixV().col(0);
      } else {
        Eigen::JacobiSVD<Matrix> svd(((ident - wx.P_ran) * d).eval(),
                                     Eigen::ComputeFullU);
        *violating = svd.matrixU().col(0);
      }
    }
    return;
  }
  eps_out = operator_norm((wx.R * d * wy.R).eval());
  compatible_out = true;
}

}  // namespace detail

/// Minimal eps with |(x, (B - A) y)|^2 <= eps^2 (H_B x, x)(H_A y, y) for all
/// x, y, i.e. ||H_B^{†/2} (B - A) H_A^{†/2}|| when ran(B - A) lies in
/// ran(H_B) and ran((B - A)*) lies in ran(H_A); +inf otherwise. The dual
/// constant ||H_A^{†/2} (B - A) H_B^{†/2}|| is reported alongside; no
/// equality between the two is asserted.
inline EpsilonResult epsilon_min(const DissipativeOperator& a,
                                 const DissipativeOperator& b,
                                 double rank_tol = kDefaultRankTol,
                                 double range_tol = 1e-8) {
  require_same_shape(a.A, b.A, "epsilon_min");
  EpsilonResult out;
  const Matrix delta = b.A - a.A;
  const double norm_d = operator_norm(delta);
  if (norm_d == 0.0) return out;

  const PseudoInvSqrt pa = pseudo_inv_sqrt(a.H, rank_tol);
  const PseudoInvSqrt pb = pseudo_inv_sqrt(b.H, rank_tol);
  detail::weighted_min_constant(delta, pb, pa, range_tol, norm_d, out.epsilon,
                                out.range_compatible, out.range_defect,
                                &out.violating_direction);
  double dual_defect = 0.0;
  detail::weighted_min_constant(delta, pa, pb, range_tol, norm_d,
                                out.dual_epsilon, out.dual_range_compatible,
                                dual_defect, nullptr);
  return out;
}

/// Monte-Carlo cross-check of the form bound: max over seeded random x, y of
/// |(x,(B-A)y)|^2 / ((H_B x,x)(H_A y,y)). Must not exceed eps^2 + 1e-8.
inline double verify_pointwise(const DissipativeOperator& a,
                               const DissipativeOperator& b, double eps,
                               int sample_count, std::uint64_t seed) {
  if (!std::isfinite(eps))
    throw PreconditionError("verify_pointwise: eps must be finite");
  require_same_shape(a.A, b.A, "verify_pointwise");
  const Matrix delta = b.A - a.A;
  const double scale = std::max(operator_norm(delta), 1e-300);
  Rng rng(stream_seed(seed, "verify_pointwise"));
  double max_ratio = 0.0;
  for (int s = 0; s < sample_count; ++s) {
    const Vector x = random_unit_vector(rng, a.dim());
    const Vector y = random_unit_vector(rng, a.dim());
    const double num = std::norm(x.dot(delta * y));
    const double den_x = std::real(x.dot(b.H.H * x));
    const double den_y = std::real(y.dot(a.H.H * y));
    const double den = std::max(den_x, 0.0) * std::max(den_y, 0.0);
    if (den <= 1e-28 * scale * scale) continue;  // weight numerically zero
    max_ratio = std::max(max_ratio, num / den);
  }
  return max_ratio;
}

/// 256 log-spaced points on [1e-3, 50] plus t = 0.
inline std::vector<double> default_t_grid(int points = 256, double t_min = 1e-3,
                                          double t_max = 50.0) {
  std::vector<double> grid;
  grid.reserve(static_cast<size_t>(points) + 1);
  grid.push_back(0.0);
  if (points == 1) {
    grid.push_back(t_max);
    return grid;
  }
  const double ratio = std::log(t_max / t_min) / (points - 1);
  for (int k = 0; k < points; ++k)
    grid.push_back(t_min * std::exp(ratio * k));
  return grid;
}

struct CurvePoint {
  double t;
  double value;
};

/// t -> ||e^{Bt} - e^{At}|| evaluated independently per grid point.
inline std::vector<CurvePoint> diff_norm_curve(const DissipativeOperator& a,
                                               const DissipativeOperator& b,
                                               const std::vector<double>& t_grid) {
  require_same_shape(a.A, b.A, "diff_norm_curve");
  std::vector<CurvePoint> curve;
  curve.reserve(t_grid.size());
  for (double t : t_grid) {
    if (t < 0.0) throw PreconditionError("diff_norm_curve: negative t");
    const Matrix diff = semigroup_at(b.A, t) - semigroup_at(a.A, t);
    curve.push_back({t, operator_norm(diff)});
  }
  return curve;
}

/// Uniform semigroup-difference report. bound_ratio stays <= 1 + 1e-8 for
/// every pair with finite eps; a violation is an implementation bug and
/// throws with the offending t.
struct PerturbationReport {
  double epsilon = 0.0;
  bool range_compatible = true;
  double sup_diff_norm = 0.0;
  double t_at_sup = 0.0;
  double bound_ratio = 0.0;
  double dual_epsilon = 0.0;
};

inline PerturbationReport verify_uniform_bound(
    const DissipativeOperator& a, const DissipativeOperator& b,
    const std::vector<double>& t_grid, double slack = 1e-8) {
  const EpsilonResult er = epsilon_min(a, b);
  if (!er.range_compatible)
    throw PreconditionError(
        "verify_uniform_bound: eps is infinite (range-incompatible pair)");
  const auto curve = diff_norm_curve(a, b, t_grid);
  PerturbationReport rep;
  rep.epsilon = er.epsilon;
  rep.range_compatible = true;
  rep.dual_epsilon = er.dual_epsilon;
  for (const auto& p : curve) {
    if (p.value > rep.sup_diff_norm) {
      rep.sup_diff_norm = p.value;
      rep.t_at_sup = p.t;
    }
  }
  if (er.epsilon == 0.0) {
    // zero constant forces equal semigroups
    if (rep.sup_diff_norm > 1e-10)
      throw BoundViolationError("verify_uniform_bound: eps = 0 but semigroups differ",
                                rep.t_at_sup, rep.sup_diff_norm, 1e-10);
    rep.bound_ratio = 0.0;
    return rep;
  }
  const double allowed = er.epsilon / 2.0 + slack;
  if (rep.sup_diff_norm > allowed)
    throw BoundViolationError("verify_uniform_bound: sup diff exceeds eps/2",
                              rep.t_at_sup, rep.sup_diff_norm, allowed);
  rep.bound_ratio = rep.sup_diff_norm / (er.epsilon / 2.0);
  return rep;
}

/// Dissipation functional: closed form 1/2(||y||^2 - ||e^{At} y||^2) against
/// the quadrature of Re(-A e^{As} y, e^{As} y) over [0, t].
struct DissipationIntegral {
  double closed_form = 0.0;
  double quadrature = 0.0;
};

inline DissipationIntegral dissipation_integral(const DissipativeOperator& a,
                                                const Vector& y, double t) {
  if (t < 0.0) throw PreconditionError("dissipation_integral: t >= 0 required");
  DissipationIntegral out;
  const Vector yt = semigroup_at(a.A, t) * y;
  out.closed_form = 0.5 * (y.squaredNorm() - yt.squaredNorm());
  auto integrand = [&](double s) {
    const Vector z = semigroup_at(a.A, s) * y;
    return std::real(z.dot(a.H.H * z));
  };
  const double tol = 1e-9 * std::max(y.squaredNorm(), 1e-30);
  out.quadrature = adaptive_quadrature(integrand, 0.0, t, tol).first;
  return out;
}

/// Strong limit P(A) = lim e^{A*t} e^{At}, located by doubling the horizon
/// until the Gram product moves by <= tol; 0 <= P <= I certified. The limit
/// exists for every contraction semigroup; a finite horizon may not reach
/// it, in which case `converged` stays false and the last residual is kept.
struct HorizonPolicy {
  double t0 = 1.0;
  double t_max = 1e7;
  double tol = 1e-8;
};

struct LimitOperator {
  HermitianPsd P;
  double converged_at_t = 0.0;
  double residual = 0.0;
  bool converged = false;
};

inline LimitOperator limit_operator(const DissipativeOperator& a,
                                    HorizonPolicy policy = {}) {
  LimitOperator out;
  double t = policy.t0;
  Matrix e = semigroup_at(a.A, t);
  Matrix gram = e.adjoint() * e;
  while (true) {
    const Matrix e2 = e * e;  // e^{A 2t}
    const Matrix gram2 = e2.adjoint() * e2;
    const double residual = operator_norm((gram2 - gram).eval());
    if (residual <= policy.tol) {
      out.residual = residual;
      out.converged_at_t = t;
      out.converged = true;
      Matrix sym = (gram + gram.adjoint()) / 2.0;
      out.P = certify_psd(sym, 1e-8);
      if (out.P.min_eig < -1e-8 || operator_norm(sym) > 1.0 + 1e-8)
        throw ConvergenceError("limit_operator: limit escaped [0, I]");
      return out;
    }
    if (2.0 * t > policy.t_max) {
      out.residual = residual;
      out.converged_at_t = t;
      out.converged = false;
      Matrix sym = (gram + gram.adjoint()) / 2.0;
      out.P = certify_psd(sym, 1e-8);
      return out;
    }
    t *= 2.0;
    e = e2;
    gram = gram2;
  }
}

/// Refined two-weight bound at one sample: lhs = |(x, (e^{Bt}-e^{At}) y)|^2,
/// rhs = eps^2/4 ((x,x) - (P(B*)x,x)) ((y,y) - (P(A)y,y)).
struct RefinedBound {
  double lhs = 0.0;
  double rhs = 0.0;
};

inline RefinedBound verify_refined_bound(const DissipativeOperator& a,
                                         const DissipativeOperator& b,
                                         double eps, const Vector& x,
                                         const Vector& y, double t,
                                         const LimitOperator& p_a,
                                         const LimitOperator& p_bstar) {
  if (!p_a.converged || !p_bstar.converged)
    throw ConvergenceError("verify_refined_bound: limit operator not converged");
  RefinedBound out;
  const Matrix diff = semigroup_at(b.A, t) - semigroup_at(a.A, t);
  out.lhs = std::norm(x.dot(diff * y));
  const double wx = std::max(x.squaredNorm() - std::real(x.dot(p_bstar.P.H * x)), 0.0);
  const double wy = std::max(y.squaredNorm() - std::real(y.dot(p_a.P.H * y)), 0.0);
  out.rhs = eps * eps / 4.0 * wx * wy;
  return out;
}

inline RefinedBound verify_refined_bound(const DissipativeOperator& a,
                                         const DissipativeOperator& b,
                                         double eps, const Vector& x,
                                         const Vector& y, double t,
                                         HorizonPolicy policy = {}) {
  const LimitOperator p_a = limit_operator(a, policy);
  const LimitOperator p_bstar = limit_operator(adjoint_of(b), policy);
  return verify_refined_bound(a, b, eps, x, y, t, p_a, p_bstar);
}

/// Residual of the weak Duhamel formula
///   (e^{B*t}x, y) - (x, e^{At}y)
///     = int_0^t [(B* e^{B*s}x, e^{A(t-s)}y) - (e^{B*s}x, A e^{A(t-s)}y)] ds.
/// Inner products are conjugate-linear in the first argument.
inline double duhamel_residual(const DissipativeOperator& a,
                               const DissipativeOperator& b, double t,
                               const Vector& x, const Vector& y) {
  if (t < 0.0) throw PreconditionError("duhamel_residual: t >= 0 required");
  require_same_shape(a.A, b.A, "duhamel_residual");
  const Matrix bstar = b.A.adjoint();
  auto integrand = [&](double s) -> Complex {
    const Vector xs = matrix_exp((bstar * s).eval()) * x;
    const Vector yts = semigroup_at(a.A, t - s) * y;
    return (bstar * xs).dot(yts) - xs.dot(a.A * yts);
  };
  const double scale = std::max(x.norm() * y.norm(), 1e-30);
  const Complex integral =
      adaptive_quadrature(integrand, 0.0, t, 1e-9 * scale).first;
  const Complex lhs = (matrix_exp((bstar * t).eval()) * x).dot(y) -
                      x.dot(semigroup_at(a.A, t) * y);
  return std::abs(lhs - integral);
}

/// Residual of the continuous telescoping identity
///   int_0^t e^{A tau} (A + B) e^{B tau} dtau = -(I - e^{At} e^{Bt}).
inline double continuous_identity_residual(const DissipativeOperator& a,
                                           const DissipativeOperator& b,
                                           double t) {
  if (t < 0.0)
    throw PreconditionError("continuous_identity_residual: t >= 0 required");
  require_same_shape(a.A, b.A, "continuous_identity_residual");
  const Index n = a.dim();
  const Matrix sum_ab = a.A + b.A;
  auto integrand = [&](double tau) -> Matrix {
    return semigroup_at(a.A, tau) * sum_ab * semigroup_at(b.A, tau);
  };
  const Matrix integral =
      adaptive_quadrature(integrand, 0.0, t, 1e-9 * std::sqrt(double(n))).first;
  const Matrix rhs = Matrix::Identity(n, n) - semigroup_at(a.A, t) * semigroup_at(b.A, t);
  return operator_norm((integral + rhs).eval());
}

/// Exponential stability: spectral abscissa strictly negative (relative to
/// ||A||); the witness carries a time with ||e^{At*}|| < 1 when stable.
struct StabilityWitness {
  bool stable = false;
  double abscissa = 0.0;
  double t_star = 0.0;      // 0 when not stable
  double norm_at_t_star = 0.0;
};

inline StabilityWitness is_exponentially_stable(const DissipativeOperator& a) {
  StabilityWitness w;
  w.abscissa = spectral_abscissa(a.A);
  const double norm_a = operator_norm(a.A);
  w.stable = w.abscissa < -1e-10 * norm_a;
  if (w.stable) {
    double t = 1.0;
    for (int iter = 0; iter < 64; ++iter) {
      const double nrm = operator_norm(semigroup_at(a.A, t));
      if (nrm < 1.0) {
        w.t_star = t;
        w.norm_at_t_star = nrm;
        break;
      }
      t *= 2.0;
    }
  }
  return w;
}

/// Stability-transfer verdict for a pair with eps < 2: exponential decay of
/// one semigroup forces the same for the other. With eps >= 2 the statement
/// is silent and the check reports precondition-not-met instead of guessing.
struct TransferVerdict {
  bool applicable = false;
  double epsilon = kInf;
  StabilityWitness witness_a;
  StabilityWitness witness_b;
  bool equivalent = false;
};

inline TransferVerdict stability_transfer_check(const DissipativeOperator& a,
                                                const DissipativeOperator& b) {
  TransferVerdict v;
  const EpsilonResult er = epsilon_min(a, b);
  v.epsilon = er.epsilon;
  if (!er.range_compatible || er.epsilon >= 2.0) {
    v.applicable = false;
    return v;
  }
  v.applicable = true;
  v.witness_a = is_exponentially_stable(a);
  v.witness_b = is_exponentially_stable(b);
  v.equivalent = v.witness_a.stable == v.witness_b.stable;
  return v;
}

/// The minimal constant is invariant under inverting both operators.
struct InversionCheck {
  double eps_direct = 0.0;
  double eps_inverse = 0.0;
};

inline InversionCheck inversion_invariance_check(const DissipativeOperator& a,
                                                 const DissipativeOperator& b,
                                                 double tol = kDefaultRankTol) {
  require_same_shape(a.A, b.A, "inversion_invariance_check");
  for (const auto* op : {&a, &b}) {
    const double sigma_min = smallest_singular_value(op->A);
    if (sigma_min <= 1e-10 * operator_norm(op->A))
      throw SingularMatrixError(
          "inversion_invariance_check: operator numerically singular");
  }
  InversionCheck out;
  out.eps_direct = epsilon_min(a, b).epsilon;
  const DissipativeOperator ai = make_dissipative(a.A.inverse(), tol);
  const DissipativeOperator bi = make_dissipative(b.A.inverse(), tol);
  out.eps_inverse = epsilon_min(ai, bi).epsilon;
  return out;
}

}  // namespace dissipgap
