// Copyright (c) 2026 the dissipgap authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "dissipgap/kernel.hpp"
#include "dissipgap/semigroup.hpp"
#include "dissipgap/types.hpp"

namespace dissipgap {

/// Damped second-order system in stiffness-orthonormal coordinates: the
/// stiffness is the identity, M is the (possibly singular) mass and C the
/// accretive damping.
struct SecondOrderSystem {
  HermitianPsd M;
  Matrix C;
  HermitianPsd H_C;  // hermitian_part(C), PSD-certified (accretivity)

  Index dim() const { return C.rows(); }
};

inline SecondOrderSystem make_second_order(const Matrix& m, const Matrix& c,
                                           double tol = kDefaultRankTol) {
  require_square(c, "make_second_order");
  require_same_shape(m, c, "make_second_order");
  HermitianPsd mass = certify_psd(m, tol);
  HermitianPsd hc;
  try {
    hc = certify_psd(hermitian_part(c), tol, operator_norm(c));
  } catch (const NotPsdError& e) {
    throw NotAccretiveError(
        "make_second_order: damping has Re-part eigenvalue " +
            std::to_string(e.offending_eigenvalue),
        e.offending_eigenvalue);
  }
  return SecondOrderSystem{std::move(mass), c, std::move(hc)};
}

/// Block operator [[-C, -M^{1/2}], [M^{1/2}, 0]] with its null space, the
/// projector onto the physical phase space X = N^perp, the restriction to X
/// and the generator A = (restriction)^{-1}. Rank decisions surface the
/// discarded singular values.
struct PhaseSpaceOperator {
  Matrix Aplus;        // 2n x 2n
  Matrix M_sqrt;       // n x n
  Matrix N_basis;      // 2n x k0, orthonormal basis of N(Aplus)
  Matrix X_basis;      // 2n x k,  orthonormal basis of X
  Matrix Q;            // orthogonal projector onto X
  Matrix A_inv;        // restriction of Aplus to X, in the X basis
  Matrix A;            // generator: inverse of A_inv
  double split_residual = 0.0;     // off-diagonal residual of the 0 (+) A_inv split
  double null_match_residual = 0.0;  // || P_N(Aplus) - P_N(Aplus*) ||
  std::vector<double> discarded_singulars;

  Index phase_dim() const { return Aplus.rows(); }
  Index x_dim() const { return X_basis.cols(); }
};

namespace detail {

inline Matrix assemble_aplus(const Matrix& c, const Matrix& m_sqrt) {
  const Index n = c.rows();
  Matrix aplus = Matrix::Zero(2 * n, 2 * n);
  aplus.topLeftCorner(n, n) = -c;
  aplus.topRightCorner(n, n) = -m_sqrt;
  aplus.bottomLeftCorner(n, n) = m_sqrt;
  return aplus;
}

}  // namespace detail

inline PhaseSpaceOperator build_aplus(const SecondOrderSystem& sys,
                                      double rank_tol = kDefaultRankTol) {
  PhaseSpaceOperator ps;
  ps.M_sqrt = psd_sqrt(sys.M).H;
  ps.Aplus = detail::assemble_aplus(sys.C, ps.M_sqrt);
  const Index dim2 = ps.Aplus.rows();

  // dissipativity certificate; the Hermitian defect is exactly diag(H_C, 0)
  make_dissipative(ps.Aplus, 1e-8);

  Eigen::JacobiSVD<Matrix> svd(ps.Aplus,
                               Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double sigma_max = sv.size() ? sv(0) : 0.0;
  const double thr = rank_tol * sigma_max;
  Index rank = 0;
  for (Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > thr)
      ++rank;
    else
      ps.discarded_singulars.push_back(sv(i));
  }
  ps.X_basis = svd.matrixV().leftCols(rank);
  ps.N_basis = svd.matrixV().rightCols(dim2 - rank);
  const Matrix n_star_basis = svd.matrixU().rightCols(dim2 - rank);

  // N(Aplus) must agree with N(Aplus*)
  const Matrix p_n = ps.N_basis * ps.N_basis.adjoint();
  const Matrix p_n_star = n_star_basis * n_star_basis.adjoint();
  ps.null_match_residual = operator_norm((p_n - p_n_star).eval());
  if (ps.null_match_residual > 1e-8)
    throw ConvergenceError(
        "build_aplus: null spaces of the block operator and its adjoint "
        "disagree; residual " +
        std::to_string(ps.null_match_residual));

  ps.Q = ps.X_basis * ps.X_basis.adjoint();
  ps.Q = ((ps.Q + ps.Q.adjoint()) / 2.0).eval();

  // Aplus must split as 0 (+) A_inv across N (+) X
  ps.A_inv = ps.X_basis.adjoint() * ps.Aplus * ps.X_basis;
  const Matrix recomposed = ps.X_basis * ps.A_inv * ps.X_basis.adjoint();
  ps.split_residual = operator_norm((ps.Aplus - recomposed).eval());
  if (sigma_max > 0.0 && ps.split_residual > 1e-10 * sigma_max)
    throw ConvergenceError("build_aplus: block split residual " +
                           std::to_string(ps.split_residual));

  if (rank > 0) {
    ps.A = ps.A_inv.partialPivLu().solve(Matrix::Identity(rank, rank));
    make_dissipative(ps.A, 1e-8);  // generator certificate
  } else {
    ps.A = Matrix(0, 0);
    ps.A_inv = Matrix(0, 0);
  }
  return ps;
}

/// Rebuild the phase operator for a different damping in the SAME basis (the
/// perturbations in scope leave the null space unchanged); the shared basis
/// makes semigroup differences of the two generators meaningful.
inline PhaseSpaceOperator rebuild_with_damping(const PhaseSpaceOperator& base,
                                               const Matrix& c_hat,
                                               double tol = 1e-8) {
  PhaseSpaceOperator ps;
  ps.M_sqrt = base.M_sqrt;
  ps.Aplus = detail::assemble_aplus(c_hat, base.M_sqrt);
  make_dissipative(ps.Aplus, 1e-8);
  ps.N_basis = base.N_basis;
  ps.X_basis = base.X_basis;
  ps.Q = base.Q;

  const double scale = std::max(operator_norm(ps.Aplus), 1e-300);
  const double null_res =
      base.N_basis.cols() == 0
          ? 0.0
          : operator_norm((ps.Aplus * base.N_basis).eval());
  const double null_res_star =
      base.N_basis.cols() == 0
          ? 0.0
          : operator_norm((ps.Aplus.adjoint() * base.N_basis).eval());
  ps.null_match_residual = std::max(null_res, null_res_star) / scale;
  if (ps.null_match_residual > tol)
    throw PreconditionError(
        "rebuild_with_damping: perturbed damping changed the null space "
        "(residual " +
        std::to_string(ps.null_match_residual) + ")");

  ps.A_inv = ps.X_basis.adjoint() * ps.Aplus * ps.X_basis;
  const Matrix recomposed = ps.X_basis * ps.A_inv * ps.X_basis.adjoint();
  ps.split_residual = operator_norm((ps.Aplus - recomposed).eval()) ;
  const Index rank = ps.X_basis.cols();
  if (rank > 0) {
    ps.A = ps.A_inv.partialPivLu().solve(Matrix::Identity(rank, rank));
    make_dissipative(ps.A, 1e-8);
  } else {
    ps.A = Matrix(0, 0);
  }
  return ps;
}

/// Sector constant: least N with |Im(Cy,y)| <= N Re(Cy,y), i.e.
/// ||H^{†/2} S H^{†/2}|| with H the Hermitian and S the imaginary part;
/// finite iff N(H) lies in N(S). +inf is a value, not an error.
inline double sector_constant(const Matrix& c, double rank_tol = kDefaultRankTol) {
  require_square(c, "sector_constant");
  const Matrix h = hermitian_part(c);
  const Matrix s = ((c - c.adjoint()) / Complex(0, 2)).eval();
  const double norm_s = operator_norm(s);
  if (norm_s == 0.0) return 0.0;
  const HermitianPsd hc = certify_psd(h, 1e-8, operator_norm(c));
  const PseudoInvSqrt ph = pseudo_inv_sqrt(hc, rank_tol);
  const Index n = c.rows();
  const double defect =
      operator_norm((s * (Matrix::Identity(n, n) - ph.P_ran)).eval());
  if (defect > 1e-8 * norm_s) return kInf;
  return operator_norm((ph.R * s * ph.R).eval());
}

/// Null-space formula: (N(C) cap N(M)) (+) N(M) is always contained in
/// N(Aplus); equality holds whenever C is sectorial. A strict inclusion with
/// non-sectorial C is a valid outcome, reported as such.
struct NullSpaceFormulaCheck {
  bool inclusion_holds = false;
  bool equality_holds = false;
  bool sectorial = false;
  double sector = kInf;
  double inclusion_residual = 0.0;
  Index predicted_dim = 0;
  Index actual_dim = 0;
};

inline NullSpaceFormulaCheck null_space_formula_check(
    const SecondOrderSystem& sys, const PhaseSpaceOperator& ps,
    double rank_tol = kDefaultRankTol, double tol = 1e-8) {
  NullSpaceFormulaCheck out;
  const Index n = sys.dim();
  const NullSpace null_m = null_space_basis(ps.M_sqrt, rank_tol);
  const NullSpace null_c = null_space_basis(sys.C, rank_tol);

  // intersection N(C) cap N(M): null space of [C; M^{1/2}] stacked
  Matrix stacked(2 * n, n);
  stacked.topRows(n) = sys.C;
  stacked.bottomRows(n) = ps.M_sqrt;
  const NullSpace null_cm = null_space_basis(stacked, rank_tol);

  const Index k_first = null_cm.basis.cols();
  const Index k_second = null_m.basis.cols();
  out.predicted_dim = k_first + k_second;
  out.actual_dim = ps.N_basis.cols();

  // embed predicted = (N(C) cap N(M)) (+) N(M) into the phase space
  Matrix predicted = Matrix::Zero(2 * n, out.predicted_dim);
  predicted.block(0, 0, n, k_first) = null_cm.basis;
  predicted.block(n, k_first, n, k_second) = null_m.basis;

  const Matrix p_actual = ps.N_basis * ps.N_basis.adjoint();
  // inclusion: predicted subspace fixed by the actual projector
  out.inclusion_residual =
      out.predicted_dim == 0
          ? 0.0
          : operator_norm((p_actual * predicted - predicted).eval());
  out.inclusion_holds = out.inclusion_residual <= tol;

  out.sector = sector_constant(sys.C, rank_tol);
  out.sectorial = std::isfinite(out.sector);
  out.equality_holds =
      out.inclusion_holds && out.predicted_dim == out.actual_dim;
  return out;
}

/// Residual of the pseudo-resolvent identity
///   (lambda - A)^{-1} Q = 1/lambda - (1/lambda^2) (1/lambda - Aplus)^{-1},
/// the left side computed in the X basis and embedded back.
inline double pseudo_resolvent_residual(const PhaseSpaceOperator& ps,
                                        Complex lambda) {
  if (std::abs(lambda.real()) <= 1e-12 * std::abs(lambda))
    throw PreconditionError(
        "pseudo_resolvent_residual: Re(lambda) must be nonzero");
  const Index dim2 = ps.phase_dim();
  const Index k = ps.x_dim();
  Matrix lhs = Matrix::Zero(dim2, dim2);
  if (k > 0) {
    const Matrix resolvent =
        (lambda * Matrix::Identity(k, k) - ps.A)
            .partialPivLu()
            .solve(Matrix::Identity(k, k));
    lhs = ps.X_basis * resolvent * ps.X_basis.adjoint();
  }
  const Complex mu = 1.0 / lambda;
  const Matrix inner =
      (mu * Matrix::Identity(dim2, dim2) - ps.Aplus)
          .partialPivLu()
          .solve(Matrix::Identity(dim2, dim2));
  const Matrix rhs = mu * Matrix::Identity(dim2, dim2) - mu * mu * inner;
  return operator_norm((lhs - rhs).eval());
}

/// Spectral clipping M_n = f_n(M), f_n(lambda) = clamp(lambda, 1/n, n):
/// positive definite, bounded, boundedly invertible.
struct MassApproximation {
  double clip_index = 1.0;
  HermitianPsd M_n;
};

inline MassApproximation clip_mass(const HermitianPsd& m, double n) {
  if (n < 1.0) throw PreconditionError("clip_mass: n >= 1 required");
  auto eig = detail::hermitian_eigen(m);
  RealVector clipped = eig.values.cwiseMax(1.0 / n).cwiseMin(n);
  Matrix mn = eig.vectors * clipped.asDiagonal() * eig.vectors.adjoint();
  mn = ((mn + mn.adjoint()) / 2.0).eval();
  MassApproximation out;
  out.clip_index = n;
  out.M_n = HermitianPsd{std::move(mn), m.certification_tol, clipped.minCoeff()};
  return out;
}

/// The bounded generator [[0, M_n^{-1/2}], [-M_n^{-1/2}, -M_n^{-1/2} C M_n^{-1/2}]]
/// for positive-definite M_n; the exact matrix inverse of the block operator
/// built from (M_n, C).
inline Matrix build_an(const HermitianPsd& m_n, const Matrix& c) {
  require_same_shape(m_n.H, c, "build_an");
  auto eig = detail::hermitian_eigen(m_n);
  if (eig.values.minCoeff() <= 0.0)
    throw SingularMatrixError("build_an: M_n must be positive definite");
  const RealVector inv_root = eig.values.cwiseSqrt().cwiseInverse();
  const Matrix r = eig.vectors * inv_root.asDiagonal() * eig.vectors.adjoint();
  const Index n = c.rows();
  Matrix an = Matrix::Zero(2 * n, 2 * n);
  an.topRightCorner(n, n) = r;
  an.bottomLeftCorner(n, n) = -r;
  an.bottomRightCorner(n, n) = -r * c * r;
  return an;
}

/// Approximation error table: for each clip index n, the sup over the grid of
/// || e^{A_n t} x  -  embedded e^{A t} x ||, x in X.
struct TrotterKatoRow {
  double n = 0.0;
  double sup_error = 0.0;
};

inline std::vector<TrotterKatoRow> trotter_kato_error(
    const SecondOrderSystem& sys, const PhaseSpaceOperator& ps,
    const Vector& x, const std::vector<double>& t_grid,
    const std::vector<double>& n_list, double membership_tol = 1e-8) {
  if (x.size() != ps.phase_dim())
    throw DimensionError("trotter_kato_error: x has wrong dimension");
  const double x_norm = x.norm();
  if (x_norm == 0.0)
    throw PreconditionError("trotter_kato_error: x must be nonzero");
  const double off = ((Matrix::Identity(ps.phase_dim(), ps.phase_dim()) - ps.Q) * x).norm();
  if (off > membership_tol * x_norm)
    throw PreconditionError(
        "trotter_kato_error: x is not in the physical phase space "
        "(projection residual " +
        std::to_string(off / x_norm) + ")");

  // reference trajectory, embedded
  const Vector xi = ps.X_basis.adjoint() * x;
  std::vector<Vector> reference;
  reference.reserve(t_grid.size());
  for (double t : t_grid)
    reference.push_back(ps.X_basis * (semigroup_at(ps.A, t) * xi));

  std::vector<TrotterKatoRow> table;
  table.reserve(n_list.size());
  for (double n : n_list) {
    const MassApproximation mn = clip_mass(sys.M, n);
    const Matrix an = build_an(mn.M_n, sys.C);
    double sup_err = 0.0;
    for (size_t i = 0; i < t_grid.size(); ++i) {
      const Vector approx = semigroup_at(an, t_grid[i]) * x;
      sup_err = std::max(sup_err, (approx - reference[i]).norm());
    }
    table.push_back({n, sup_err});
  }
  return table;
}

/// Max over the grid of the scale-relative residual || M_n y'' + C y' + y ||
/// along the evolved trajectory, with derivatives taken by five-point central
/// differences of the semigroup (independent of the generator algebra).
inline double second_order_residual(const HermitianPsd& m_n, const Matrix& c,
                                    const Vector& y0, const Vector& v0,
                                    const std::vector<double>& t_grid) {
  const Matrix an = build_an(m_n, c);
  const Matrix m_sqrt = psd_sqrt(m_n).H;
  const Index n = c.rows();
  Vector x0(2 * n);
  x0.head(n) = y0;
  x0.tail(n) = m_sqrt * v0;

  const double gen_norm = std::max(operator_norm(an), 1.0);
  const double h = 1e-3 / gen_norm;
  double worst = 0.0;
  for (double t : t_grid) {
    Vector samples[5];
    for (int j = -2; j <= 2; ++j)
      samples[j + 2] = (semigroup_at(an, t + j * h) * x0).head(n);
    const Vector y = samples[2];
    const Vector yd = (-samples[4] + 8.0 * samples[3] - 8.0 * samples[1] +
                       samples[0]) /
                      (12.0 * h);
    const Vector ydd = (-samples[4] + 16.0 * samples[3] - 30.0 * samples[2] +
                        16.0 * samples[1] - samples[0]) /
                       (12.0 * h * h);
    const Vector residual = m_n.H * ydd + c * yd + y;
    const double scale = (m_n.H * ydd).norm() + (c * yd).norm() + y.norm();
    if (scale > 0.0) worst = std::max(worst, residual.norm() / scale);
  }
  return worst;
}

/// Minimal eps with |((Chat - C)x, y)|^2 <= eps^2 Re(Cy,y) Re(Chat x,x):
/// ||H_C^{†/2} (Chat - C) H_Chat^{†/2}|| with range checks. By the inversion
/// bridge this equals the minimal constant of the induced phase-space pair
/// with the hatted operator in the first slot.
inline EpsilonResult damping_epsilon(const Matrix& c, const Matrix& c_hat,
                                     double rank_tol = kDefaultRankTol,
                                     double range_tol = 1e-8) {
  require_same_shape(c, c_hat, "damping_epsilon");
  EpsilonResult out;
  const Matrix delta = c_hat - c;
  const double norm_d = operator_norm(delta);
  if (norm_d == 0.0) return out;

  HermitianPsd hc, hch;
  try {
    hc = certify_psd(hermitian_part(c), 1e-8, operator_norm(c));
    hch = certify_psd(hermitian_part(c_hat), 1e-8, operator_norm(c_hat));
  } catch (const NotPsdError& e) {
    throw NotAccretiveError("damping_epsilon: non-accretive input",
                            e.offending_eigenvalue);
  }
  const PseudoInvSqrt pc = pseudo_inv_sqrt(hc, rank_tol);
  const PseudoInvSqrt pch = pseudo_inv_sqrt(hch, rank_tol);
  detail::weighted_min_constant(delta, pc, pch, range_tol, norm_d, out.epsilon,
                                out.range_compatible, out.range_defect,
                                &out.violating_direction);
  double dual_defect = 0.0;
  detail::weighted_min_constant(delta, pch, pc, range_tol, norm_d,
                                out.dual_epsilon, out.dual_range_compatible,
                                dual_defect, nullptr);
  return out;
}

/// One link of a damping homotopy.
struct ChainLink {
  int k = 0;
  double epsilon = 0.0;
  double abscissa = 0.0;
  bool stable = false;
};

struct ChainVerdict {
  bool applicable = false;
  int links = 0;
  std::vector<ChainLink> chain;  // per-link data, k = 0..n-1 for (C_k, C_{k+1})
  std::vector<double> abscissae; // per-node generator abscissae, k = 0..n
  bool all_links_admissible = false;  // every link constant < 2
  bool endpoints_equal_stability = false;
  double sector = kInf;  // set by the sectorial variant
};

namespace detail {

struct NodeStability {
  double abscissa = 0.0;
  bool stable = false;
};

inline NodeStability node_stability(const HermitianPsd& m, const Matrix& c) {
  const SecondOrderSystem sys = make_second_order(m.H, c);
  const PhaseSpaceOperator ps = build_aplus(sys);
  if (ps.x_dim() == 0) return {0.0, false};
  NodeStability out;
  out.abscissa = spectral_abscissa(ps.A);
  out.stable = out.abscissa < -1e-10 * operator_norm(ps.A);
  return out;
}

}  // namespace detail

/// Homotopy C_k = C + (k/n)(D - C) for 0 <= C <= D <= alpha C with symmetric
/// PSD C; n = floor((alpha-1)/2) + 1 keeps every link constant below 2, so
/// exponential stability transfers along the whole chain.
inline ChainVerdict homotopy_chain_stability(const SecondOrderSystem& sys,
                                             const Matrix& d, double alpha,
                                             double cert_tol = 1e-10) {
  require_same_shape(sys.C, d, "homotopy_chain_stability");
  if (alpha < 1.0)
    throw PreconditionError("homotopy_chain_stability: alpha >= 1 required");
  const Matrix& c1 = sys.C;
  const double scale =
      std::max({operator_norm(c1), operator_norm(d), 1e-300});
  if (operator_norm(skew_part(c1)) > cert_tol * scale)
    throw PreconditionError("homotopy_chain_stability: C must be symmetric");
  // ordering certificates 0 <= C <= D <= alpha C
  certify_psd(c1, cert_tol, scale);
  try {
    certify_psd((d - c1).eval(), cert_tol, scale);
    certify_psd((alpha * c1 - d).eval(), cert_tol, scale);
  } catch (const NotPsdError& e) {
    throw PreconditionError(
        "homotopy_chain_stability: ordering 0 <= C <= D <= alpha C failed "
        "(eigenvalue " +
        std::to_string(e.offending_eigenvalue) + ")");
  }

  ChainVerdict v;
  v.applicable = true;
  const int n = static_cast<int>(std::floor((alpha - 1.0) / 2.0)) + 1;
  v.links = n;
  v.all_links_admissible = true;
  Matrix prev = c1;
  auto first = detail::node_stability(sys.M, prev);
  v.abscissae.push_back(first.abscissa);
  bool first_stable = first.stable;
  bool last_stable = first.stable;
  for (int k = 0; k < n; ++k) {
    const Matrix next = c1 + ((double(k) + 1.0) / n) * (d - c1);
    const EpsilonResult er = damping_epsilon(prev, next);
    const auto node = detail::node_stability(sys.M, next);
    ChainLink link;
    link.k = k;
    link.epsilon = er.epsilon;
    link.abscissa = node.abscissa;
    link.stable = node.stable;
    v.chain.push_back(link);
    v.abscissae.push_back(node.abscissa);
    last_stable = node.stable;
    if (!(er.epsilon < 2.0)) v.all_links_admissible = false;
    prev = next;
  }
  v.endpoints_equal_stability = first_stable == last_stable;
  return v;
}

/// Chain from the symmetric part Chat = (C + C*)/2 to a sectorial C with
/// n = floor(N/2) + 1 links of constant exactly N/n each; stability of the
/// damped system and its purely damped companion coincide.
inline ChainVerdict symmetric_part_equivalence(const SecondOrderSystem& sys,
                                               double rank_tol = kDefaultRankTol) {
  ChainVerdict v;
  v.sector = sector_constant(sys.C, rank_tol);
  if (!std::isfinite(v.sector)) {
    v.applicable = false;
    return v;
  }
  v.applicable = true;
  const Matrix c_hat = hermitian_part(sys.C);
  const int n = static_cast<int>(std::floor(v.sector / 2.0)) + 1;
  v.links = n;
  v.all_links_admissible = true;
  Matrix prev = c_hat;
  auto first = detail::node_stability(sys.M, prev);
  v.abscissae.push_back(first.abscissa);
  bool last_stable = first.stable;
  for (int k = 0; k < n; ++k) {
    const Matrix next = c_hat + ((double(k) + 1.0) / n) * (sys.C - c_hat);
    const EpsilonResult er = damping_epsilon(prev, next);
    const auto node = detail::node_stability(sys.M, next);
    ChainLink link;
    link.k = k;
    link.epsilon = er.epsilon;
    link.abscissa = node.abscissa;
    link.stable = node.stable;
    v.chain.push_back(link);
    v.abscissae.push_back(node.abscissa);
    last_stable = node.stable;
    if (!(er.epsilon < 2.0)) v.all_links_admissible = false;
    prev = next;
  }
  v.endpoints_equal_stability = first.stable == last_stable;
  return v;
}

}  // namespace dissipgap
