// Copyright (c) 2026 the dissipgap authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "dissipgap/types.hpp"

namespace dissipgap {

inline constexpr double kDefaultRankTol = 1e-10;

/// Hermitian part (A + A*)/2. Element-wise exact arithmetic.
inline Matrix hermitian_part(const Matrix& a) {
  require_square(a, "hermitian_part");
  return (a + a.adjoint()) / 2.0;
}

/// Skew part (A - A*)/2, so that hermitian_part(A) + skew_part(A) == A.
inline Matrix skew_part(const Matrix& a) {
  require_square(a, "skew_part");
  return (a - a.adjoint()) / 2.0;
}

/// Largest singular value.
inline double operator_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  if (!a.allFinite()) throw OverflowError("operator_norm: non-finite entries");
  if (a.rows() >= 32 || a.cols() >= 32) {
    Eigen::BDCSVD<Matrix> svd(a);
    return svd.singularValues()(0);
  }
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues()(0);
}

/// A square complex matrix certified Hermitian positive semidefinite.
/// The stored matrix is exactly Hermitian; min_eig may be slightly negative
/// within the certification tolerance (relative to the certification scale).
struct HermitianPsd {
  Matrix H;
  double certification_tol = kDefaultRankTol;
  double min_eig = 0.0;

  Index dim() const { return H.rows(); }
};

/// Certify a matrix as Hermitian PSD. `scale_hint`, when positive, replaces
/// ||H|| as the scale against which the tolerance is applied (used when H is
/// the Hermitian part of a larger operator).
inline HermitianPsd certify_psd(const Matrix& h, double tol = kDefaultRankTol,
                                double scale_hint = -1.0) {
  require_square(h, "certify_psd");
  const double scale_h = h.norm();
  if ((h - h.adjoint()).norm() > tol * scale_h)
    throw NotHermitianError("certify_psd: matrix is not Hermitian");
  Matrix hs = (h + h.adjoint()) / 2.0;
  double min_eig = 0.0;
  double scale = scale_hint;
  if (hs.size() > 0) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(hs,
                                             Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
      throw ConvergenceError("certify_psd: eigenvalue iteration failed");
    min_eig = es.eigenvalues().minCoeff();
    const double max_abs = es.eigenvalues().cwiseAbs().maxCoeff();
    if (scale <= 0.0) scale = max_abs;
  }
  if (min_eig < -tol * std::max(scale, 0.0))
    throw NotPsdError("certify_psd: eigenvalue " + std::to_string(min_eig) +
                          " below -tol*scale",
                      min_eig);
  return HermitianPsd{std::move(hs), tol, min_eig};
}

namespace detail {

/// Eigendecomposition of a certified Hermitian matrix.
struct HermitianEigen {
  RealVector values;  // ascending
  Matrix vectors;
};

inline HermitianEigen hermitian_eigen(const HermitianPsd& h) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(h.H);
  if (es.info() != Eigen::Success)
    throw ConvergenceError("hermitian_eigen: eigenvalue iteration failed");
  return {es.eigenvalues(), es.eigenvectors()};
}

}  // namespace detail

/// Matrix exponential e^A by Padé-13 with scaling and squaring.
/// Relative accuracy near machine precision for moderate norms; overflow for
/// extreme norms is reported, never silent.
inline Matrix matrix_exp(const Matrix& a) {
  require_square(a, "matrix_exp");
  const Index n = a.rows();
  if (n == 0) return Matrix(0, 0);
  if (!a.allFinite()) throw OverflowError("matrix_exp: non-finite entries");

  // theta_13 from the standard degree-13 backward-error analysis
  constexpr double theta13 = 5.371920351148152;
  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm1 > theta13) {
    squarings = static_cast<int>(std::ceil(std::log2(norm1 / theta13)));
    if (squarings > 1024)
      throw OverflowError("matrix_exp: norm " + std::to_string(norm1) +
                          " too extreme");
  }
  const Matrix as = a * std::ldexp(1.0, -squarings);

  static constexpr double b[14] = {
      64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
      1187353796428800.0,  129060195264000.0,   10559470521600.0,
      670442572800.0,      33522128640.0,       1323241920.0,
      40840800.0,          960960.0,            16380.0,
      182.0,               1.0};

  const Matrix ident = Matrix::Identity(n, n);
  const Matrix a2 = as * as;
  const Matrix a4 = a2 * a2;
  const Matrix a6 = a2 * a4;
  const Matrix u =
      as * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 +
            b[5] * a4 + b[3] * a2 + b[1] * ident);
  const Matrix v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 +
                   b[4] * a4 + b[2] * a2 + b[0] * ident;

  Matrix r = (v - u).partialPivLu().solve(v + u);
  for (int i = 0; i < squarings; ++i) r = (r * r).eval();
  if (!r.allFinite())
    throw OverflowError("matrix_exp: overflow during squaring phase");
  return r;
}

/// e^{At} for the semigroup evaluations.
inline Matrix semigroup_at(const Matrix& a, double t) {
  return matrix_exp((a * t).eval());
}

/// Hermitian PSD square root via eigendecomposition. Negative eigenvalues
/// within the certification tolerance are clamped to zero.
inline HermitianPsd psd_sqrt(const HermitianPsd& h) {
  auto eig = detail::hermitian_eigen(h);
  RealVector root = eig.values.cwiseMax(0.0).cwiseSqrt();
  Matrix s = eig.vectors * root.asDiagonal() * eig.vectors.adjoint();
  s = (s + s.adjoint()) / 2.0;
  return HermitianPsd{std::move(s), h.certification_tol,
                      root.size() ? root.minCoeff() : 0.0};
}

/// H^{†/2} together with the orthogonal projector onto the numerically
/// nonzero eigenspace. Eigenvalues <= rel_tol * lambda_max are treated as
/// exactly zero; the discarded ones are surfaced for auditing.
struct PseudoInvSqrt {
  Matrix R;      // H^{†/2}, Hermitian PSD
  Matrix P_ran;  // projector onto ran(H) at the given tolerance
  Index rank = 0;
  std::vector<double> discarded;  // eigenvalues treated as zero
};

inline PseudoInvSqrt pseudo_inv_sqrt(const HermitianPsd& h,
                                     double rel_tol = kDefaultRankTol) {
  auto eig = detail::hermitian_eigen(h);
  const Index n = h.dim();
  const double lambda_max = eig.values.size() ? std::max(eig.values.maxCoeff(), 0.0) : 0.0;
  const double thr = rel_tol * lambda_max;
  RealVector inv_root = RealVector::Zero(n);
  RealVector keep = RealVector::Zero(n);
  PseudoInvSqrt out;
  for (Index i = 0; i < n; ++i) {
    if (eig.values(i) > thr && eig.values(i) > 0.0) {
      inv_root(i) = 1.0 / std::sqrt(eig.values(i));
      keep(i) = 1.0;
      ++out.rank;
    } else {
      out.discarded.push_back(eig.values(i));
    }
  }
  out.R = eig.vectors * inv_root.asDiagonal() * eig.vectors.adjoint();
  out.R = (out.R + out.R.adjoint()) / 2.0;
  out.P_ran = eig.vectors * keep.asDiagonal() * eig.vectors.adjoint();
  out.P_ran = (out.P_ran + out.P_ran.adjoint()) / 2.0;
  return out;
}

/// Orthonormal basis of the numerical null space: right singular vectors
/// whose singular value is <= rel_tol * sigma_max.
struct NullSpace {
  Matrix basis;  // n x k, orthonormal columns
  double sigma_max = 0.0;
  std::vector<double> discarded;  // singular values treated as zero
};

inline NullSpace null_space_basis(const Matrix& a,
                                  double rel_tol = kDefaultRankTol) {
  if (!a.allFinite())
    throw OverflowError("null_space_basis: non-finite entries");
  NullSpace out;
  const Index n = a.cols();
  if (a.size() == 0) {
    out.basis = Matrix::Identity(n, n);
    return out;
  }
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  out.sigma_max = sv.size() ? sv(0) : 0.0;
  const double thr = rel_tol * out.sigma_max;
  std::vector<Index> null_cols;
  for (Index i = 0; i < n; ++i) {
    const double s = i < sv.size() ? sv(i) : 0.0;
    if (s <= thr) {
      null_cols.push_back(i);
      out.discarded.push_back(s);
    }
  }
  out.basis.resize(n, static_cast<Index>(null_cols.size()));
  for (Index j = 0; j < out.basis.cols(); ++j)
    out.basis.col(j) = svd.matrixV().col(null_cols[static_cast<size_t>(j)]);
  return out;
}

/// max Re(lambda) over the spectrum.
inline double spectral_abscissa(const Matrix& a) {
  require_square(a, "spectral_abscissa");
  if (a.rows() == 0)
    throw DimensionError("spectral_abscissa: empty matrix");
  Eigen::ComplexEigenSolver<Matrix> es(a, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success)
    throw ConvergenceError("spectral_abscissa: eigenvalue iteration failed");
  return es.eigenvalues().real().maxCoeff();
}

/// max |lambda| over the spectrum (discrete-time stability).
inline double spectral_radius(const Matrix& a) {
  require_square(a, "spectral_radius");
  if (a.rows() == 0) throw DimensionError("spectral_radius: empty matrix");
  Eigen::ComplexEigenSolver<Matrix> es(a, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success)
    throw ConvergenceError("spectral_radius: eigenvalue iteration failed");
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// Smallest singular value (invertibility certificates).
inline double smallest_singular_value(const Matrix& a) {
  require_square(a, "smallest_singular_value");
  if (a.rows() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues()(a.rows() - 1);
}

}  // namespace dissipgap
