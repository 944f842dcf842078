// Copyright (c) 2026 the dissipgap authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "dissipgap/kernel.hpp"
#include "dissipgap/second_order.hpp"
#include "dissipgap/semigroup.hpp"
#include "dissipgap/types.hpp"

namespace dissipgap {

/// One piece of a piecewise-constant coefficient table for the damped wave
/// equation rho u_tt + gamma u_t - (d u_tx)' - (k u_x)' = 0 on (a, b).
struct WavePiece {
  double x0 = 0.0;
  double x1 = 0.0;
  double rho = 0.0;
  double gamma = 0.0;
  double d = 0.0;
  double k = 1.0;
};

/// Coefficients on (a, b) with Dirichlet data at a and the impedance
/// condition u_x(b) + zeta u_t(b) = 0 at b.
struct WaveCoefficients {
  double a = 0.0;
  double b = 1.0;
  double zeta = 0.0;
  std::vector<WavePiece> pieces;
};

inline void validate_coefficients(const WaveCoefficients& c) {
  if (!(c.a < c.b))
    throw PreconditionError("wave coefficients: need a < b");
  if (c.zeta < 0.0)
    throw PreconditionError("wave coefficients: zeta must be nonnegative");
  if (c.pieces.empty())
    throw PreconditionError("wave coefficients: no pieces");
  const double span = c.b - c.a;
  double cursor = c.a;
  for (const auto& p : c.pieces) {
    if (std::abs(p.x0 - cursor) > 1e-12 * span)
      throw PreconditionError("wave coefficients: pieces must tile (a, b)");
    if (!(p.x1 > p.x0))
      throw PreconditionError("wave coefficients: empty piece");
    if (p.rho < 0.0 || p.gamma < 0.0 || p.d < 0.0)
      throw PreconditionError("wave coefficients: negative coefficient");
    if (!(p.k > 0.0))
      throw PreconditionError("wave coefficients: ess inf k <= 0");
    cursor = p.x1;
  }
  if (std::abs(cursor - c.b) > 1e-12 * span)
    throw PreconditionError("wave coefficients: pieces must reach b");
}

/// Value of a coefficient at a point (pieces are half-open [x0, x1)).
inline const WavePiece& piece_at(const WaveCoefficients& c, double x) {
  for (const auto& p : c.pieces)
    if (x < p.x1 || &p == &c.pieces.back()) return p;
  return c.pieces.back();
}

/// P1 mesh on (a, b): the node at a is excluded (Dirichlet), the node at b
/// carries the impedance term. Dimension = number of interior nodes + 1.
struct FemMesh {
  std::vector<double> nodes;  // x_0 = a < ... < x_m = b

  Index dim() const { return static_cast<Index>(nodes.size()) - 1; }
};

inline FemMesh uniform_mesh(double a, double b, Index m) {
  if (m < 1) throw PreconditionError("uniform_mesh: need at least 1 element");
  FemMesh mesh;
  mesh.nodes.resize(static_cast<size_t>(m) + 1);
  for (Index i = 0; i <= m; ++i)
    mesh.nodes[static_cast<size_t>(i)] = a + (b - a) * double(i) / double(m);
  mesh.nodes.front() = a;
  mesh.nodes.back() = b;
  return mesh;
}

inline FemMesh mesh_from_nodes(std::vector<double> nodes) {
  if (nodes.size() < 2)
    throw PreconditionError("mesh_from_nodes: need at least 2 nodes");
  for (size_t i = 1; i < nodes.size(); ++i)
    if (!(nodes[i] > nodes[i - 1]))
      throw PreconditionError("mesh_from_nodes: nodes must be increasing");
  return FemMesh{std::move(nodes)};
}

/// Assembled FEM matrices and their stiffness-orthonormal reductions.
struct AssembledWaveSystem {
  Matrix K;      // stiffness, Hermitian positive definite
  Matrix Mass;   // rho-weighted mass, Hermitian PSD
  Matrix Theta;  // damping form incl. the boundary term, Hermitian PSD here
  Matrix L;      // K = L L*
  HermitianPsd M_kappa;  // L^{-1} Mass L^{-*}
  Matrix C_kappa;        // L^{-1} Theta L^{-*}
  FemMesh mesh;
  WaveCoefficients coefficients;

  SecondOrderSystem system() const {
    return make_second_order(M_kappa.H, C_kappa);
  }
};

namespace detail {

/// Exact integrals of hat-function products over a subsegment [s0, s1] of an
/// element [xl, xr]; phi_l = (xr - x)/h decays, phi_r = (x - xl)/h grows.
struct ElementIntegrals {
  double mass_ll, mass_lr, mass_rr;   // int phi_a phi_b
  double stiff_ll, stiff_lr, stiff_rr;  // int phi_a' phi_b'
};

inline ElementIntegrals hat_integrals(double xl, double xr, double s0,
                                      double s1) {
  const double h = xr - xl;
  const double u0 = (s0 - xl) / h;
  const double u1 = (s1 - xl) / h;
  ElementIntegrals e{};
  auto cube = [](double v) { return v * v * v; };
  // int_{u0}^{u1} u^2, (1-u)^2, u(1-u), all times h
  e.mass_rr = h * (cube(u1) - cube(u0)) / 3.0;
  e.mass_ll = h * (cube(1.0 - u0) - cube(1.0 - u1)) / 3.0;
  e.mass_lr = h * ((u1 * u1 / 2.0 - cube(u1) / 3.0) -
                   (u0 * u0 / 2.0 - cube(u0) / 3.0));
  const double len = s1 - s0;
  e.stiff_rr = len / (h * h);
  e.stiff_ll = len / (h * h);
  e.stiff_lr = -len / (h * h);
  return e;
}

}  // namespace detail

/// Assemble K, Mass, Theta with exact element integrals for the
/// piecewise-constant data (coefficient breakpoints need not align with the
/// mesh; subsegments are integrated exactly). `kb_times_zeta` multiplies the
/// boundary damping by k(b) instead of taking zeta as printed.
inline AssembledWaveSystem assemble(const FemMesh& mesh,
                                    const WaveCoefficients& coeffs,
                                    bool kb_times_zeta = false) {
  validate_coefficients(coeffs);
  const double span = coeffs.b - coeffs.a;
  if (std::abs(mesh.nodes.front() - coeffs.a) > 1e-12 * span ||
      std::abs(mesh.nodes.back() - coeffs.b) > 1e-12 * span)
    throw PreconditionError("assemble: mesh does not cover (a, b)");

  const Index m = mesh.dim();
  Eigen::MatrixXd k_mat = Eigen::MatrixXd::Zero(m + 1, m + 1);
  Eigen::MatrixXd mass = Eigen::MatrixXd::Zero(m + 1, m + 1);
  Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(m + 1, m + 1);

  // collect all breakpoints (mesh nodes + coefficient edges), then integrate
  // each subsegment exactly inside its element
  std::vector<double> cuts = mesh.nodes;
  for (const auto& p : coeffs.pieces) {
    cuts.push_back(p.x0);
    cuts.push_back(p.x1);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end(),
                         [&](double x, double y) {
                           return std::abs(x - y) <= 1e-14 * span;
                         }),
             cuts.end());

  size_t elem = 0;
  for (size_t s = 0; s + 1 < cuts.size(); ++s) {
    const double s0 = cuts[s];
    const double s1 = cuts[s + 1];
    const double mid = (s0 + s1) / 2.0;
    while (elem + 1 < mesh.nodes.size() - 1 && mesh.nodes[elem + 1] <= mid)
      ++elem;
    const double xl = mesh.nodes[elem];
    const double xr = mesh.nodes[elem + 1];
    const WavePiece& p = piece_at(coeffs, mid);
    const auto e = detail::hat_integrals(xl, xr, s0, s1);
    const Index il = static_cast<Index>(elem);
    const Index ir = il + 1;
    k_mat(il, il) += p.k * e.stiff_ll;
    k_mat(il, ir) += p.k * e.stiff_lr;
    k_mat(ir, il) += p.k * e.stiff_lr;
    k_mat(ir, ir) += p.k * e.stiff_rr;
    mass(il, il) += p.rho * e.mass_ll;
    mass(il, ir) += p.rho * e.mass_lr;
    mass(ir, il) += p.rho * e.mass_lr;
    mass(ir, ir) += p.rho * e.mass_rr;
    theta(il, il) += p.gamma * e.mass_ll + p.d * e.stiff_ll;
    theta(il, ir) += p.gamma * e.mass_lr + p.d * e.stiff_lr;
    theta(ir, il) += p.gamma * e.mass_lr + p.d * e.stiff_lr;
    theta(ir, ir) += p.gamma * e.mass_rr + p.d * e.stiff_rr;
  }

  const double boundary = kb_times_zeta
                              ? coeffs.zeta * coeffs.pieces.back().k
                              : coeffs.zeta;
  theta(m, m) += boundary;

  AssembledWaveSystem sys;
  sys.mesh = mesh;
  sys.coefficients = coeffs;
  // drop the Dirichlet node at a
  sys.K = k_mat.bottomRightCorner(m, m).cast<Complex>();
  sys.Mass = mass.bottomRightCorner(m, m).cast<Complex>();
  sys.Theta = theta.bottomRightCorner(m, m).cast<Complex>();

  Eigen::LLT<Matrix> llt(sys.K);
  if (llt.info() != Eigen::Success)
    throw NotPsdError("assemble: stiffness matrix is not positive definite",
                      0.0);
  sys.L = llt.matrixL();

  // M_kappa = L^{-1} Mass L^{-*}, C_kappa = L^{-1} Theta L^{-*}
  auto reduce = [&](const Matrix& form) {
    Matrix y = sys.L.triangularView<Eigen::Lower>().solve(form);
    Matrix z = sys.L.triangularView<Eigen::Lower>().solve(y.adjoint().eval());
    Matrix red = z.adjoint();
    return ((red + red.adjoint()) / 2.0).eval();
  };
  sys.M_kappa = certify_psd(reduce(sys.Mass), 1e-10);
  sys.C_kappa = reduce(sys.Theta);
  certify_psd(sys.C_kappa, 1e-10);  // theta accretive (symmetric PSD here)
  return sys;
}

/// Pointwise and operator damping-perturbation constants. The hatted table
/// must agree with the base one in rho and k; 0/0 ratios contribute 0 and
/// x/0 with x > 0 forces +inf.
struct DampingPerturbation {
  double eps_pointwise = 0.0;
  EpsilonResult eps_operator;
};

namespace detail {

inline double ratio_constant(double v, double v_hat) {
  const double diff = std::abs(v_hat - v);
  if (diff == 0.0) return 0.0;
  const double geo = std::sqrt(v_hat * v);
  if (geo == 0.0) return kInf;
  return diff / geo;
}

}  // namespace detail

inline double pointwise_damping_constant(const WaveCoefficients& coeffs,
                                         const WaveCoefficients& hatted) {
  validate_coefficients(coeffs);
  validate_coefficients(hatted);
  const double span = coeffs.b - coeffs.a;
  if (std::abs(coeffs.a - hatted.a) > 1e-12 * span ||
      std::abs(coeffs.b - hatted.b) > 1e-12 * span)
    throw PreconditionError("pointwise_damping_constant: interval mismatch");

  std::vector<double> cuts;
  for (const auto& p : coeffs.pieces) {
    cuts.push_back(p.x0);
    cuts.push_back(p.x1);
  }
  for (const auto& p : hatted.pieces) {
    cuts.push_back(p.x0);
    cuts.push_back(p.x1);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end(),
                         [&](double x, double y) {
                           return std::abs(x - y) <= 1e-14 * span;
                         }),
             cuts.end());

  double eps = detail::ratio_constant(coeffs.zeta, hatted.zeta);
  for (size_t s = 0; s + 1 < cuts.size(); ++s) {
    const double mid = (cuts[s] + cuts[s + 1]) / 2.0;
    const WavePiece& p = piece_at(coeffs, mid);
    const WavePiece& q = piece_at(hatted, mid);
    if (std::abs(p.rho - q.rho) > 1e-12 * (1.0 + p.rho) ||
        std::abs(p.k - q.k) > 1e-12 * (1.0 + p.k))
      throw PreconditionError(
          "pointwise_damping_constant: rho/k must be unchanged");
    eps = std::max(eps, detail::ratio_constant(p.gamma, q.gamma));
    eps = std::max(eps, detail::ratio_constant(p.d, q.d));
  }
  return eps;
}

inline DampingPerturbation perturb_damping(const FemMesh& mesh,
                                           const WaveCoefficients& coeffs,
                                           const WaveCoefficients& hatted) {
  DampingPerturbation out;
  out.eps_pointwise = pointwise_damping_constant(coeffs, hatted);
  const AssembledWaveSystem base = assemble(mesh, coeffs);
  const AssembledWaveSystem target = assemble(mesh, hatted);
  out.eps_operator = damping_epsilon(base.C_kappa, target.C_kappa);
  return out;
}

/// eps = eta / sqrt(1 - eta) for eta in [0, 1): the constant under which a
/// relative damping change of size eta stays admissible.
inline double eta_to_epsilon(double eta) {
  if (!(eta >= 0.0 && eta < 1.0))
    throw PreconditionError("eta_to_epsilon: need 0 <= eta < 1");
  return eta / std::sqrt(1.0 - eta);
}

/// Verify on explicit tables that the eta-relative conditions imply the
/// ratio conditions with eps = eta/sqrt(1-eta).
struct EtaCheck {
  double eta = 0.0;
  double epsilon = 0.0;
  bool eta_condition_holds = false;
  bool epsilon_condition_holds = false;
};

inline EtaCheck eta_to_epsilon(double eta, const WaveCoefficients& coeffs,
                               const WaveCoefficients& hatted) {
  EtaCheck out;
  out.eta = eta;
  out.epsilon = eta_to_epsilon(eta);
  validate_coefficients(coeffs);
  validate_coefficients(hatted);
  const double span = coeffs.b - coeffs.a;
  std::vector<double> cuts;
  for (const auto& p : coeffs.pieces) {
    cuts.push_back(p.x0);
    cuts.push_back(p.x1);
  }
  for (const auto& p : hatted.pieces) {
    cuts.push_back(p.x0);
    cuts.push_back(p.x1);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end(),
                         [&](double x, double y) {
                           return std::abs(x - y) <= 1e-14 * span;
                         }),
             cuts.end());
  out.eta_condition_holds = true;
  const double tol = 1e-12;
  auto eta_ok = [&](double v, double v_hat) {
    return std::abs(v_hat - v) <= eta * v + tol * (1.0 + v);
  };
  for (size_t s = 0; s + 1 < cuts.size(); ++s) {
    const double mid = (cuts[s] + cuts[s + 1]) / 2.0;
    const WavePiece& p = piece_at(coeffs, mid);
    const WavePiece& q = piece_at(hatted, mid);
    if (!eta_ok(p.gamma, q.gamma) || !eta_ok(p.d, q.d))
      out.eta_condition_holds = false;
  }
  if (!eta_ok(coeffs.zeta, hatted.zeta)) out.eta_condition_holds = false;
  const double eps_pw = pointwise_damping_constant(coeffs, hatted);
  out.epsilon_condition_holds = eps_pw <= out.epsilon + 1e-12;
  return out;
}

/// Full decay comparison of an assembled pair sharing a mesh: generator
/// abscissae, the operator and pointwise constants, the semigroup-difference
/// curve (in the shared phase-space basis) and the transfer verdict for
/// eps < 2.
struct DecayReport {
  double eps_pointwise = 0.0;
  EpsilonResult eps_operator;
  double abscissa_base = 0.0;
  double abscissa_hat = 0.0;
  bool stable_base = false;
  bool stable_hat = false;
  bool transfer_applicable = false;
  bool transfer_consistent = false;
  std::vector<CurvePoint> diff_curve;
  double sup_diff = 0.0;
};

inline DecayReport decay_analysis(const FemMesh& mesh,
                                  const WaveCoefficients& coeffs,
                                  const WaveCoefficients& hatted,
                                  const std::vector<double>& t_grid) {
  DecayReport rep;
  rep.eps_pointwise = pointwise_damping_constant(coeffs, hatted);
  const AssembledWaveSystem base = assemble(mesh, coeffs);
  const AssembledWaveSystem target = assemble(mesh, hatted);
  rep.eps_operator = damping_epsilon(base.C_kappa, target.C_kappa);

  const SecondOrderSystem sys = base.system();
  const PhaseSpaceOperator ps = build_aplus(sys);
  if (rep.eps_operator.range_compatible) {
    const PhaseSpaceOperator ps_hat = rebuild_with_damping(ps, target.C_kappa);
    if (ps.x_dim() > 0) {
      rep.abscissa_base = spectral_abscissa(ps.A);
      rep.abscissa_hat = spectral_abscissa(ps_hat.A);
      rep.stable_base = rep.abscissa_base < -1e-10 * operator_norm(ps.A);
      rep.stable_hat = rep.abscissa_hat < -1e-10 * operator_norm(ps_hat.A);
      const DissipativeOperator gen = make_dissipative(ps.A, 1e-8);
      const DissipativeOperator gen_hat = make_dissipative(ps_hat.A, 1e-8);
      rep.diff_curve = diff_norm_curve(gen, gen_hat, t_grid);
      for (const auto& p : rep.diff_curve)
        rep.sup_diff = std::max(rep.sup_diff, p.value);
    }
  } else {
    // incompatible perturbation: phase spaces may differ; report abscissae
    // from independent constructions, no common-basis curve
    const PhaseSpaceOperator ps_hat = build_aplus(target.system());
    if (ps.x_dim() > 0) {
      rep.abscissa_base = spectral_abscissa(ps.A);
      rep.stable_base = rep.abscissa_base < -1e-10 * operator_norm(ps.A);
    }
    if (ps_hat.x_dim() > 0) {
      rep.abscissa_hat = spectral_abscissa(ps_hat.A);
      rep.stable_hat = rep.abscissa_hat < -1e-10 * operator_norm(ps_hat.A);
    }
  }
  rep.transfer_applicable =
      rep.eps_operator.range_compatible && rep.eps_operator.epsilon < 2.0;
  rep.transfer_consistent =
      !rep.transfer_applicable || rep.stable_base == rep.stable_hat;
  return rep;
}

/// rho = 0 left of the split node, 1 right of it; gamma = 1 left,
/// `gamma_right` right; conservative elsewhere. Exercises a nontrivial
/// physical phase space (mixed hyperbolic-parabolic dynamics).
inline WaveCoefficients mixed_type_coefficients(double a, double b,
                                                double split,
                                                double gamma_right = 1.0) {
  WaveCoefficients c;
  c.a = a;
  c.b = b;
  c.zeta = 0.0;
  if (split > a)
    c.pieces.push_back(WavePiece{a, split, 0.0, 1.0, 0.0, 1.0});
  if (split < b)
    c.pieces.push_back(WavePiece{split, b, 1.0, gamma_right, 0.0, 1.0});
  return c;
}

inline AssembledWaveSystem mixed_type_scenario(const FemMesh& mesh,
                                               double split,
                                               double gamma_right = 1.0) {
  const double span = mesh.nodes.back() - mesh.nodes.front();
  bool on_node = false;
  for (double x : mesh.nodes)
    if (std::abs(x - split) <= 1e-12 * span) on_node = true;
  if (!on_node)
    throw PreconditionError("mixed_type_scenario: split must lie on a mesh node");
  return assemble(mesh, mixed_type_coefficients(mesh.nodes.front(),
                                                mesh.nodes.back(), split,
                                                gamma_right));
}

}  // namespace dissipgap
