#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include <Eigen/LU>
#include <json.hpp>
#include <unsupported/Eigen/IterativeSolvers>

#include "pstbem/core.hpp"
#include "pstbem/mesh.hpp"
#include "pstbem/operators.hpp"
#include "pstbem/quadrature.hpp"

namespace pstbem {

/// Conductivity contrast k and object scale alpha (metres).
struct ContrastParams {
  double k = 10.0;
  double alpha = 0.01;

  ContrastParams() = default;
  ContrastParams(double k_, double alpha_) : k(k_), alpha(alpha_) {
    if (!(k > 0)) throw ConfigError("ContrastParams: contrast k must be positive");
    if (!(alpha > 0)) throw ConfigError("ContrastParams: scale alpha must be positive");
  }

  bool degenerate() const { return std::abs(k - 1.0) < 1e-6; }

  double lambda() const {
    if (degenerate())
      throw ConfigError("degenerate contrast: lambda is undefined for k = 1");
    return (k + 1.0) / (2.0 * (k - 1.0));
  }

  double r() const { return 1.0 / k; }
};

struct SolveDiagnostics {
  std::array<double, 3> residual{0, 0, 0};
  std::array<int, 3> iterations{0, 0, 0};
  std::string method;
};

/// Densities phi_i solving (lambda M + K*) phi_i = b_i with b_i[T] =
/// area_T (n_T)_i, and the surface projections psi_i = (1/(r-1)) M^-1 V phi_i.
struct DensitySolution {
  SurfaceMesh mesh;
  ContrastParams params;
  std::array<VectorXd, 3> phi;
  std::array<VectorXd, 3> psi;
  SolveDiagnostics diagnostics;
};

/// Direct LU is used up to this size; GMRES (unpreconditioned, relative
/// residual 1e-10) above it.
inline constexpr int kDirectSolverLimit = 6000;
/// The single-layer product is streamed without storing V above this size
/// (a dense 22000^2 matrix is 3.9 GB; the adjoint matrix is released first).
inline constexpr int kDenseSingleLayerLimit = 22000;

inline DensitySolution solve_densities(const SurfaceMesh& mesh,
                                       const ContrastParams& params,
                                       const QuadratureConfig& quad = {}) {
  quad.validate();
  const double lambda = params.lambda();  // rejects degenerate contrast
  require_valid(mesh);

  const auto n = static_cast<Eigen::Index>(mesh.triangle_count());
  DenseOperatorMatrix kstar = assemble_adjoint_double_layer(mesh, quad);
  DenseMatrix& A = kstar.values;
  for (Eigen::Index t = 0; t < n; ++t)
    A(t, t) += lambda * mesh.area(static_cast<std::size_t>(t));

  std::array<VectorXd, 3> rhs;
  for (int i = 0; i < 3; ++i) {
    rhs[static_cast<std::size_t>(i)].resize(n);
    for (Eigen::Index t = 0; t < n; ++t) {
      const auto tt = static_cast<std::size_t>(t);
      rhs[static_cast<std::size_t>(i)](t) = mesh.area(tt) * mesh.unit_normal(tt)(i);
    }
  }

  DensitySolution sol;
  sol.mesh = mesh;
  sol.params = params;

  if (n <= kDirectSolverLimit) {
    sol.diagnostics.method = "lu";
    Eigen::PartialPivLU<DenseMatrix> lu(A);
    for (int i = 0; i < 3; ++i) {
      const auto ii = static_cast<std::size_t>(i);
      sol.phi[ii] = lu.solve(rhs[ii]);
      sol.diagnostics.residual[ii] =
          (A * sol.phi[ii] - rhs[ii]).norm() / rhs[ii].norm();
      if (!(sol.diagnostics.residual[ii] <= 1e-10))
        throw SolveError("solve_densities: LU residual " +
                         std::to_string(sol.diagnostics.residual[ii]) +
                         " exceeds 1e-10 (rcond " + std::to_string(lu.rcond()) + ")");
    }
  } else {
    sol.diagnostics.method = "gmres";
    Eigen::GMRES<DenseMatrix, Eigen::IdentityPreconditioner> gmres(A);
    gmres.setTolerance(1e-11);
    gmres.set_restart(300);
    gmres.setMaxIterations(2000);
    for (int i = 0; i < 3; ++i) {
      const auto ii = static_cast<std::size_t>(i);
      sol.phi[ii] = gmres.solve(rhs[ii]);
      sol.diagnostics.iterations[ii] = static_cast<int>(gmres.iterations());
      sol.diagnostics.residual[ii] =
          (A * sol.phi[ii] - rhs[ii]).norm() / rhs[ii].norm();
      if (!(sol.diagnostics.residual[ii] <= 1e-10))
        throw SolveError("solve_densities: GMRES residual " +
                         std::to_string(sol.diagnostics.residual[ii]) +
                         " exceeds 1e-10 after " +
                         std::to_string(gmres.iterations()) + " iterations");
    }
  }
  A.resize(0, 0);

  std::array<VectorXd, 3> v_phi;
  if (n <= kDenseSingleLayerLimit) {
    const DenseOperatorMatrix V = assemble_single_layer(mesh, quad);
    for (int i = 0; i < 3; ++i)
      v_phi[static_cast<std::size_t>(i)] =
          V.values * sol.phi[static_cast<std::size_t>(i)];
  } else {
    v_phi = apply_single_layer(mesh, quad, sol.phi);
  }
  const double scale = 1.0 / (params.r() - 1.0);
  for (int i = 0; i < 3; ++i) {
    const auto ii = static_cast<std::size_t>(i);
    sol.psi[ii].resize(n);
    for (Eigen::Index t = 0; t < n; ++t)
      sol.psi[ii](t) = scale * v_phi[ii](t) / mesh.area(static_cast<std::size_t>(t));
  }
  return sol;
}

enum class TensorFormulation {
  layer_potential,
  boundary_integral,
  weighted,
  analytic,
  reference
};

inline const char* to_string(TensorFormulation f) {
  switch (f) {
    case TensorFormulation::layer_potential: return "lp";
    case TensorFormulation::boundary_integral: return "bi";
    case TensorFormulation::weighted: return "weighted";
    case TensorFormulation::analytic: return "analytic";
    default: return "reference";
  }
}

struct PolarizabilityTensor {
  Mat3 values = Mat3::Zero();  // m^3
  TensorFormulation formulation = TensorFormulation::analytic;
  double alpha = 0;
  double k = 0;
  double beta = std::numeric_limits<double>::quiet_NaN();
  bool symmetrized = false;
};

inline nlohmann::ordered_json to_json(const PolarizabilityTensor& T) {
  nlohmann::ordered_json j;
  auto& rows = j["tensor"] = nlohmann::json::array();
  for (int i = 0; i < 3; ++i)
    rows.push_back({T.values(i, 0), T.values(i, 1), T.values(i, 2)});
  j["alpha"] = T.alpha;
  j["k"] = T.k;
  if (std::isfinite(T.beta)) j["beta"] = T.beta;
  j["formulation"] = to_string(T.formulation);
  j["symmetrized"] = T.symmetrized;
  return j;
}

/// Layer-potential tensor: T_ij = alpha^3 sum_T phi_i[T] * (centroid_T - z)_j *
/// area_T with exact panel moments. The surface coordinate is measured from an
/// origin z inside the object (its volume centroid); the exact density has
/// zero mean so the continuum value does not depend on z, and anchoring z to
/// the object makes the discrete tensor translation invariant.
inline PolarizabilityTensor lp_tensor(const DensitySolution& sol) {
  PolarizabilityTensor T;
  T.formulation = TensorFormulation::layer_potential;
  T.alpha = sol.params.alpha;
  T.k = sol.params.k;
  const double a3 = std::pow(sol.params.alpha, 3);
  const Vec3 origin = volume_centroid(sol.mesh);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double sum = 0;
      for (std::size_t t = 0; t < sol.mesh.triangle_count(); ++t)
        sum += sol.phi[static_cast<std::size_t>(i)](static_cast<Eigen::Index>(t)) *
               (sol.mesh.centroid(t)(j) - origin(j)) * sol.mesh.area(t);
      T.values(i, j) = a3 * sum;
    }
  return T;
}

/// Boundary-integral tensor built from the volume term and the surface
/// moments of psi_i:
///   T_ij = alpha^3 ( (k-1)|B| delta_ij + ((k-1)^2/k) sum_T psi_i[T] area_T (n_T)_j ).
/// With psi_i = (1/(r-1)) S[phi_i] and r = 1/k this is algebraically identical
/// to the layer-potential tensor in the continuum; the two routes share only
/// the density solve.
inline PolarizabilityTensor bi_tensor(const DensitySolution& sol) {
  PolarizabilityTensor T;
  T.formulation = TensorFormulation::boundary_integral;
  T.alpha = sol.params.alpha;
  T.k = sol.params.k;
  const double k = sol.params.k;
  const double a3 = std::pow(sol.params.alpha, 3);
  const double volume = enclosed_volume(sol.mesh);
  const double moment_scale = (k - 1.0) * (k - 1.0) / k;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double sum = 0;
      for (std::size_t t = 0; t < sol.mesh.triangle_count(); ++t)
        sum += sol.psi[static_cast<std::size_t>(i)](static_cast<Eigen::Index>(t)) *
               sol.mesh.area(t) * sol.mesh.unit_normal(t)(j);
      T.values(i, j) = a3 * ((k - 1.0) * volume * (i == j ? 1.0 : 0.0) +
                             moment_scale * sum);
    }
  return T;
}

/// Convex combination of the two formulations: beta = 0 gives the
/// layer-potential tensor, beta = 1 the boundary-integral one.
inline PolarizabilityTensor weighted_tensor(const DensitySolution& sol, double beta) {
  if (!(beta >= 0.0 && beta <= 1.0))
    throw ConfigError("weighted_tensor: beta must lie in [0,1]");
  const PolarizabilityTensor lp = lp_tensor(sol);
  const PolarizabilityTensor bi = bi_tensor(sol);
  PolarizabilityTensor T;
  T.formulation = TensorFormulation::weighted;
  T.alpha = sol.params.alpha;
  T.k = sol.params.k;
  T.beta = beta;
  T.values = beta * bi.values + (1.0 - beta) * lp.values;
  return T;
}

inline PolarizabilityTensor symmetrize(const PolarizabilityTensor& T) {
  PolarizabilityTensor out = T;
  out.values = 0.5 * (T.values + T.values.transpose()).eval();
  out.symmetrized = true;
  return out;
}

/// Exact sphere tensor 4 pi (k-1)/(k+2) alpha^3 radius^3 I; k = 1 is the
/// valid zero-contrast case here.
inline PolarizabilityTensor analytic_sphere(const ContrastParams& params,
                                            double radius) {
  if (!(radius > 0)) throw ConfigError("analytic_sphere: radius must be positive");
  PolarizabilityTensor T;
  T.formulation = TensorFormulation::analytic;
  T.alpha = params.alpha;
  T.k = params.k;
  T.symmetrized = true;
  const double a3 = std::pow(params.alpha, 3);
  T.values = a3 * std::pow(radius, 3) * 4.0 * M_PI * (params.k - 1.0) /
             (params.k + 2.0) * Mat3::Identity();
  return T;
}

namespace detail {

inline double adaptive_simpson(const std::function<double(double)>& f, double a,
                               double b, double fa, double fm, double fb,
                               double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

inline double adaptive_quadrature(const std::function<double(double)>& f, double a,
                                  double b, double tol) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 48);
}

}  // namespace detail

/// Ellipsoid depolarization factors
///   L_i = (abc/2) int_0^inf ds / ((s + a_i^2) sqrt((s+a^2)(s+b^2)(s+c^2))),
/// computed by adaptive quadrature on a compactified variable. L1+L2+L3 = 1 is
/// enforced as a consistency check.
inline std::array<double, 3> depolarization_factors(double a, double b, double c) {
  if (!(c > 0 && c <= b && b <= a))
    throw ConfigError("depolarization_factors: axes must satisfy 0 < c <= b <= a");
  const std::array<double, 3> axis2 = {a * a, b * b, c * c};
  std::array<double, 3> L{};
  for (int i = 0; i < 3; ++i) {
    // s = t/(1-t) with t = 1-u^2 removes the sqrt endpoint at infinity.
    auto integrand = [&](double u) {
      const double t = 1.0 - u * u;
      if (t >= 1.0) return 0.0;
      const double s = t / (1.0 - t);
      const double root = std::sqrt((s + axis2[0]) * (s + axis2[1]) * (s + axis2[2]));
      const double g = 1.0 / ((s + axis2[static_cast<std::size_t>(i)]) * root) /
                       ((1.0 - t) * (1.0 - t));
      return 2.0 * u * g;
    };
    L[static_cast<std::size_t>(i)] =
        0.5 * a * b * c * detail::adaptive_quadrature(integrand, 0.0, 1.0, 1e-13);
  }
  const double sum = L[0] + L[1] + L[2];
  if (std::abs(sum - 1.0) > 1e-9)
    throw SolveError("depolarization_factors: L1+L2+L3 = " + std::to_string(sum) +
                     " violates the unit-sum identity");
  return L;
}

/// Exact ellipsoid tensor in the principal-axes frame:
///   T = alpha^3 |B| (k-1) diag(1/(1 + L_i (k-1))), |B| = 4 pi a b c / 3.
inline PolarizabilityTensor analytic_ellipsoid(const ContrastParams& params, double a,
                                               double b, double c) {
  const auto L = depolarization_factors(a, b, c);
  PolarizabilityTensor T;
  T.formulation = TensorFormulation::analytic;
  T.alpha = params.alpha;
  T.k = params.k;
  T.symmetrized = true;
  const double volume = 4.0 / 3.0 * M_PI * a * b * c;
  const double a3 = std::pow(params.alpha, 3);
  T.values = Mat3::Zero();
  for (int i = 0; i < 3; ++i)
    T.values(i, i) = a3 * volume * (params.k - 1.0) /
                     (1.0 + L[static_cast<std::size_t>(i)] * (params.k - 1.0));
  return T;
}

/// Leading-order voltage perturbation at x from a small object at z:
/// grad_x G(x,z) . (T grad_u0) with G the free-space Laplace Green's function.
inline double perturbation_leading_order(const PolarizabilityTensor& T, const Vec3& z,
                                         const Vec3& x, const Vec3& grad_u0) {
  const Vec3 d = x - z;
  const double dist = d.norm();
  if (dist == 0)
    throw ConfigError("perturbation_leading_order: observation point equals source");
  const Vec3 grad_g = -d / (4.0 * M_PI * dist * dist * dist);
  return grad_g.dot(T.values * grad_u0);
}

inline double relative_error(const PolarizabilityTensor& T,
                             const PolarizabilityTensor& T_ref) {
  const double ref_norm = T_ref.values.norm();
  if (ref_norm == 0) throw ConfigError("relative_error: zero reference tensor");
  return (T_ref.values - T.values).norm() / ref_norm;
}

inline double off_diagonal_error(const PolarizabilityTensor& T,
                                 const PolarizabilityTensor& T_ref) {
  const double ref_norm = T_ref.values.norm();
  if (ref_norm == 0) throw ConfigError("off_diagonal_error: zero reference tensor");
  Mat3 off = T_ref.values - T.values;
  off.diagonal().setZero();
  return off.norm() / ref_norm;
}

}  // namespace pstbem
