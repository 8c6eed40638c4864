#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

#include "pstbem/core.hpp"
#include "pstbem/mesh.hpp"
#include "pstbem/quadrature.hpp"

namespace pstbem {

enum class OperatorKind { single_layer, adjoint_double_layer, mass };

inline const char* to_string(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::single_layer: return "single_layer";
    case OperatorKind::adjoint_double_layer: return "adjoint_double_layer";
    default: return "mass";
  }
}

/// Orientation of the adjoint double-layer kernel relative to
/// (x - y) . n_x / (4 pi |x - y|^3). Calibrated operationally: with this sign
/// the degree-one generalized eigenvalue of (K*, M) on the unit sphere is
/// -1/6, and the solved sphere tensor reproduces 4 pi (k-1)/(k+2) alpha^3 I.
inline constexpr double kAdjointDoubleLayerSign = -1.0;

struct DenseOperatorMatrix {
  OperatorKind kind = OperatorKind::mass;
  DenseMatrix values;
  std::uint64_t mesh_fingerprint = 0;

  int n() const { return static_cast<int>(values.rows()); }
};

inline void require_same_mesh(const DenseOperatorMatrix& mat, const SurfaceMesh& mesh) {
  if (mat.mesh_fingerprint != mesh.fingerprint())
    throw SolveError("operator matrix does not match the mesh (mismatched fingerprint)");
}

inline std::vector<double> panel_areas(const SurfaceMesh& mesh) {
  std::vector<double> areas(mesh.triangle_count());
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) areas[t] = mesh.area(t);
  return areas;
}

inline DenseOperatorMatrix assemble_mass(const SurfaceMesh& mesh) {
  const auto n = static_cast<Eigen::Index>(mesh.triangle_count());
  DenseOperatorMatrix mat;
  mat.kind = OperatorKind::mass;
  mat.mesh_fingerprint = mesh.fingerprint();
  mat.values = DenseMatrix::Zero(n, n);
  for (Eigen::Index t = 0; t < n; ++t)
    mat.values(t, t) = mesh.area(static_cast<std::size_t>(t));
  return mat;
}

namespace detail {

struct Panel {
  std::array<Vec3, 3> corner;
  std::array<int, 3> vertex;
  Vec3 centroid;
  Vec3 normal;  // unit, outward
  double area;
  double diameter;
};

struct PanelPoints {
  std::vector<Vec3> pts;
  std::vector<double> wts;
};

/// Precomputed geometry and quadrature data for one assembly pass.
struct AssemblyContext {
  std::vector<Panel> panels;
  std::vector<TrianglePoint> regular_rule;
  std::vector<TrianglePoint> near_rule;
  PairRule ss_vertex, ss_edge, ss_coincident;
  double near_threshold = 2.0;
  std::vector<PanelPoints> regular_pts;
  std::vector<PanelPoints> near_pts;

  AssemblyContext(const SurfaceMesh& mesh, const QuadratureConfig& quad) {
    quad.validate();
    near_threshold = quad.near_threshold;
    regular_rule = triangle_rule(quad.regular_order);
    near_rule = triangle_rule(quad.near_order);
    ss_vertex = sauter_schwab_rule(PanelRelation::common_vertex, quad.singular_order);
    ss_edge = sauter_schwab_rule(PanelRelation::common_edge, quad.singular_order);
    ss_coincident = sauter_schwab_rule(PanelRelation::coincident, quad.singular_order);

    const std::size_t n = mesh.triangle_count();
    panels.resize(n);
    regular_pts.resize(n);
    near_pts.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
      Panel& p = panels[t];
      p.corner = {mesh.corner(t, 0), mesh.corner(t, 1), mesh.corner(t, 2)};
      p.vertex = mesh.triangles[t];
      p.centroid = mesh.centroid(t);
      p.normal = mesh.unit_normal(t);
      p.area = mesh.area(t);
      p.diameter = mesh.diameter(t);
      map_rule(p, regular_rule, regular_pts[t]);
      map_rule(p, near_rule, near_pts[t]);
    }
  }

  static void map_rule(const Panel& p, const std::vector<TrianglePoint>& rule,
                       PanelPoints& out) {
    out.pts.resize(rule.size());
    out.wts.resize(rule.size());
    const Vec3 e1 = p.corner[1] - p.corner[0];
    const Vec3 e2 = p.corner[2] - p.corner[0];
    for (std::size_t q = 0; q < rule.size(); ++q) {
      out.pts[q] = p.corner[0] + rule[q].u * e1 + rule[q].v * e2;
      out.wts[q] = rule[q].w;
    }
  }

  /// Shared-vertex count plus aligned vertex permutations for the pair rules.
  PanelRelation classify(std::size_t i, std::size_t j, std::array<int, 3>& perm_i,
                         std::array<int, 3>& perm_j) const {
    if (i == j) {
      perm_i = perm_j = {0, 1, 2};
      return PanelRelation::coincident;
    }
    const auto& vi = panels[i].vertex;
    const auto& vj = panels[j].vertex;
    int shared = 0;
    for (int a = 0; a < 3 && shared < 3; ++a)
      for (int b = 0; b < 3; ++b)
        if (vi[a] == vj[b]) {
          perm_i[shared] = a;
          perm_j[shared] = b;
          ++shared;
          break;
        }
    if (shared == 0) return PanelRelation::separated;
    int fill = shared;
    for (int a = 0; a < 3 && fill < 3; ++a) {
      bool used = false;
      for (int s = 0; s < shared; ++s) used |= (perm_i[s] == a);
      if (!used) perm_i[fill++] = a;
    }
    fill = shared;
    for (int b = 0; b < 3 && fill < 3; ++b) {
      bool used = false;
      for (int s = 0; s < shared; ++s) used |= (perm_j[s] == b);
      if (!used) perm_j[fill++] = b;
    }
    if (shared == 1) return PanelRelation::common_vertex;
    if (shared == 2) return PanelRelation::common_edge;
    return PanelRelation::coincident;
  }

  bool is_near(std::size_t i, std::size_t j) const {
    const double d = (panels[i].centroid - panels[j].centroid).norm();
    return d < near_threshold * std::max(panels[i].diameter, panels[j].diameter);
  }

  const PairRule& singular_rule(PanelRelation rel) const {
    switch (rel) {
      case PanelRelation::common_vertex: return ss_vertex;
      case PanelRelation::common_edge: return ss_edge;
      default: return ss_coincident;
    }
  }
};

/// Single-layer pair integral, kernel 1/(4 pi |x - y|).
inline double slp_entry(const AssemblyContext& ctx, std::size_t i, std::size_t j) {
  const Panel& pi = ctx.panels[i];
  const Panel& pj = ctx.panels[j];
  std::array<int, 3> perm_i{}, perm_j{};
  const PanelRelation rel = ctx.classify(i, j, perm_i, perm_j);
  double sum = 0;
  if (rel == PanelRelation::separated) {
    const bool near = ctx.is_near(i, j);
    const PanelPoints& a = near ? ctx.near_pts[i] : ctx.regular_pts[i];
    const PanelPoints& b = near ? ctx.near_pts[j] : ctx.regular_pts[j];
    for (std::size_t p = 0; p < a.pts.size(); ++p) {
      double row = 0;
      for (std::size_t q = 0; q < b.pts.size(); ++q)
        row += b.wts[q] / (b.pts[q] - a.pts[p]).norm();
      sum += a.wts[p] * row;
    }
  } else {
    const PairRule& rule = ctx.singular_rule(rel);
    const Vec3 ai = pi.corner[static_cast<std::size_t>(perm_i[0])];
    const Vec3 bi = pi.corner[static_cast<std::size_t>(perm_i[1])];
    const Vec3 ci = pi.corner[static_cast<std::size_t>(perm_i[2])];
    const Vec3 aj = pj.corner[static_cast<std::size_t>(perm_j[0])];
    const Vec3 bj = pj.corner[static_cast<std::size_t>(perm_j[1])];
    const Vec3 cj = pj.corner[static_cast<std::size_t>(perm_j[2])];
    for (const auto& node : rule.nodes) {
      const Vec3 x = (1 - node.u1 - node.v1) * ai + node.u1 * bi + node.v1 * ci;
      const Vec3 y = (1 - node.u2 - node.v2) * aj + node.u2 * bj + node.v2 * cj;
      sum += node.w / (y - x).norm();
    }
  }
  return sum * (pi.area * pj.area / M_PI);
}

/// Adjoint double-layer pair integrals for both orderings at once:
/// out_ij tests on panel i (kernel sign * (x - y) . n_i), out_ji on panel j.
inline void adlp_entries(const AssemblyContext& ctx, std::size_t i, std::size_t j,
                         double sign, double& out_ij, double& out_ji) {
  const Panel& pi = ctx.panels[i];
  const Panel& pj = ctx.panels[j];
  std::array<int, 3> perm_i{}, perm_j{};
  const PanelRelation rel = ctx.classify(i, j, perm_i, perm_j);
  if (rel == PanelRelation::coincident) {  // flat panel: (x - y) . n_x = 0
    out_ij = out_ji = 0;
    return;
  }
  double sum_ij = 0, sum_ji = 0;
  if (rel == PanelRelation::separated) {
    const bool near = ctx.is_near(i, j);
    const PanelPoints& a = near ? ctx.near_pts[i] : ctx.regular_pts[i];
    const PanelPoints& b = near ? ctx.near_pts[j] : ctx.regular_pts[j];
    for (std::size_t p = 0; p < a.pts.size(); ++p) {
      double rij = 0, rji = 0;
      for (std::size_t q = 0; q < b.pts.size(); ++q) {
        const Vec3 d = b.pts[q] - a.pts[p];
        const double r2 = d.squaredNorm();
        const double inv_r3 = b.wts[q] / (r2 * std::sqrt(r2));
        rij += inv_r3 * d.dot(pi.normal);
        rji -= inv_r3 * d.dot(pj.normal);
      }
      sum_ij += a.wts[p] * rij;
      sum_ji += a.wts[p] * rji;
    }
  } else {
    const PairRule& rule = ctx.singular_rule(rel);
    const Vec3 ai = pi.corner[static_cast<std::size_t>(perm_i[0])];
    const Vec3 bi = pi.corner[static_cast<std::size_t>(perm_i[1])];
    const Vec3 ci = pi.corner[static_cast<std::size_t>(perm_i[2])];
    const Vec3 aj = pj.corner[static_cast<std::size_t>(perm_j[0])];
    const Vec3 bj = pj.corner[static_cast<std::size_t>(perm_j[1])];
    const Vec3 cj = pj.corner[static_cast<std::size_t>(perm_j[2])];
    for (const auto& node : rule.nodes) {
      const Vec3 x = (1 - node.u1 - node.v1) * ai + node.u1 * bi + node.v1 * ci;
      const Vec3 y = (1 - node.u2 - node.v2) * aj + node.u2 * bj + node.v2 * cj;
      const Vec3 d = y - x;
      const double r2 = d.squaredNorm();
      const double inv_r3 = node.w / (r2 * std::sqrt(r2));
      sum_ij += inv_r3 * d.dot(pi.normal);
      sum_ji -= inv_r3 * d.dot(pj.normal);
    }
  }
  // Kernel is written as sign * (x - y) . n_x; the loops accumulate (y - x) . n_x.
  const double scale = -sign * (pi.area * pj.area / M_PI);
  out_ij = scale * sum_ij;
  out_ji = scale * sum_ji;
}

}  // namespace detail

/// Galerkin matrix of the single-layer operator on piecewise constants,
/// V[i][j] = int_Ti int_Tj 1/(4 pi |x-y|) dy dx. Symmetric by construction.
inline DenseOperatorMatrix assemble_single_layer(const SurfaceMesh& mesh,
                                                 const QuadratureConfig& quad) {
  const detail::AssemblyContext ctx(mesh, quad);
  const auto n = static_cast<Eigen::Index>(mesh.triangle_count());
  DenseOperatorMatrix mat;
  mat.kind = OperatorKind::single_layer;
  mat.mesh_fingerprint = mesh.fingerprint();
  mat.values = DenseMatrix::Zero(n, n);
  auto& V = mat.values;
  parallel_for_strided(static_cast<std::size_t>(n), [&](std::size_t i) {
    for (std::size_t j = i; j < static_cast<std::size_t>(n); ++j)
      V(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          detail::slp_entry(ctx, i, j);
  });
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) V(j, i) = V(i, j);
  return mat;
}

/// Galerkin matrix of the adjoint double-layer operator on piecewise
/// constants. Diagonal entries vanish identically on flat panels.
inline DenseOperatorMatrix assemble_adjoint_double_layer(
    const SurfaceMesh& mesh, const QuadratureConfig& quad,
    double sign = kAdjointDoubleLayerSign) {
  const detail::AssemblyContext ctx(mesh, quad);
  const auto n = static_cast<Eigen::Index>(mesh.triangle_count());
  DenseOperatorMatrix mat;
  mat.kind = OperatorKind::adjoint_double_layer;
  mat.mesh_fingerprint = mesh.fingerprint();
  mat.values = DenseMatrix::Zero(n, n);
  auto& K = mat.values;
  parallel_for_strided(static_cast<std::size_t>(n), [&](std::size_t i) {
    for (std::size_t j = i + 1; j < static_cast<std::size_t>(n); ++j) {
      double kij = 0, kji = 0;
      detail::adlp_entries(ctx, i, j, sign, kij, kji);
      K(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = kij;
      K(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = kji;
    }
  });
  return mat;
}

/// Streamed products y_m = V x_m without materialising V; used for the
/// surface projection of the single-layer potential on large meshes.
inline std::array<VectorXd, 3> apply_single_layer(const SurfaceMesh& mesh,
                                                  const QuadratureConfig& quad,
                                                  const std::array<VectorXd, 3>& x) {
  const detail::AssemblyContext ctx(mesh, quad);
  const auto n = static_cast<Eigen::Index>(mesh.triangle_count());
  for (const auto& xm : x)
    if (xm.size() != n) throw SolveError("apply_single_layer: density size mismatch");
  std::array<VectorXd, 3> y{VectorXd::Zero(n), VectorXd::Zero(n), VectorXd::Zero(n)};
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      double acc[3] = {0, 0, 0};
      for (std::size_t j = 0; j < static_cast<std::size_t>(n); ++j) {
        // Same pair orientation as the assembled (symmetric) matrix.
        const double v = detail::slp_entry(ctx, std::min(i, j), std::max(i, j));
        for (int m = 0; m < 3; ++m) acc[m] += v * x[static_cast<std::size_t>(m)](static_cast<Eigen::Index>(j));
      }
      for (int m = 0; m < 3; ++m) y[static_cast<std::size_t>(m)](static_cast<Eigen::Index>(i)) = acc[m];
    }
  });
  return y;
}

/// Pointwise single-layer potential S[phi](x) away from the surface.
inline VectorXd evaluate_single_layer_potential(const SurfaceMesh& mesh,
                                                const VectorXd& density,
                                                const std::vector<Vec3>& points,
                                                const QuadratureConfig& quad = {}) {
  quad.validate();
  if (density.size() != static_cast<Eigen::Index>(mesh.triangle_count()))
    throw SolveError("evaluate_single_layer_potential: density size mismatch");
  const auto regular = triangle_rule(quad.regular_order);
  const auto near = triangle_rule(quad.near_order);
  VectorXd out(static_cast<Eigen::Index>(points.size()));
  for (std::size_t p = 0; p < points.size(); ++p) {
    const Vec3& x = points[p];
    double sum = 0;
    for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
      const double diam = mesh.diameter(t);
      const double dist = (x - mesh.centroid(t)).norm();
      if (dist < diam)
        throw SolveError(
            "evaluate_single_layer_potential: point " + std::to_string(p) +
            " is within the guard distance of the surface; use the Galerkin "
            "on-surface projection instead");
      const auto& rule = dist < quad.near_threshold * diam ? near : regular;
      const Vec3 a = mesh.corner(t, 0);
      const Vec3 e1 = mesh.corner(t, 1) - a;
      const Vec3 e2 = mesh.corner(t, 2) - a;
      double panel = 0;
      for (const auto& node : rule)
        panel += node.w / (a + node.u * e1 + node.v * e2 - x).norm();
      sum += density(static_cast<Eigen::Index>(t)) * panel * mesh.area(t) / (2 * M_PI);
    }
    out(static_cast<Eigen::Index>(p)) = sum;
  }
  return out;
}

/// Binary dump: int64 n, int64 kind, then n*n row-major doubles.
inline void dump_matrix(const DenseOperatorMatrix& mat, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("dump_matrix: cannot open " + path);
  const std::int64_t n = mat.n();
  const std::int64_t kind = static_cast<std::int64_t>(mat.kind);
  out.write(reinterpret_cast<const char*>(&n), sizeof(n));
  out.write(reinterpret_cast<const char*>(&kind), sizeof(kind));
  out.write(reinterpret_cast<const char*>(mat.values.data()),
            static_cast<std::streamsize>(sizeof(double)) * n * n);
  if (!out) throw IoError("dump_matrix: write failed for " + path);
}

}  // namespace pstbem
