#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include "pstbem/core.hpp"
#include "pstbem/mesh.hpp"
#include "pstbem/pst.hpp"

namespace pstbem {

enum class CombineMode { max, sum };

inline const char* to_string(CombineMode mode) {
  return mode == CombineMode::max ? "max" : "sum";
}

/// Recovery-based (Zienkiewicz-Zhu type) error indicator: the piecewise
/// constant density is compared against its area-weighted vertex recovery
/// extended linearly over each triangle, eta_{i,T} = ||phi*_i - phi_i^h||_{L2(T)}.
inline std::vector<std::array<double, 3>> estimate(const SurfaceMesh& mesh,
                                                   const DensitySolution& sol) {
  if (sol.mesh.fingerprint() != mesh.fingerprint())
    throw SolveError("estimate: density solution does not belong to this mesh");
  const std::size_t n = mesh.triangle_count();
  const std::size_t nv = mesh.vertex_count();

  std::vector<double> weight(nv, 0.0);
  std::array<std::vector<double>, 3> recovered;
  for (auto& r : recovered) r.assign(nv, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    const double area = mesh.area(t);
    for (int k = 0; k < 3; ++k) {
      const auto v = static_cast<std::size_t>(mesh.triangles[t][k]);
      weight[v] += area;
      for (int i = 0; i < 3; ++i)
        recovered[static_cast<std::size_t>(i)][v] +=
            area * sol.phi[static_cast<std::size_t>(i)](static_cast<Eigen::Index>(t));
    }
  }
  for (std::size_t v = 0; v < nv; ++v)
    if (weight[v] > 0)
      for (int i = 0; i < 3; ++i) recovered[static_cast<std::size_t>(i)][v] /= weight[v];

  // Edge-midpoint rule is exact for the quadratic integrand (P1 - P0)^2.
  std::vector<std::array<double, 3>> eta(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double area = mesh.area(t);
    for (int i = 0; i < 3; ++i) {
      const auto ii = static_cast<std::size_t>(i);
      std::array<double, 3> g{};
      for (int k = 0; k < 3; ++k)
        g[static_cast<std::size_t>(k)] =
            recovered[ii][static_cast<std::size_t>(mesh.triangles[t][k])];
      const double phi = sol.phi[ii](static_cast<Eigen::Index>(t));
      double sq = 0;
      for (int k = 0; k < 3; ++k) {
        const double mid =
            0.5 * (g[static_cast<std::size_t>(k)] + g[static_cast<std::size_t>((k + 1) % 3)]) - phi;
        sq += mid * mid;
      }
      eta[t][ii] = std::sqrt(area / 3.0 * sq);
    }
  }
  return eta;
}

/// Elementwise combination across the three solve directions.
inline std::vector<double> combine(const std::vector<std::array<double, 3>>& eta,
                                   CombineMode mode) {
  std::vector<double> out(eta.size());
  for (std::size_t t = 0; t < eta.size(); ++t)
    out[t] = mode == CombineMode::max
                 ? std::max({eta[t][0], eta[t][1], eta[t][2]})
                 : eta[t][0] + eta[t][1] + eta[t][2];
  return out;
}

/// Greedy minimal Doerfler set: the smallest prefix of elements sorted by
/// descending indicator whose squared contributions reach theta * total.
/// Ties break toward the lower element index. An all-zero indicator yields an
/// empty set (convergence), not an error.
inline std::vector<int> mark_dorfler(const std::vector<double>& eta, double theta) {
  if (!(theta > 0.0 && theta <= 1.0))
    throw ConfigError("mark_dorfler: theta must lie in (0,1]");
  for (double e : eta)
    if (!(e >= 0)) throw ConfigError("mark_dorfler: indicators must be non-negative");

  double total = 0;
  for (double e : eta) total += e * e;
  if (total == 0) return {};

  std::vector<int> order(eta.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&eta](int a, int b) {
    return eta[static_cast<std::size_t>(a)] > eta[static_cast<std::size_t>(b)];
  });

  std::vector<int> marked;
  double partial = 0;
  for (int t : order) {
    const double e = eta[static_cast<std::size_t>(t)];
    if (e == 0) break;
    marked.push_back(t);
    partial += e * e;
    if (partial >= theta * total) break;
  }
  return marked;
}

struct AdaptiveConfig {
  double theta = 0.6;  // recommended operating band is 0.4 <= theta <= 0.6
  CombineMode mode = CombineMode::max;
  double beta = 0.4;
  std::size_t max_elements = 25000;
  int max_levels = 30;
  ContrastParams contrast;
  QuadratureConfig quadrature;
  std::optional<Mat3> reference;  // enables the per-level error columns
  std::string matrix_dump_dir;    // dumps V and K* per level when non-empty

  void validate() const {
    if (!(theta > 0.0 && theta <= 1.0))
      throw ConfigError("AdaptiveConfig: theta must lie in (0,1]");
    if (!(beta >= 0.0 && beta <= 1.0))
      throw ConfigError("AdaptiveConfig: beta must lie in [0,1]");
    if (max_levels < 0) throw ConfigError("AdaptiveConfig: max_levels must be >= 0");
    quadrature.validate();
  }
};

struct RefinementLevel {
  int level = 0;
  std::size_t elements = 0;
  std::size_t ndof = 0;  // piecewise constants: equals the element count
  std::array<double, 3> eta_direction{0, 0, 0};
  double eta = 0;
  PolarizabilityTensor tensor_lp;
  PolarizabilityTensor tensor_bi;
  PolarizabilityTensor tensor;  // symmetrised weighted tensor
  std::optional<double> error;
  std::optional<double> error_off;
  double seconds = 0;
};

struct RefinementHistory {
  std::vector<RefinementLevel> levels;
  bool truncated = false;  // element budget stopped the loop before max_levels

  const RefinementLevel& final_level() const {
    if (levels.empty()) throw SolveError("RefinementHistory: empty history");
    return levels.back();
  }
};

namespace detail {

inline void record_level(RefinementLevel& rec, const SurfaceMesh& mesh,
                         const DensitySolution& sol, const AdaptiveConfig& config,
                         const std::vector<std::array<double, 3>>& eta_elems,
                         const std::vector<double>& eta_combined) {
  rec.elements = mesh.triangle_count();
  rec.ndof = mesh.triangle_count();
  rec.tensor_lp = lp_tensor(sol);
  rec.tensor_bi = bi_tensor(sol);
  PolarizabilityTensor weighted;
  weighted.formulation = TensorFormulation::weighted;
  weighted.alpha = sol.params.alpha;
  weighted.k = sol.params.k;
  weighted.beta = config.beta;
  weighted.values =
      config.beta * rec.tensor_bi.values + (1.0 - config.beta) * rec.tensor_lp.values;
  rec.tensor = symmetrize(weighted);

  for (int i = 0; i < 3; ++i) {
    double sq = 0;
    for (const auto& e : eta_elems)
      sq += e[static_cast<std::size_t>(i)] * e[static_cast<std::size_t>(i)];
    rec.eta_direction[static_cast<std::size_t>(i)] = std::sqrt(sq);
  }
  double sq = 0;
  for (double e : eta_combined) sq += e * e;
  rec.eta = std::sqrt(sq);

  if (config.reference) {
    PolarizabilityTensor ref;
    ref.formulation = TensorFormulation::reference;
    ref.values = *config.reference;
    rec.error = relative_error(rec.tensor, ref);
    rec.error_off = off_diagonal_error(rec.tensor, ref);
  }
}

}  // namespace detail

/// Solve -> estimate -> mark -> refine until the element budget or level
/// bound is reached. Every recorded mesh respects the element budget.
inline RefinementHistory adaptive_loop(const SurfaceMesh& initial,
                                       const ContrastParams& params,
                                       const AdaptiveConfig& config) {
  config.validate();
  RefinementHistory history;
  SurfaceMesh mesh = initial;
  for (int level = 0;; ++level) {
    const auto t0 = std::chrono::steady_clock::now();
    DensitySolution sol;
    try {
      sol = solve_densities(mesh, params, config.quadrature);
    } catch (const SolveError& err) {
      throw SolveError("adaptive level " + std::to_string(level) + ": " + err.what());
    }
    if (!config.matrix_dump_dir.empty()) {
      char tag[32];
      std::snprintf(tag, sizeof(tag), "level_%03d", level);
      dump_matrix(assemble_single_layer(mesh, config.quadrature),
                  config.matrix_dump_dir + "/" + tag + "_single_layer.bin");
      dump_matrix(assemble_adjoint_double_layer(mesh, config.quadrature),
                  config.matrix_dump_dir + "/" + tag + "_adjoint_double_layer.bin");
    }
    const auto eta_elems = estimate(mesh, sol);
    const auto eta_combined = combine(eta_elems, config.mode);

    RefinementLevel rec;
    rec.level = level;
    detail::record_level(rec, mesh, sol, config, eta_elems, eta_combined);
    rec.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    history.levels.push_back(rec);

    if (level >= config.max_levels) break;
    if (mesh.triangle_count() >= config.max_elements) {
      history.truncated = true;
      break;
    }
    const auto marked = mark_dorfler(eta_combined, config.theta);
    if (marked.empty()) break;
    SurfaceMesh refined = local_refine(mesh, marked);
    if (refined.triangle_count() > config.max_elements) {
      history.truncated = true;
      break;
    }
    mesh = std::move(refined);
  }
  return history;
}

inline RefinementHistory adaptive_loop(const GeometrySpec& spec,
                                       const ContrastParams& params,
                                       const AdaptiveConfig& config) {
  return adaptive_loop(build_primitive(spec), params, config);
}

}  // namespace pstbem
