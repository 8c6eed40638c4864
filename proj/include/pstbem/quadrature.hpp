#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "pstbem/core.hpp"

namespace pstbem {

struct GaussPoint1D {
  double x;
  double w;
};

/// Gauss-Legendre rule on [0,1], exact for polynomials of degree 2n-1.
inline std::vector<GaussPoint1D> gauss_legendre(int n) {
  if (n < 1) throw ConfigError("gauss_legendre: order must be >= 1");
  std::vector<GaussPoint1D> rule(static_cast<std::size_t>(n));
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    // Newton iteration on P_n over [-1,1], Chebyshev initial guess.
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule[static_cast<std::size_t>(i)] = {0.5 * (1.0 - x), 0.5 * w};
    rule[static_cast<std::size_t>(n - 1 - i)] = {0.5 * (1.0 + x), 0.5 * w};
  }
  return rule;
}

/// Point in the unit triangle {u >= 0, v >= 0, u + v <= 1}; weights sum to 1/2.
struct TrianglePoint {
  double u;
  double v;
  double w;
};

/// Collapsed tensor-Gauss rule with order^2 points.
inline std::vector<TrianglePoint> triangle_rule(int order) {
  const auto g = gauss_legendre(order);
  std::vector<TrianglePoint> rule;
  rule.reserve(static_cast<std::size_t>(order) * order);
  for (const auto& gi : g)
    for (const auto& gj : g)
      rule.push_back({gi.x, gj.x * (1.0 - gi.x), gi.w * gj.w * (1.0 - gi.x)});
  return rule;
}

enum class PanelRelation { separated, common_vertex, common_edge, coincident };

/// Sauter-Schwab relative-coordinate rule for a singular panel pair. Both
/// point sets live in the unit triangle; weights include all transform
/// Jacobians except the two panel-area factors (total weight 1/4).
struct PairRule {
  struct Node {
    double u1, v1;
    double u2, v2;
    double w;
  };
  std::vector<Node> nodes;
};

namespace detail {

inline PairRule sauter_schwab_coincident(int order) {
  const auto g = gauss_legendre(order);
  PairRule rule;
  rule.nodes.reserve(6u * g.size() * g.size() * g.size() * g.size());
  for (const auto& gx : g)
    for (const auto& g3 : g)
      for (const auto& g2 : g)
        for (const auto& g1 : g) {
          const double xi = gx.x, e1 = g1.x, e2 = g2.x, e3 = g3.x;
          const double w = gx.w * g3.w * g2.w * g1.w * xi * xi * xi * e1 * e1 * e2;
          const double a[6][4] = {
              {xi, xi * (1 - e1 + e1 * e2), xi * (1 - e1 * e2 * e3), xi * (1 - e1)},
              {xi * (1 - e1 * e2 * e3), xi * (1 - e1), xi, xi * (1 - e1 + e1 * e2)},
              {xi, xi * e1 * (1 - e2 + e2 * e3), xi * (1 - e1 * e2), xi * e1 * (1 - e2)},
              {xi * (1 - e1 * e2), xi * e1 * (1 - e2), xi, xi * e1 * (1 - e2 + e2 * e3)},
              {xi * (1 - e1 * e2 * e3), xi * e1 * (1 - e2 * e3), xi, xi * e1 * (1 - e2)},
              {xi, xi * e1 * (1 - e2), xi * (1 - e1 * e2 * e3), xi * e1 * (1 - e2 * e3)}};
          for (const auto& d : a)
            rule.nodes.push_back({d[0] - d[1], d[1], d[2] - d[3], d[3], w});
        }
  return rule;
}

inline PairRule sauter_schwab_edge(int order) {
  const auto g = gauss_legendre(order);
  PairRule rule;
  rule.nodes.reserve(5u * g.size() * g.size() * g.size() * g.size());
  for (const auto& gx : g)
    for (const auto& g3 : g)
      for (const auto& g2 : g)
        for (const auto& g1 : g) {
          const double xi = gx.x, e1 = g1.x, e2 = g2.x, e3 = g3.x;
          const double base = gx.w * g3.w * g2.w * g1.w * xi * xi * xi;
          const double w0 = base * e1 * e1;
          const double w = base * e1 * e1 * e2;
          const double a[5][5] = {
              {xi, xi * e1 * e3, xi * (1 - e1 * e2), xi * e1 * (1 - e2), w0},
              {xi, xi * e1, xi * (1 - e1 * e2 * e3), xi * e1 * e2 * (1 - e3), w},
              {xi * (1 - e1 * e2), xi * e1 * (1 - e2), xi, xi * e1 * e2 * e3, w},
              {xi * (1 - e1 * e2 * e3), xi * e1 * e2 * (1 - e3), xi, xi * e1, w},
              {xi * (1 - e1 * e2 * e3), xi * e1 * (1 - e2 * e3), xi, xi * e1 * e2, w}};
          for (const auto& d : a)
            rule.nodes.push_back({d[0] - d[1], d[1], d[2] - d[3], d[3], d[4]});
        }
  return rule;
}

inline PairRule sauter_schwab_vertex(int order) {
  const auto g = gauss_legendre(order);
  PairRule rule;
  rule.nodes.reserve(2u * g.size() * g.size() * g.size() * g.size());
  for (const auto& gx : g)
    for (const auto& g3 : g)
      for (const auto& g2 : g)
        for (const auto& g1 : g) {
          const double xi = gx.x, e1 = g1.x, e2 = g2.x, e3 = g3.x;
          const double w = gx.w * g3.w * g2.w * g1.w * xi * xi * xi * e2;
          const double a[2][4] = {{xi, xi * e1, xi * e2, xi * e2 * e3},
                                  {xi * e2, xi * e2 * e3, xi, xi * e1}};
          for (const auto& d : a)
            rule.nodes.push_back({d[0] - d[1], d[1], d[2] - d[3], d[3], w});
        }
  return rule;
}

}  // namespace detail

inline PairRule sauter_schwab_rule(PanelRelation relation, int order) {
  if (order < 1) throw ConfigError("sauter_schwab_rule: order must be >= 1");
  switch (relation) {
    case PanelRelation::coincident:
      return detail::sauter_schwab_coincident(order);
    case PanelRelation::common_edge:
      return detail::sauter_schwab_edge(order);
    case PanelRelation::common_vertex:
      return detail::sauter_schwab_vertex(order);
    default:
      throw ConfigError("sauter_schwab_rule: separated pairs use tensor Gauss");
  }
}

struct QuadratureConfig {
  int regular_order = 3;    // tensor-Gauss points per direction on each panel
  int near_order = 10;      // escalated order for close separated pairs
  int singular_order = 4;   // Sauter-Schwab Gauss order per dimension
  double near_threshold = 2.0;  // escalate when centroid distance < threshold * diameter

  void validate() const {
    if (regular_order < 1 || near_order < 1 || singular_order < 1)
      throw ConfigError("QuadratureConfig: orders must be >= 1");
    if (near_threshold < 0) throw ConfigError("QuadratureConfig: threshold must be >= 0");
  }
};

}  // namespace pstbem
