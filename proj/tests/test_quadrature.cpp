#include <doctest.h>

#include <cmath>

#include "pstbem/quadrature.hpp"

using namespace pstbem;

TEST_CASE("gauss_legendre integrates monomials exactly") {
  for (int n : {1, 2, 3, 4, 6, 8, 12, 16}) {
    const auto rule = gauss_legendre(n);
    double wsum = 0;
    for (const auto& g : rule) wsum += g.w;
    CHECK(wsum == doctest::Approx(1.0).epsilon(1e-14));
    for (int k = 0; k <= 2 * n - 1; ++k) {
      double sum = 0;
      for (const auto& g : rule) sum += g.w * std::pow(g.x, k);
      CHECK(sum == doctest::Approx(1.0 / (k + 1)).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(gauss_legendre(0), ConfigError);
}

TEST_CASE("triangle rule weight and moments") {
  // int over {u,v >= 0, u+v <= 1} of u^p v^q = p! q! / (p+q+2)!
  auto moment = [](int p, int q) {
    double num = 1, den = 1;
    for (int i = 2; i <= p; ++i) num *= i;
    for (int i = 2; i <= q; ++i) num *= i;
    for (int i = 2; i <= p + q + 2; ++i) den *= i;
    return num / den;
  };
  for (int order : {3, 4, 6}) {
    const auto rule = triangle_rule(order);
    CHECK(rule.size() == static_cast<std::size_t>(order * order));
    for (int p = 0; p <= 2; ++p)
      for (int q = 0; q <= 2; ++q) {
        double sum = 0;
        for (const auto& node : rule) sum += node.w * std::pow(node.u, p) * std::pow(node.v, q);
        CHECK(sum == doctest::Approx(moment(p, q)).epsilon(1e-12));
      }
  }
}

TEST_CASE("sauter-schwab total weights equal 1/4") {
  for (int order : {2, 3, 4}) {
    for (auto rel : {PanelRelation::coincident, PanelRelation::common_edge,
                     PanelRelation::common_vertex}) {
      const auto rule = sauter_schwab_rule(rel, order);
      double sum = 0;
      for (const auto& node : rule.nodes) {
        sum += node.w;
        CHECK(node.u1 >= -1e-14);
        CHECK(node.v1 >= -1e-14);
        CHECK(node.u1 + node.v1 <= 1 + 1e-14);
        CHECK(node.u2 >= -1e-14);
        CHECK(node.v2 >= -1e-14);
        CHECK(node.u2 + node.v2 <= 1 + 1e-14);
      }
      CHECK(sum == doctest::Approx(0.25).epsilon(1e-13));
    }
  }
  CHECK_THROWS_AS(sauter_schwab_rule(PanelRelation::separated, 4), ConfigError);
}

TEST_CASE("sauter-schwab rules integrate a smooth pair integrand") {
  // f(x,y) = (1 + u1 + v2) over two reference triangles; exact value by the
  // product of triangle moments: int 1 = 1/4, int u1 = 1/6 * 1/2, int v2 same.
  const double exact = 0.25 + 2.0 * (1.0 / 6.0) * 0.5;
  for (auto rel : {PanelRelation::coincident, PanelRelation::common_edge,
                   PanelRelation::common_vertex}) {
    const auto rule = sauter_schwab_rule(rel, 8);
    double sum = 0;
    for (const auto& node : rule.nodes) sum += node.w * (1.0 + node.u1 + node.v2);
    CHECK(sum == doctest::Approx(exact).epsilon(1e-10));
  }
}

TEST_CASE("quadrature config validation") {
  QuadratureConfig quad;
  quad.validate();
  quad.regular_order = 0;
  CHECK_THROWS_AS(quad.validate(), ConfigError);
}
