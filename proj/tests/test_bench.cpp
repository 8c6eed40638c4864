#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "pstbem/bench.hpp"

using namespace pstbem;

TEST_CASE("registry holds the benchmark cases with symmetric references") {
  const auto cases = registry();
  REQUIRE(cases.size() == 6);
  for (const auto& c : cases) {
    CHECK(c.tolerance > 0);
    CHECK((c.reference - c.reference.transpose()).norm() == 0.0);
    CHECK(c.theta == 0.6);
    CHECK(c.mode == CombineMode::max);
  }

  const BenchmarkCase cube = find_case("cube");
  CHECK(cube.alpha == 0.01);
  CHECK(cube.k == 10.0);
  CHECK(cube.beta == 0.4);
  CHECK(cube.max_elements == 25000);
  CHECK(cube.reference(0, 0) == 2.51110996e-6);
  CHECK(cube.reference(1, 1) == 2.51111340e-6);
  CHECK(cube.reference(2, 2) == 2.51110887e-6);
  CHECK(cube.reference(0, 1) == 0.0);
  CHECK(cube.comment.find("1.92945670e-13") != std::string::npos);

  const BenchmarkCase lshape = find_case("lshape");
  CHECK(lshape.reference(0, 0) == 1.54683606e-4);
  CHECK(lshape.reference(1, 1) == 1.16202896e-4);
  CHECK(lshape.reference(2, 2) == 0.57033981e-4);
  CHECK(lshape.reference(0, 1) == -0.15091553e-4);
  CHECK(lshape.reference(0, 2) == 0.0);
  CHECK(lshape.reference(1, 2) == 0.0);

  const BenchmarkCase tetra = find_case("tetrahedron");
  CHECK(tetra.beta == 0.5);
  CHECK(tetra.reference(0, 0) == doctest::Approx(9.30682676e-5).epsilon(1e-12));
  CHECK(tetra.reference(0, 1) == doctest::Approx(1.12847255e-5).epsilon(1e-12));
  CHECK(tetra.reference(0, 2) == doctest::Approx(-0.76359289e-5).epsilon(1e-12));
  CHECK(tetra.reference(1, 2) == doctest::Approx(0.43032199e-5).epsilon(1e-12));

  const BenchmarkCase key = find_case("key");
  CHECK(key.alpha == 0.001);
  CHECK(key.beta == 0.3);
  CHECK(key.max_elements == 40000);
  CHECK(key.policy == ComparePolicy::diagonal_only);
  CHECK(key.tolerance == 0.10);

  CHECK(find_case("sphere").reference_kind ==
        BenchmarkCase::ReferenceKind::analytic_sphere);
  CHECK_THROWS_AS(find_case("torus"), ConfigError);
}

TEST_CASE("run_case computes the bench errors with the pst operations") {
  BenchmarkCase c = find_case("sphere");
  RunOverrides o;
  o.max_levels = 1;
  const RunReport report = run_case(c, o);
  CHECK(report.history.levels.size() == 2);
  CHECK(report.error ==
        relative_error(report.tensor, c.resolve_reference(ContrastParams(c.k, c.alpha))));
  CHECK(report.error_off ==
        off_diagonal_error(report.tensor,
                           c.resolve_reference(ContrastParams(c.k, c.alpha))));
  CHECK(report.error >= 0);
  CHECK(report.version == kToolVersion);
  CHECK(report.config_echo.at("strategy") == "adaptive");
}

TEST_CASE("run_case rejects a degenerate contrast override before assembly") {
  BenchmarkCase c = find_case("sphere");
  RunOverrides o;
  o.k = 1.0;
  CHECK_THROWS_WITH_AS(run_case(c, o), doctest::Contains("degenerate"), ConfigError);
}

TEST_CASE("uniform strategy quadruples the element count per level") {
  BenchmarkCase c = find_case("sphere");
  RunOverrides o;
  o.strategy = RefinementStrategy::uniform;
  o.max_levels = 2;
  const RunReport report = run_case(c, o);
  REQUIRE(report.history.levels.size() == 3);
  CHECK(report.history.levels[0].elements == 80);
  CHECK(report.history.levels[1].elements == 320);
  CHECK(report.history.levels[2].elements == 1280);
}

TEST_CASE("run_convergence needs two levels and fits a rate") {
  const BenchmarkCase c = find_case("sphere");
  CHECK_THROWS_WITH_AS(run_convergence(c, RefinementStrategy::uniform, 1),
                       doctest::Contains("2 levels"), ConfigError);
  const ConvergenceResult result =
      run_convergence(c, RefinementStrategy::uniform, 3);
  CHECK(result.history.levels.size() == 3);
  CHECK(result.rate.points == 3);
  CHECK(result.rate.order > 0.9);   // observed second-order decay in h
  CHECK(result.rate.order < 3.0);
  CHECK(result.rate.prefactor > 0);
}

TEST_CASE("beta sweep shares one set of solves and reproduces the endpoints") {
  const BenchmarkCase c = find_case("sphere");
  RunOverrides o;
  o.max_levels = 1;
  const BetaSweepResult sweep =
      beta_sweep(c, {0.0, 0.5, 1.0}, RefinementStrategy::uniform, o);
  REQUIRE(sweep.histories.size() == 3);
  for (std::size_t l = 0; l < sweep.histories[0].levels.size(); ++l) {
    const auto& lp = sweep.histories[0].levels[l];
    const auto& bi = sweep.histories[2].levels[l];
    CHECK((lp.tensor.values - symmetrize(lp.tensor_lp).values).norm() == 0.0);
    CHECK((bi.tensor.values - symmetrize(bi.tensor_bi).values).norm() == 0.0);
    CHECK(sweep.histories[0].levels[l].elements ==
          sweep.histories[2].levels[l].elements);
  }
  CHECK(sweep.best_beta >= 0);
  CHECK(sweep.best_beta <= 1);
  CHECK_THROWS_AS(beta_sweep(c, {1.5}, RefinementStrategy::uniform, o), ConfigError);
  CHECK_THROWS_AS(beta_sweep(c, {}, RefinementStrategy::uniform, o), ConfigError);
}

TEST_CASE("reports are deterministic and carry the history schema") {
  BenchmarkCase c = find_case("sphere");
  RunOverrides o;
  o.max_levels = 1;
  const RunReport report = run_case(c, o);

  const auto dir = std::filesystem::temp_directory_path() / "pstbem_report";
  write_report(report, dir.string(), /*include_timings=*/false);

  std::ifstream json_in(dir / "sphere.json");
  REQUIRE(json_in.good());
  nlohmann::json parsed;
  json_in >> parsed;
  CHECK(parsed.at("case") == "sphere");
  CHECK(parsed.at("tensor").at("tensor").size() == 3);
  CHECK(parsed.at("history").size() == report.history.levels.size());
  CHECK(parsed.at("reference").at("formulation") == "analytic");
  for (const auto& row : parsed.at("history")) {
    CHECK(row.contains("level"));
    CHECK(row.contains("elements"));
    CHECK(row.contains("ndof"));
    CHECK(row.contains("eta"));
    CHECK(row.contains("E"));
    CHECK(row.contains("seconds"));
    CHECK(row.at("seconds") == 0.0);
  }

  std::ifstream csv_in(dir / "sphere.csv");
  REQUIRE(csv_in.good());
  std::string header;
  std::getline(csv_in, header);
  CHECK(header == "level,elements,ndof,eta,E,E_off,seconds");
  std::size_t rows = 0;
  for (std::string line; std::getline(csv_in, line);)
    if (!line.empty()) ++rows;
  CHECK(rows == report.history.levels.size());

  // Bitwise determinism of the serialised report (timings zeroed).
  const RunReport again = run_case(c, o);
  CHECK(report_to_json(report, false).dump() == report_to_json(again, false).dump());

  std::filesystem::remove_all(dir);
}

TEST_CASE("zero-level report contains exactly the initial level") {
  BenchmarkCase c = find_case("sphere");
  RunOverrides o;
  o.max_levels = 0;
  const RunReport report = run_case(c, o);
  CHECK(report.history.levels.size() == 1);
  const std::string csv = history_to_csv(report.history);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);  // header + one level
}
