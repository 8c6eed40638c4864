// pstbench: command-line driver for the polarizability-tensor benchmarks.
//
// Exit codes: 0 success, 2 tolerance failure, 1 error.

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pstbem/pstbem.hpp"

namespace {

using namespace pstbem;

std::vector<double> parse_betas(const std::string& text) {
  std::vector<double> betas;
  if (text.find(':') != std::string::npos) {
    double start = 0, stop = 1, step = 0.1;
    if (std::sscanf(text.c_str(), "%lf:%lf:%lf", &start, &stop, &step) != 3 ||
        step <= 0)
      throw ConfigError("cannot parse beta range '" + text + "' (expected a:b:step)");
    for (double b = start; b <= stop + 1e-12; b += step)
      betas.push_back(std::min(b, stop));
  } else {
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) betas.push_back(std::stod(item));
  }
  return betas;
}

void print_tensor(const PolarizabilityTensor& T) {
  std::printf("tensor (m^3), formulation=%s%s:\n", to_string(T.formulation),
              T.symmetrized ? ", symmetrized" : "");
  for (int i = 0; i < 3; ++i)
    std::printf("  % .17e  % .17e  % .17e\n", T.values(i, 0), T.values(i, 1),
                T.values(i, 2));
}

GeometrySpec parse_geometry(const std::string& name, int resolution, double radius,
                            const std::vector<double>& axes) {
  if (name == "sphere") return GeometrySpec::sphere(radius, resolution);
  if (name == "ellipsoid") {
    if (axes.size() != 3)
      throw ConfigError("ellipsoid needs --axes a,b,c");
    return GeometrySpec::ellipsoid(axes[0], axes[1], axes[2], resolution);
  }
  if (name == "cube") return GeometrySpec::cube(resolution);
  if (name == "lshape") return GeometrySpec::lshape(resolution);
  if (name == "tetrahedron")
    return GeometrySpec::tetrahedron(benchmark_tetrahedron_vertices(), resolution);
  if (name == "key") return GeometrySpec::key(resolution);
  throw ConfigError("unknown geometry '" + name + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Boundary-element computation of polarizability tensors"};
  app.require_subcommand(1);

  // --- list ---------------------------------------------------------------
  auto* cmd_list = app.add_subcommand("list", "List the benchmark cases");

  // --- run ----------------------------------------------------------------
  auto* cmd_run = app.add_subcommand("run", "Run one benchmark case");
  std::string run_case_name, run_mode = "max", run_strategy = "adaptive";
  std::string run_out, run_mesh, run_dump;
  double run_k = -1, run_alpha = -1, run_beta = -1, run_theta = -1;
  long run_max_elements = -1, run_levels = -1;
  bool run_no_timings = false;
  cmd_run->add_option("--case", run_case_name, "Benchmark case name")->required();
  cmd_run->add_option("--k", run_k, "Conductivity contrast");
  cmd_run->add_option("--alpha", run_alpha, "Object scale in metres");
  cmd_run->add_option("--beta", run_beta, "Tensor weight in [0,1]");
  cmd_run->add_option("--theta", run_theta, "Doerfler parameter in (0,1]");
  cmd_run->add_option("--mode", run_mode, "Estimator combination: max|sum");
  cmd_run->add_option("--strategy", run_strategy, "adaptive|uniform");
  cmd_run->add_option("--max-elements", run_max_elements, "Element budget");
  cmd_run->add_option("--levels", run_levels, "Cap on refinement levels");
  cmd_run->add_option("--out", run_out, "Directory for JSON/CSV reports");
  cmd_run->add_option("--mesh", run_mesh, "Initial mesh file (.off/.json)");
  cmd_run->add_option("--dump-matrices", run_dump,
                      "Directory for binary operator dumps per level");
  cmd_run->add_flag("--no-timings", run_no_timings,
                    "Write zero wall-clock columns (deterministic reports)");

  // --- sweep ----------------------------------------------------------------
  auto* cmd_sweep = app.add_subcommand("sweep", "Beta sweep over one case");
  std::string sweep_case_name, sweep_betas = "0:1:0.1", sweep_strategy = "adaptive";
  std::string sweep_out;
  long sweep_levels = -1;
  cmd_sweep->add_option("--case", sweep_case_name, "Benchmark case name")->required();
  cmd_sweep->add_option("--betas", sweep_betas, "Range a:b:step or comma list");
  cmd_sweep->add_option("--strategy", sweep_strategy, "adaptive|uniform");
  cmd_sweep->add_option("--levels", sweep_levels, "Cap on refinement levels");
  cmd_sweep->add_option("--out", sweep_out, "Directory for the sweep CSV");

  // --- mesh ----------------------------------------------------------------
  auto* cmd_mesh = app.add_subcommand("mesh", "Mesh utilities");
  cmd_mesh->require_subcommand(1);

  auto* cmd_make = cmd_mesh->add_subcommand("make", "Build a primitive mesh");
  std::string make_geometry, make_out;
  int make_resolution = 0;
  double make_radius = 1.0;
  std::vector<double> make_axes;
  cmd_make->add_option("--geometry", make_geometry,
                       "sphere|ellipsoid|cube|lshape|tetrahedron|key")
      ->required();
  cmd_make->add_option("--resolution", make_resolution, "Uniform subdivisions");
  cmd_make->add_option("--radius", make_radius, "Sphere radius");
  cmd_make->add_option("--axes", make_axes, "Ellipsoid semi-axes a,b,c")
      ->delimiter(',');
  cmd_make->add_option("--out", make_out, "Output file (.off/.json)")->required();

  auto* cmd_refine = cmd_mesh->add_subcommand("refine", "Uniformly refine a mesh");
  std::string refine_in, refine_out;
  int refine_times = 1;
  cmd_refine->add_option("--in", refine_in, "Input mesh")->required();
  cmd_refine->add_option("--out", refine_out, "Output mesh")->required();
  cmd_refine->add_option("--times", refine_times, "Number of refinements");

  auto* cmd_info = cmd_mesh->add_subcommand("info", "Validate and describe a mesh");
  std::string info_in;
  cmd_info->add_option("--in", info_in, "Input mesh")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*cmd_list) {
      std::printf("%-12s %8s %6s %5s %6s %5s %13s %11s\n", "case", "alpha", "k",
                  "beta", "theta", "mode", "max_elements", "tolerance");
      for (const auto& c : registry())
        std::printf("%-12s %8g %6g %5g %6g %5s %13zu %10g%%\n", c.name.c_str(),
                    c.alpha, c.k, c.beta, c.theta, to_string(c.mode), c.max_elements,
                    100 * c.tolerance);
      return 0;
    }

    if (*cmd_run) {
      BenchmarkCase c = find_case(run_case_name);
      RunOverrides o;
      if (run_k > 0) o.k = run_k;
      if (run_alpha > 0) o.alpha = run_alpha;
      if (run_beta >= 0) o.beta = run_beta;
      if (run_theta > 0) o.theta = run_theta;
      if (run_mode == "sum") o.mode = CombineMode::sum;
      else if (run_mode != "max") throw ConfigError("--mode must be max or sum");
      if (run_strategy == "uniform") o.strategy = RefinementStrategy::uniform;
      else if (run_strategy != "adaptive")
        throw ConfigError("--strategy must be adaptive or uniform");
      if (run_max_elements > 0) o.max_elements = static_cast<std::size_t>(run_max_elements);
      if (run_levels >= 0) o.max_levels = static_cast<int>(run_levels);
      if (!run_mesh.empty()) o.mesh_path = run_mesh;
      o.matrix_dump_dir = run_dump;
      if (!run_dump.empty()) std::filesystem::create_directories(run_dump);

      const RunReport report = run_case(c, o);
      const auto& last = report.history.final_level();
      std::printf("case %s: %zu elements over %zu levels\n", c.name.c_str(),
                  last.elements, report.history.levels.size());
      print_tensor(report.tensor);
      std::printf("E      = %.17e\nE_off  = %.17e\n", report.error, report.error_off);
      for (const auto& check : report.checks)
        std::printf("[%s] %s\n", check.passed ? "pass" : "FAIL",
                    check.description.c_str());
      if (!run_out.empty()) {
        write_report(report, run_out, !run_no_timings);
        std::printf("report written to %s/%s.{json,csv}\n", run_out.c_str(),
                    c.name.c_str());
      }
      return report.tolerance_ok ? 0 : 2;
    }

    if (*cmd_sweep) {
      BenchmarkCase c = find_case(sweep_case_name);
      RunOverrides o;
      if (sweep_levels >= 0) o.max_levels = static_cast<int>(sweep_levels);
      const RefinementStrategy strategy = sweep_strategy == "uniform"
                                              ? RefinementStrategy::uniform
                                              : RefinementStrategy::adaptive;
      const auto betas = parse_betas(sweep_betas);
      const BetaSweepResult sweep = beta_sweep(c, betas, strategy, o);
      std::printf("beta sweep for %s (%s): best beta %.3g\n", c.name.c_str(),
                  to_string(strategy), sweep.best_beta);
      std::ostringstream csv;
      csv.precision(17);
      csv << "level,elements";
      for (double b : sweep.betas) csv << ",E_beta_" << b;
      csv << "\n";
      const auto& first = sweep.histories.front();
      for (std::size_t l = 0; l < first.levels.size(); ++l) {
        csv << first.levels[l].level << "," << first.levels[l].elements;
        for (const auto& h : sweep.histories) csv << "," << *h.levels[l].error;
        csv << "\n";
      }
      std::fputs(csv.str().c_str(), stdout);
      if (!sweep_out.empty()) {
        std::filesystem::create_directories(sweep_out);
        const std::string path = sweep_out + "/sweep_" + c.name + ".csv";
        std::ofstream out(path);
        out << csv.str();
        std::printf("sweep written to %s\n", path.c_str());
      }
      return 0;
    }

    if (*cmd_make) {
      const GeometrySpec spec =
          parse_geometry(make_geometry, make_resolution, make_radius, make_axes);
      const SurfaceMesh mesh = build_primitive(spec);
      export_mesh(mesh, make_out);
      std::printf("%s: %zu vertices, %zu triangles -> %s\n", make_geometry.c_str(),
                  mesh.vertex_count(), mesh.triangle_count(), make_out.c_str());
      return 0;
    }

    if (*cmd_refine) {
      SurfaceMesh mesh = import_mesh(refine_in);
      for (int i = 0; i < refine_times; ++i) mesh = uniform_refine(mesh);
      export_mesh(mesh, refine_out);
      std::printf("refined %d time(s): %zu vertices, %zu triangles -> %s\n",
                  refine_times, mesh.vertex_count(), mesh.triangle_count(),
                  refine_out.c_str());
      return 0;
    }

    if (*cmd_info) {
      SurfaceMesh mesh;
      try {
        mesh = import_mesh(info_in);
      } catch (const MeshError& err) {
        std::printf("invalid mesh: %s\n", err.what());
        return 1;
      }
      const ValidationReport report = validate(mesh);
      std::printf("vertices:  %zu\ntriangles: %zu\n", mesh.vertex_count(),
                  mesh.triangle_count());
      std::printf("area:      %.17g\nvolume:    %.17g\n", surface_area(mesh),
                  enclosed_volume(mesh));
      std::printf("max diameter: %.17g\n", mesh.max_diameter());
      std::printf("valid:     %s\n", report.ok() ? "yes" : "no");
      for (const auto& issue : report.issues)
        std::printf("  issue: %s\n", issue.what.c_str());
      return report.ok() ? 0 : 1;
    }
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 1;
  }
  return 0;
}
