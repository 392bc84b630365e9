// Command-line harness around the solver library: certification, traced runs,
// reference solves, operator-level verification, and run comparison.
#include <CLI11.hpp>
#include <cstdio>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "gne/errors.hpp"
#include "gne/harness.hpp"
#include "gne/scenario.hpp"

namespace {

using namespace gne;

void print_kv(const char* key, double value) {
  std::printf("  %-28s %.12g\n", key, value);
}

void print_flag(const char* key, bool ok) {
  std::printf("  %-28s %s\n", key, ok ? "ok" : "FAIL");
}

int cmd_certify(const std::string& path) {
  const Scenario scenario = load_scenario(path);
  const AggregativeGame game = make_game(scenario.game, scenario.run.seed);
  const CommGraph graph = make_graph(scenario.graph);
  const Certification cert = certify(game, graph, scenario.params);
  const CertificateReport& r = cert.report;
  std::printf("certificate for %s\n", scenario.name.c_str());
  print_kv("mu", r.mu);
  print_kv("lipschitz_fx", r.lipschitz_fx);
  print_kv("lipschitz_fu", r.lipschitz_fu);
  print_kv("fiedler_value", r.fiedler_value);
  print_kv("spectral_radius", r.spectral_radius);
  print_kv("consensus_gain", r.consensus_gain);
  print_kv("min_admissible_gain", r.min_admissible_gain);
  print_kv("restricted_monotonicity", r.restricted_monotonicity);
  print_kv("theta_sq", r.theta_sq);
  print_kv("beta", r.beta);
  print_kv("delta_lower", r.delta_lower);
  print_kv("delta", r.delta);
  print_kv("kappa", r.kappa);
  print_kv("shifted_lambda_min", r.shifted_lambda_min);
  print_flag("gain_ok", r.gain_ok);
  print_flag("delta_ok", r.delta_ok);
  print_flag("kappa_ok", r.kappa_ok);
  print_flag("steps_within_bounds", r.steps_within_bounds);
  print_flag("phi_psd", r.phi_psd);
  std::printf("certificate: %s\n", r.pass() ? "PASS" : "FAIL");
  return r.pass() ? 0 : 2;
}

int cmd_run(const std::string& path, std::string out_dir) {
  const Scenario scenario = load_scenario(path);
  if (out_dir.empty())
    out_dir = scenario.output_dir.empty() ? "out/" + scenario.name
                                          : scenario.output_dir;
  const ReportBundle bundle = run_scenario(scenario, out_dir);
  const SummaryStats& s = bundle.stats;
  std::printf("run %s -> %s\n", scenario.name.c_str(), out_dir.c_str());
  std::printf("  iterations        %ld (%s)\n", s.iterations,
              s.converged ? "converged" : "max iterations");
  if (s.final_error_pct)
    print_kv("final error %", *s.final_error_pct);
  print_kv("final kkt residual", s.final_kkt);
  print_kv("final consensus (u)", s.final_consensus_u);
  print_kv("final consensus (lambda)", s.final_consensus_multiplier);
  if (s.iterations_to_1pct)
    std::printf("  to 1%% error        %ld iterations, %ld comm rounds\n",
                *s.iterations_to_1pct, *s.comm_rounds_to_1pct);
  if (!bundle.certificate_enforced)
    std::printf(
        "  note: pinned parameters outside the certified region (%s)\n",
        bundle.certification.report.pass() ? "" : "certificate FAIL");
  if (s.baseline_plateau_pct)
    std::printf("  baseline plateau   %.6g%% over %ld updates (%ld rounds each)\n",
                *s.baseline_plateau_pct, *s.baseline_updates,
                *s.baseline_comm_rounds_per_update);
  std::printf("  splitting checks   %s\n",
              bundle.checks.pass() ? "PASS" : "FAIL");
  return 0;
}

int cmd_reference(const std::string& path) {
  const Scenario scenario = load_scenario(path);
  const AggregativeGame game = make_game(scenario.game, scenario.run.seed);
  const ReferenceSolution ref = solve_reference_gne(game, 1e-11);
  nlohmann::json doc;
  doc["x"] = std::vector<double>(ref.x.data(), ref.x.data() + ref.x.size());
  doc["multiplier"] = std::vector<double>(
      ref.multiplier.data(), ref.multiplier.data() + ref.multiplier.size());
  doc["active_coupling_rows"] = ref.active_coupling_rows;
  doc["residual"] = ref.residual;
  doc["iterations"] = ref.iterations;
  std::printf("%s\n", doc.dump(2).c_str());
  return 0;
}

int cmd_verify(const std::string& path) {
  const Scenario scenario = load_scenario(path);
  const ReportBundle bundle = execute_scenario(scenario);
  const SplittingChecks& c = bundle.checks;
  std::printf("operator checks for %s\n", scenario.name.c_str());
  std::printf("  %-28s %.12g (bound 1e-8)\n", "inclusion residual",
              c.max_inclusion_residual);
  std::printf("  %-28s %.12g (bound 1e-10)\n", "fixed point residual",
              c.fixed_point_residual);
  std::printf("  %-28s %s (max rel increase %.3g)\n", "fejer monotone",
              c.fejer_monotone ? "ok" : "FAIL", c.max_fejer_violation);
  std::printf("  %-28s %.12g (bound 1e-10)\n", "sigma invariance",
              c.max_scaled_sigma_gap);
  std::printf("  %-28s %.12g >= %.12g: %s\n", "monotonicity probe",
              c.probe_value, c.theory_value, c.probe_ok ? "ok" : "FAIL");
  std::printf("  %-28s %.12g (bound 1e-10)\n", "skew annihilation",
              c.skew_annihilation);
  std::printf("verification: %s\n", c.pass() ? "PASS" : "FAIL");
  if (!c.pass()) throw NumericalError("operator checks failed");
  return 0;
}

int cmd_compare(const std::vector<std::string>& dirs) {
  const CompareReport report = compare_runs(dirs);
  std::printf("%s", report.to_text().c_str());
  return 0;
}

int cmd_spectrum(const std::string& path) {
  const Scenario scenario = load_scenario(path);
  const CommGraph graph = make_graph(scenario.graph);
  const LaplacianOps laplacian(graph, 1);
  std::printf("graph spectrum for %s\n", scenario.name.c_str());
  std::printf("  %-28s %d\n", "nodes", graph.node_count());
  std::printf("  %-28s %zu\n", "edges", graph.edges().size());
  print_kv("max weighted degree", graph.max_degree());
  print_kv("fiedler_value", laplacian.fiedler_value());
  print_kv("spectral_radius", laplacian.spectral_radius());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"distributed equilibrium seeking over communication graphs"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_dir;
  std::vector<std::string> compare_dirs;

  CLI::App* certify =
      app.add_subcommand("certify", "evaluate the step-size certificate");
  certify->add_option("scenario", scenario_path, "scenario file")->required();

  CLI::App* run = app.add_subcommand("run", "run a scenario and write reports");
  run->add_option("scenario", scenario_path, "scenario file")->required();
  run->add_option("-o,--output", out_dir, "output directory");

  CLI::App* reference =
      app.add_subcommand("reference", "solve the reference equilibrium");
  reference->add_option("scenario", scenario_path, "scenario file")->required();

  CLI::App* verify =
      app.add_subcommand("verify", "run the operator-level checks");
  verify->add_option("scenario", scenario_path, "scenario file")->required();

  CLI::App* compare =
      app.add_subcommand("compare", "compare finished run directories");
  compare->add_option("dirs", compare_dirs, "run directories")
      ->required()
      ->expected(2, -1);

  CLI::App* spectrum =
      app.add_subcommand("spectrum", "print graph spectral quantities");
  spectrum->add_option("scenario", scenario_path, "scenario file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (certify->parsed()) return cmd_certify(scenario_path);
    if (run->parsed()) return cmd_run(scenario_path, out_dir);
    if (reference->parsed()) return cmd_reference(scenario_path);
    if (verify->parsed()) return cmd_verify(scenario_path);
    if (compare->parsed()) return cmd_compare(compare_dirs);
    if (spectrum->parsed()) return cmd_spectrum(scenario_path);
  } catch (const gne::CertificationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const gne::NumericalError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const gne::OracleError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
