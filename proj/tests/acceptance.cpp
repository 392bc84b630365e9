// Acceptance gate: every primary requirement checked at its stated tolerance,
// one PASS/FAIL line each, nonzero exit when anything fails.
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "gne/baseline.hpp"
#include "gne/game.hpp"
#include "gne/graph.hpp"
#include "gne/harness.hpp"
#include "gne/kkt.hpp"
#include "gne/params.hpp"
#include "gne/scenario.hpp"
#include "gne/solver.hpp"
#include "gne/splitting.hpp"

using namespace gne;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(bool ok, const char* name, const std::string& detail) {
  std::printf("%s  %-34s %s\n", ok ? "PASS" : "FAIL", name, detail.c_str());
  if (!ok) ++failures;
}

std::string config_path(const char* name) {
  return std::string(GNE_CONFIG_DIR) + "/" + name;
}

double seconds_since(
    const std::chrono::steady_clock::time_point& start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

std::string format(const char* fmt, ...) {
  char buf[512];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buf, sizeof(buf), fmt, args);
  va_end(args);
  return buf;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

// ---- 1. reference equilibrium against the hand-derived closed form ----
void check_reference() {
  const auto start = std::chrono::steady_clock::now();
  const AggregativeGame game = cournot_instance(20);
  const ReferenceSolution ref = solve_reference_gne(game, 1e-11);
  Eigen::VectorXd want = Eigen::VectorXd::Zero(20);
  for (int i = 0; i < 5; ++i) want[i] = (8.2 - 2.0 * i) / 1.05;
  const double dx = (ref.x - want).lpNorm<Eigen::Infinity>();
  const double dl = std::abs(ref.multiplier[0] - 49.8);
  const double elapsed = seconds_since(start);
  report(dx <= 1e-4 && dl <= 1e-4 && elapsed < 1.0, "reference equilibrium",
         format("|x - x*| = %.3g, |lambda - 49.8| = %.3g (tol 1e-4), %.2fs",
                dx, dl, elapsed));
}

// ---- 2. design constants for both benchmark graphs ----
void check_constants() {
  const auto start = std::chrono::steady_clock::now();
  const double mu_star = restricted_monotonicity_constant(1.0, 1.0, 0.5, 1.0);
  const auto star = cocoercivity_constants(mu_star, 1.0, 1.0, 0.5, 20.0);
  const double fiedler = 2.0 - 2.0 * std::cos(M_PI / 10.0);
  const double mu_ring =
      restricted_monotonicity_constant(1.0, 1.0, 4.0, fiedler);
  const auto ring = cocoercivity_constants(mu_ring, 1.0, 1.0, 4.0, 4.0);
  const bool ok = std::abs(mu_star - 0.1910) <= 5e-4 &&
                  std::abs(1.0 / star.beta - 528.8) <= 0.5 &&
                  std::abs(1.0 / ring.beta - 2326.0) <= 2.0 &&
                  seconds_since(start) < 1.0;
  report(ok, "certified constants",
         format("star mu~ = %.6f (0.1910 +- 5e-4), 1/beta = %.3f "
                "(528.8 +- 0.5); ring 1/beta = %.2f (2326 +- 2)",
                mu_star, 1.0 / star.beta, 1.0 / ring.beta));
}

// ---- 3. graph spectra ----
void check_spectra() {
  const LaplacianOps star(build_graph(Topology::star, 20), 1);
  const LaplacianOps ring(build_graph(Topology::ring, 20), 1);
  const double ring_fiedler = 2.0 - 2.0 * std::cos(M_PI / 10.0);
  const bool ok = std::abs(star.fiedler_value() - 1.0) <= 1e-9 &&
                  std::abs(star.spectral_radius() - 20.0) <= 1e-9 &&
                  std::abs(ring.fiedler_value() - ring_fiedler) <= 1e-6 &&
                  std::abs(ring.spectral_radius() - 4.0) <= 1e-6;
  report(ok, "graph spectra",
         format("star (%.10g, %.10g) vs (1, 20) +- 1e-9; ring (%.10g, %.10g) "
                "vs (%.8f, 4) +- 1e-6",
                star.fiedler_value(), star.spectral_radius(),
                ring.fiedler_value(), ring.spectral_radius(), ring_fiedler));
}

// ---- 4 & 5 & 6 & 7. benchmark runs and their operator-level checks ----
struct BenchmarkRuns {
  ReportBundle star, ring, ring_x10;
};

BenchmarkRuns check_benchmarks(const fs::path& out_base) {
  BenchmarkRuns runs;
  struct Job {
    const char* config;
    ReportBundle* slot;
  };
  Job jobs[] = {{"star20.cfg", &runs.star},
                {"ring20.cfg", &runs.ring},
                {"ring20_x10.cfg", &runs.ring_x10}};
  bool ok = true;
  std::string detail;
  for (const Job& job : jobs) {
    const auto start = std::chrono::steady_clock::now();
    const Scenario sc = load_scenario(config_path(job.config));
    *job.slot = run_scenario(sc, (out_base / sc.name).string());
    const double elapsed = seconds_since(start);
    const SummaryStats& s = job.slot->stats;
    const bool this_ok = s.final_error_pct && *s.final_error_pct < 1.0 &&
                         s.final_kkt < 1e-3 && elapsed < 30.0;
    if (!detail.empty()) detail += "; ";
    detail += format("%s %.4f%%/kkt %.2g/%.1fs", job.slot->scenario.name.c_str(),
                     s.final_error_pct ? *s.final_error_pct : -1.0, s.final_kkt,
                     elapsed);
    ok = ok && this_ok;
  }
  report(ok, "benchmark runs",
         "error < 1%, kkt < 1e-3, < 30s each: " + detail);

  const auto to_1pct = [](const ReportBundle& b) {
    return b.stats.iterations_to_1pct ? *b.stats.iterations_to_1pct : -1;
  };
  const long st = to_1pct(runs.star), ri = to_1pct(runs.ring),
             rx = to_1pct(runs.ring_x10);
  report(st > 0 && ri > st && rx > 0 && rx < ri, "connectivity ordering",
         format("iterations to 1%%: star %ld < ring %ld; ring x10 %ld < ring",
                st, ri, rx));
  return runs;
}

void check_sigma_invariance(const BenchmarkRuns& runs) {
  const double worst = std::max(
      {runs.star.checks.max_scaled_sigma_gap,
       runs.ring.checks.max_scaled_sigma_gap,
       runs.ring_x10.checks.max_scaled_sigma_gap});
  report(worst <= 1e-10, "aggregate tracking invariant",
         format("max scaled gap %.3g (bound 1e-10)", worst));
}

void check_operator_identities(const BenchmarkRuns& runs) {
  const double incl = std::max({runs.star.checks.max_inclusion_residual,
                                runs.ring.checks.max_inclusion_residual,
                                runs.ring_x10.checks.max_inclusion_residual});
  const double fp = std::max({runs.star.checks.fixed_point_residual,
                              runs.ring.checks.fixed_point_residual,
                              runs.ring_x10.checks.fixed_point_residual});
  const double skew = std::max({runs.star.checks.skew_annihilation,
                                runs.ring.checks.skew_annihilation,
                                runs.ring_x10.checks.skew_annihilation});

  // Reduced sweep vs. full sweep on small games.
  double reduced_gap = 0.0;
  for (int agents : {2, 3, 5}) {
    AggregativeGame game = [&]() -> AggregativeGame {
      if (agents == 2) {
        std::vector<QuadraticCoefficients> coeffs(2);
        coeffs[0].xx = 1.0;
        coeffs[0].x = -2.0;
        coeffs[1].xx = 0.5;
        coeffs[1].xy = 1.0;
        AggregativeGame g = quadratic_game(
            coeffs, Eigen::VectorXd::Zero(2), Eigen::VectorXd::Constant(2, 5.0),
            {1.0, 2.0}, {1.0, 1.0});
        g.set_constants({0.5, 2.0, 1.5, 3.5,
                         GameConstants::Provenance::declared});
        return g;
      }
      return cournot_instance(agents);
    }();
    const CommGraph graph = build_graph(
        agents == 2 ? Topology::path : Topology::star, agents);
    ParamSpec spec;
    spec.consensus_gain = agents == 2 ? 2.0 : 0.5;
    const Certification cert = certify(game, graph, spec);
    const LaplacianOps laplacian(graph, 1);

    Eigen::VectorXd x0 =
        0.5 * (game.box_lower() + game.box_upper());
    x0[0] = game.box_upper()[0];
    NetworkState full = initial_state(game, x0);
    SplitState split = to_split_state(full, game);
    for (int k = 0; k < 10; ++k) {
      full = step(full, game, laplacian, cert.params);
      split = reduced_step(split, game, laplacian, cert.params);
      const Eigen::VectorXd a = pack(to_split_state(full, game));
      const Eigen::VectorXd b = pack(split);
      reduced_gap = std::max(
          reduced_gap, (a - b).lpNorm<Eigen::Infinity>() / (1.0 + a.norm()));
    }
  }

  const bool ok = incl <= 1e-8 && fp <= 1e-10 && reduced_gap <= 1e-10 &&
                  skew <= 1e-10;
  report(ok, "splitting identities",
         format("inclusion %.3g (1e-8), fixed point %.3g (1e-10), reduced map "
                "%.3g (1e-10), skew %.3g (1e-10)",
                incl, fp, reduced_gap, skew));
}

void check_fejer(const BenchmarkRuns& runs) {
  const bool ok = runs.star.checks.fejer_monotone &&
                  runs.ring.checks.fejer_monotone;
  report(ok, "distance monotonicity",
         format("max relative increase: star %.3g, ring %.3g (bound 1e-9)",
                runs.star.checks.max_fejer_violation,
                runs.ring.checks.max_fejer_violation));
}

// ---- 8. certificate generators ----
struct RandomDesign {
  CommGraph graph;
  AggregativeGame game;
  AlgorithmParams params;
  double delta;
};

void check_certificate_generators() {
  std::mt19937_64 rng(2024);
  auto uniform = [&rng](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };

  auto random_design = [&]() -> RandomDesign {
    const int agents = 3 + static_cast<int>(uniform(0.0, 8.0));
    const Topology topo[] = {Topology::star, Topology::ring, Topology::path,
                             Topology::complete};
    CommGraph graph =
        build_graph(topo[static_cast<int>(uniform(0.0, 4.0))], agents);

    std::vector<QuadraticCoefficients> coeffs(agents);
    std::vector<double> rows(agents), rhs(agents, 1.0);
    for (int i = 0; i < agents; ++i) {
      coeffs[i].xx = 1.0;
      rows[i] = uniform(0.2, 3.0);
    }
    AggregativeGame game = quadratic_game(
        coeffs, Eigen::VectorXd::Zero(agents),
        Eigen::VectorXd::Constant(agents, 1.0), rows, rhs);

    const double delta = uniform(10.0, 1000.0);
    const double kappa = uniform(0.05, 0.95) / delta;
    const StepSizeBounds bounds = step_size_bounds(game, graph, delta, kappa);
    AlgorithmParams params;
    params.consensus_gain = 1.0;
    params.estimate_step = kappa;
    params.design_delta = delta;
    params.tau = bounds.tau_max;
    params.upsilon = bounds.upsilon_max;
    params.alpha = bounds.alpha_max;
    for (int i = 0; i < agents; ++i) {
      params.tau[i] *= uniform(0.3, 1.0);
      params.upsilon[i] *= uniform(0.3, 1.0);
      params.alpha[i] *= uniform(0.3, 1.0);
    }
    return {std::move(graph), std::move(game), std::move(params), delta};
  };

  int valid_ok = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const RandomDesign d = random_design();
    const Eigen::MatrixXd phi =
        assemble_precondition_matrix(d.params, d.graph, d.game);
    if (verify_precondition_psd(phi, d.delta).ok) ++valid_ok;
  }

  int violating_rejected = 0;
  for (int trial = 0; trial < 20; ++trial) {
    RandomDesign d = random_design();
    // Push one step family far past its bound; the corresponding diagonal of
    // phi drops below delta, which forces an eigenvalue below it.
    const double scale = uniform(5.0, 20.0);
    if (trial % 2 == 0)
      d.params.upsilon *= scale;
    else
      d.params.alpha *= scale;
    const Eigen::MatrixXd phi =
        assemble_precondition_matrix(d.params, d.graph, d.game);
    if (!verify_precondition_psd(phi, d.delta).ok) ++violating_rejected;
  }

  report(valid_ok == 50 && violating_rejected >= 18, "certificate generators",
         format("%d/50 in-bound designs dominate, %d/20 violating designs "
                "rejected (need 50 and >= 18)",
                valid_ok, violating_rejected));
}

// ---- 9. gossip baseline comparison ----
void check_baseline(const fs::path& out_base) {
  const Scenario sc = load_scenario(config_path("star20_baseline.cfg"));
  const ReportBundle bundle =
      run_scenario(sc, (out_base / sc.name).string());
  const double plateau = bundle.stats.baseline_plateau_pct
                             ? *bundle.stats.baseline_plateau_pct
                             : -1.0;
  const double final_err = *bundle.stats.final_error_pct;
  const bool part1 = plateau > 0.0 && plateau > final_err;

  // Plateau decreases as mixing rounds grow.
  const AggregativeGame game = make_game(sc.game, sc.run.seed);
  const CommGraph graph = make_graph(sc.graph);
  const ReferenceSolution ref = solve_reference_gne(game, 1e-11);
  auto plateau_at = [&](int nu) {
    BaselineOptions options;
    options.rounds_per_phase = nu;
    options.step = sc.baseline->step;
    options.mixing_eps = sc.baseline->mixing_eps;
    options.max_updates = sc.baseline->max_updates;
    options.reference_x = &ref.x;
    const RunTrace trace = baseline_run(game, graph, options);
    double sum = 0.0;
    long count = 0;
    for (size_t k = trace.records.size() - trace.records.size() / 5;
         k < trace.records.size(); ++k) {
      sum += *trace.records[k].normalized_error_pct;
      ++count;
    }
    return sum / count;
  };
  const double p1 = plateau_at(1), p50 = plateau_at(50), p200 = plateau_at(200);
  const bool part2 = p1 > p50 && p50 > p200;
  report(part1 && part2, "gossip baseline",
         format("plateau %.3f%% > final %.2g%%; decreasing in rounds: "
                "%.2f%% (1) > %.3f%% (50) > %.3f%% (200)",
                plateau, final_err, p1, p50, p200));
}

// ---- 10. reproducibility ----
void check_reproducibility(const fs::path& out_base) {
  const Scenario sc = load_scenario(config_path("star20.cfg"));
  run_scenario(sc, (out_base / "repeat_a").string());
  run_scenario(sc, (out_base / "repeat_b").string());
  const std::string a = read_file(out_base / "repeat_a" / "trace_algorithm.csv");
  const std::string b = read_file(out_base / "repeat_b" / "trace_algorithm.csv");
  report(!a.empty() && a == b, "reproducibility",
         format("trace bytes %zu, identical across reruns", a.size()));
}

}  // namespace

int main() {
  const fs::path out_base = fs::temp_directory_path() / "gne_acceptance";
  fs::remove_all(out_base);
  std::printf("acceptance criteria (fixed tolerances)\n");
  try {
    check_reference();
    check_constants();
    check_spectra();
    const BenchmarkRuns runs = check_benchmarks(out_base);
    check_sigma_invariance(runs);
    check_operator_identities(runs);
    check_fejer(runs);
    check_certificate_generators();
    check_baseline(out_base);
    check_reproducibility(out_base);
  } catch (const std::exception& e) {
    std::printf("FAIL  %-34s unexpected exception: %s\n", "acceptance run",
                e.what());
    ++failures;
  }
  std::printf("%d of 11 checks failed\n", failures);
  return failures == 0 ? 0 : 1;
}
