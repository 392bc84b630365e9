#include "gne/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <random>
#include <set>
#include <sstream>

#include "gne/errors.hpp"
#include "gne/splitting.hpp"

namespace gne {

using nlohmann::json;

namespace {

constexpr const char* kTraceHeader =
    "iter,normalized_error_pct,kkt_residual,consensus_u,consensus_lambda,"
    "sigma_gap,phi_distance";

bool fully_pinned(const ParamSpec& p) {
  return p.delta && p.kappa && p.tau && p.upsilon && p.alpha;
}

std::string failing_checks(const CertificateReport& r) {
  std::string out;
  auto add = [&out](const char* name) {
    if (!out.empty()) out += ", ";
    out += name;
  };
  if (!r.gain_ok) add("consensus gain");
  if (!r.delta_ok) add("delta above 1/(2 beta)");
  if (!r.kappa_ok) add("kappa in (0, 1/delta)");
  if (!r.steps_within_bounds) add("step sizes within bounds");
  if (!r.phi_psd) add("preconditioner dominance");
  return out;
}

// Small fixed probes plus fractions of the horizon; all strictly below the
// iteration cap so a full-length run still captures them.
std::vector<long> snapshot_schedule(long max_iterations) {
  std::set<long> s{0, 1, 2, 10, 100, 1000};
  for (int k = 1; k <= 4; ++k) s.insert(max_iterations * k / 5);
  std::vector<long> out;
  for (long v : s)
    if (v >= 0 && v < max_iterations) out.push_back(v);
  return out;
}

SplittingChecks evaluate_checks(const Scenario& scenario,
                                const AggregativeGame& game,
                                const CommGraph& graph,
                                const Certification& certification,
                                const RunTrace& trace, const PhiMetric& metric,
                                const NetworkState& fixed_point) {
  SplittingChecks checks;
  const LaplacianOps laplacian(graph, game.action_dim());
  const AlgorithmParams& params = certification.params;

  for (const NetworkState& state : trace.snapshots) {
    const NetworkState next = step(state, game, laplacian, params);
    const SplitState cur_s = to_split_state(state, game);
    const SplitState next_s = to_split_state(next, game);
    const double resid = fb_inclusion_residual(cur_s, next_s, game, laplacian,
                                               params, metric.phi);
    const double scale = 1.0 + pack(cur_s).norm();
    checks.max_inclusion_residual =
        std::max(checks.max_inclusion_residual, resid / scale);
  }

  const SplitState fp = to_split_state(fixed_point, game);
  checks.fixed_point_residual =
      fb_inclusion_residual(fp, fp, game, laplacian, params, metric.phi);

  double worst = 0.0;
  const double floor = 1e-300;
  for (size_t k = 1; k < trace.records.size(); ++k) {
    const auto& prev = trace.records[k - 1].phi_distance;
    const auto& cur = trace.records[k].phi_distance;
    if (!prev || !cur) continue;
    worst = std::max(worst, (*cur - *prev) / std::max(*prev, floor));
  }
  checks.max_fejer_violation = worst;
  checks.fejer_monotone = worst <= 1e-9;

  checks.max_scaled_sigma_gap = trace.max_scaled_sigma_gap;

  checks.theory_value = certification.report.restricted_monotonicity;
  checks.probe_value = restricted_monotonicity_probe(
      game, graph, params.consensus_gain, 200, scenario.run.seed + 1);
  checks.probe_ok = checks.probe_value >= checks.theory_value - 1e-6;

  std::mt19937_64 rng(scenario.run.seed + 2);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int agents = game.agent_count();
  const int n = game.action_dim();
  const int m = game.coupling_dim();
  for (int trial = 0; trial < 10; ++trial) {
    SplitState w;
    auto draw = [&rng, &normal](Eigen::Index size) {
      Eigen::VectorXd v(size);
      for (Eigen::Index i = 0; i < size; ++i) v[i] = normal(rng);
      return v;
    };
    w.x = draw(agents * n);
    w.u_perp = draw(agents * n);
    w.z = draw(agents * m);
    w.multiplier = draw(agents * m);
    const Eigen::VectorXd packed = pack(w);
    const Eigen::VectorXd skew = skew_operator(w, game, laplacian);
    const double val =
        std::abs(packed.dot(skew)) / (1.0 + packed.squaredNorm());
    checks.skew_annihilation = std::max(checks.skew_annihilation, val);
  }
  return checks;
}

SummaryStats summarize(const ReportBundle& bundle) {
  SummaryStats stats;
  const RunTrace& trace = bundle.algorithm;
  stats.iterations = trace.iterations;
  stats.converged = trace.status == RunStatus::converged;
  if (!trace.records.empty()) {
    const TraceRecord& last = trace.records.back();
    stats.final_error_pct = last.normalized_error_pct;
    stats.final_kkt = last.kkt_residual;
    stats.final_consensus_u = last.consensus_u;
    stats.final_consensus_multiplier = last.consensus_multiplier;
  }
  for (const TraceRecord& rec : trace.records) {
    if (rec.normalized_error_pct && *rec.normalized_error_pct <= 1.0) {
      stats.iterations_to_1pct = rec.iteration;
      stats.comm_rounds_to_1pct =
          rec.iteration * trace.comm_rounds_per_iteration;
      break;
    }
  }
  if (bundle.baseline) {
    const auto& records = bundle.baseline->records;
    stats.baseline_updates = bundle.baseline->iterations;
    stats.baseline_comm_rounds_per_update =
        bundle.baseline->comm_rounds_per_iteration;
    const size_t tail_start = records.size() - records.size() / 5;
    double sum = 0.0;
    long count = 0;
    for (size_t k = tail_start; k < records.size(); ++k) {
      if (!records[k].normalized_error_pct) continue;
      sum += *records[k].normalized_error_pct;
      ++count;
    }
    if (count > 0) stats.baseline_plateau_pct = sum / count;
  }
  return stats;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

void write_trace_csv(const RunTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError(path + ": cannot open for writing");
  out << kTraceHeader << "\n";
  for (const TraceRecord& rec : trace.records) {
    out << rec.iteration << ',';
    if (rec.normalized_error_pct) out << format_double(*rec.normalized_error_pct);
    out << ',' << format_double(rec.kkt_residual) << ','
        << format_double(rec.consensus_u) << ','
        << format_double(rec.consensus_multiplier) << ','
        << format_double(rec.sigma_gap) << ',';
    if (rec.phi_distance) out << format_double(*rec.phi_distance);
    out << '\n';
  }
}

json certificate_json(const ReportBundle& bundle) {
  const CertificateReport& r = bundle.certification.report;
  const AlgorithmParams& p = bundle.certification.params;
  auto vec = [](const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
  };
  json doc;
  doc["constants"] = {
      {"mu", r.mu},
      {"lipschitz_fx", r.lipschitz_fx},
      {"lipschitz_fu", r.lipschitz_fu},
      {"provenance", r.constants_provenance == GameConstants::Provenance::declared
                         ? "declared"
                         : "estimated"}};
  doc["graph"] = {{"fiedler_value", r.fiedler_value},
                  {"spectral_radius", r.spectral_radius}};
  doc["derived"] = {{"consensus_gain", r.consensus_gain},
                    {"min_admissible_gain", r.min_admissible_gain},
                    {"restricted_monotonicity", r.restricted_monotonicity},
                    {"theta_sq", r.theta_sq},
                    {"beta", r.beta},
                    {"delta_lower", r.delta_lower},
                    {"delta", r.delta},
                    {"kappa", r.kappa},
                    {"kappa_upper", r.kappa_upper}};
  doc["bounds"] = {{"tau_max", vec(r.bounds.tau_max)},
                   {"upsilon_max", vec(r.bounds.upsilon_max)},
                   {"alpha_max", vec(r.bounds.alpha_max)}};
  doc["steps"] = {{"tau", vec(p.tau)},
                  {"upsilon", vec(p.upsilon)},
                  {"alpha", vec(p.alpha)},
                  {"kappa", p.estimate_step},
                  {"delta", p.design_delta}};
  doc["checks"] = {{"gain_ok", r.gain_ok},
                   {"delta_ok", r.delta_ok},
                   {"kappa_ok", r.kappa_ok},
                   {"steps_within_bounds", r.steps_within_bounds},
                   {"phi_psd", r.phi_psd},
                   {"shifted_lambda_min", r.shifted_lambda_min},
                   {"phi_norm", r.phi_norm},
                   {"pass", r.pass()}};
  doc["enforced"] = bundle.certificate_enforced;
  return doc;
}

json reference_json(const ReferenceSolution& ref) {
  json doc;
  doc["x"] = std::vector<double>(ref.x.data(), ref.x.data() + ref.x.size());
  doc["multiplier"] = std::vector<double>(
      ref.multiplier.data(), ref.multiplier.data() + ref.multiplier.size());
  doc["active_coupling_rows"] = ref.active_coupling_rows;
  doc["residual"] = ref.residual;
  doc["iterations"] = ref.iterations;
  return doc;
}

json summary_json(const ReportBundle& bundle) {
  const SummaryStats& s = bundle.stats;
  const SplittingChecks& c = bundle.checks;
  json doc;
  doc["scenario"] = bundle.scenario.name;
  doc["game_fingerprint"] = bundle.fingerprint;
  doc["comm_rounds_per_iteration"] = bundle.algorithm.comm_rounds_per_iteration;
  doc["iterations"] = s.iterations;
  doc["converged"] = s.converged;
  json final_block;
  if (s.final_error_pct) final_block["normalized_error_pct"] = *s.final_error_pct;
  final_block["kkt_residual"] = s.final_kkt;
  final_block["consensus_u"] = s.final_consensus_u;
  final_block["consensus_lambda"] = s.final_consensus_multiplier;
  doc["final"] = final_block;
  if (s.iterations_to_1pct) {
    doc["to_1pct"] = {{"iterations", *s.iterations_to_1pct},
                      {"comm_rounds", *s.comm_rounds_to_1pct}};
  } else {
    doc["to_1pct"] = nullptr;
  }
  doc["splitting_checks"] = {
      {"max_inclusion_residual", c.max_inclusion_residual},
      {"fixed_point_residual", c.fixed_point_residual},
      {"fejer_monotone", c.fejer_monotone},
      {"max_fejer_violation", c.max_fejer_violation},
      {"max_scaled_sigma_gap", c.max_scaled_sigma_gap},
      {"probe_value", c.probe_value},
      {"theory_value", c.theory_value},
      {"probe_ok", c.probe_ok},
      {"skew_annihilation", c.skew_annihilation},
      {"pass", c.pass()}};
  doc["certificate_pass"] = bundle.certification.report.pass();
  doc["certificate_enforced"] = bundle.certificate_enforced;
  if (bundle.baseline) {
    json b;
    b["updates"] = *s.baseline_updates;
    b["comm_rounds_per_update"] = *s.baseline_comm_rounds_per_update;
    if (s.baseline_plateau_pct) b["plateau_pct"] = *s.baseline_plateau_pct;
    doc["baseline"] = b;
  }
  return doc;
}

void write_json(const json& doc, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError(path + ": cannot open for writing");
  out << doc.dump(2) << "\n";
}

struct LoadedBundle {
  std::string label;
  std::string fingerprint;
  long comm_rounds_per_iteration = 2;
  // (iteration, normalized error %) pairs in recording order.
  std::vector<std::pair<long, double>> errors;
};

LoadedBundle load_bundle(const std::string& dir) {
  namespace fs = std::filesystem;
  LoadedBundle bundle;
  bundle.label = dir;

  const std::string summary_path = (fs::path(dir) / "summary.json").string();
  std::ifstream summary_in(summary_path);
  if (!summary_in)
    throw ComparisonError(summary_path + ": cannot open summary");
  json summary;
  try {
    summary = json::parse(summary_in);
  } catch (const json::parse_error& e) {
    throw ComparisonError(summary_path + ": " + e.what());
  }
  if (!summary.contains("game_fingerprint") ||
      !summary.contains("comm_rounds_per_iteration"))
    throw ComparisonError(summary_path + ": not a run summary");
  bundle.fingerprint = summary["game_fingerprint"].get<std::string>();
  bundle.comm_rounds_per_iteration =
      summary["comm_rounds_per_iteration"].get<long>();

  const std::string trace_path =
      (fs::path(dir) / "trace_algorithm.csv").string();
  std::ifstream trace_in(trace_path);
  if (!trace_in) throw ComparisonError(trace_path + ": cannot open trace");
  std::string line;
  if (!std::getline(trace_in, line) || line != kTraceHeader)
    throw ComparisonError(trace_path + ": unexpected trace header");
  while (std::getline(trace_in, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(row, field, ',')) fields.push_back(field);
    // A trailing empty field is dropped by getline; restore it.
    if (!line.empty() && line.back() == ',') fields.push_back("");
    if (fields.size() != 7)
      throw ComparisonError(trace_path + ": malformed row: " + line);
    if (fields[1].empty()) continue;  // no reference error recorded
    bundle.errors.emplace_back(std::stol(fields[0]), std::stod(fields[1]));
  }
  return bundle;
}

}  // namespace

ReportBundle execute_scenario(const Scenario& scenario) {
  ReportBundle bundle;
  bundle.scenario = scenario;
  bundle.fingerprint = game_fingerprint(scenario.game);

  const AggregativeGame game = make_game(scenario.game, scenario.run.seed);
  const CommGraph graph = make_graph(scenario.graph);

  bundle.certification = certify(game, graph, scenario.params);
  if (!bundle.certification.report.pass()) {
    if (!fully_pinned(scenario.params))
      throw CertificationError(
          "certificate failed (" + failing_checks(bundle.certification.report) +
          "); pin every design quantity to run outside the certified region");
    bundle.certificate_enforced = false;
  }

  bundle.reference = solve_reference_gne(game, 1e-11);

  PhiMetric metric;
  metric.phi = assemble_precondition_matrix(bundle.certification.params, graph,
                                            game);
  const NetworkState fixed_point =
      build_fixed_point(game, graph, bundle.reference);
  metric.fixed_point = pack_split_coordinates(fixed_point, game);

  RunOptions options;
  options.max_iterations = scenario.run.max_iterations;
  options.tol = scenario.run.tol;
  options.record_every = scenario.run.record_every;
  options.reference_x = &bundle.reference.x;
  options.metric = &metric;
  options.snapshots = snapshot_schedule(scenario.run.max_iterations);
  bundle.algorithm =
      run(game, graph, bundle.certification.params, options);

  bundle.checks = evaluate_checks(scenario, game, graph, bundle.certification,
                                  bundle.algorithm, metric, fixed_point);

  if (scenario.baseline) {
    BaselineOptions opts;
    opts.rounds_per_phase = scenario.baseline->rounds_per_phase;
    opts.step = scenario.baseline->step;
    opts.mixing_eps = scenario.baseline->mixing_eps;
    opts.max_updates = scenario.baseline->max_updates;
    opts.record_every = scenario.baseline->record_every;
    opts.reference_x = &bundle.reference.x;
    bundle.baseline = baseline_run(game, graph, opts);
  }

  bundle.stats = summarize(bundle);
  return bundle;
}

void write_bundle(const ReportBundle& bundle, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);

  json resolved =
      scenario_to_json(bundle.scenario, &bundle.certification.params);
  // Informational echo; parsers accept and ignore it.
  const CertificateReport& report = bundle.certification.report;
  resolved["derived"] = {{"restricted_monotonicity",
                          report.restricted_monotonicity},
                         {"beta", report.beta},
                         {"delta_lower", report.delta_lower},
                         {"certificate_pass", report.pass()}};
  write_json(resolved, (dir / "resolved_config.cfg").string());
  write_json(certificate_json(bundle), (dir / "certificate.json").string());
  write_json(reference_json(bundle.reference),
             (dir / "reference.json").string());
  write_trace_csv(bundle.algorithm, (dir / "trace_algorithm.csv").string());
  if (bundle.baseline)
    write_trace_csv(*bundle.baseline, (dir / "trace_baseline.csv").string());
  write_json(summary_json(bundle), (dir / "summary.json").string());
}

ReportBundle run_scenario(const Scenario& scenario,
                          const std::string& out_dir) {
  ReportBundle bundle = execute_scenario(scenario);
  write_bundle(bundle, out_dir);
  return bundle;
}

std::string CompareReport::to_text() const {
  std::ostringstream out;
  out << "comm rounds to reach normalized error thresholds\n";
  size_t width = 24;
  for (const CompareRow& row : rows) width = std::max(width, row.label.size() + 2);
  out << std::string(width, ' ');
  for (double t : thresholds_pct) {
    char head[32];
    std::snprintf(head, sizeof(head), "%10.0f%%", t);
    out << head;
  }
  out << "\n";
  for (const CompareRow& row : rows) {
    out << row.label << std::string(width - row.label.size(), ' ');
    for (size_t k = 0; k < thresholds_pct.size(); ++k) {
      char cell[32];
      if (row.rounds_to[k])
        std::snprintf(cell, sizeof(cell), "%11ld", *row.rounds_to[k]);
      else
        std::snprintf(cell, sizeof(cell), "%11s", "-");
      out << cell;
    }
    out << "\n";
    if (&row == &rows.front()) continue;
    out << "  vs first" << std::string(width - 10, ' ');
    for (size_t k = 0; k < thresholds_pct.size(); ++k) {
      char cell[32];
      if (row.delta_vs_first[k])
        std::snprintf(cell, sizeof(cell), "%+11ld", *row.delta_vs_first[k]);
      else
        std::snprintf(cell, sizeof(cell), "%11s", "-");
      out << cell;
    }
    out << "\n";
  }
  return out.str();
}

CompareReport compare_runs(const std::vector<std::string>& dirs) {
  if (dirs.size() < 2)
    throw ComparisonError("compare needs at least two run directories");
  CompareReport report;
  std::vector<LoadedBundle> bundles;
  for (const std::string& dir : dirs) bundles.push_back(load_bundle(dir));
  for (size_t k = 1; k < bundles.size(); ++k) {
    if (bundles[k].fingerprint != bundles[0].fingerprint)
      throw ComparisonError(bundles[k].label +
                            ": game differs from " + bundles[0].label +
                            "; runs are not comparable");
  }
  for (const LoadedBundle& bundle : bundles) {
    CompareRow row;
    row.label = bundle.label;
    row.comm_rounds_per_iteration = bundle.comm_rounds_per_iteration;
    for (double threshold : report.thresholds_pct) {
      std::optional<long> rounds;
      for (const auto& [iter, err] : bundle.errors) {
        if (err <= threshold) {
          rounds = iter * bundle.comm_rounds_per_iteration;
          break;
        }
      }
      row.rounds_to.push_back(rounds);
    }
    row.delta_vs_first.resize(report.thresholds_pct.size());
    report.rows.push_back(std::move(row));
  }
  for (size_t k = 0; k < report.rows.size(); ++k) {
    for (size_t t = 0; t < report.thresholds_pct.size(); ++t) {
      const auto& first = report.rows[0].rounds_to[t];
      const auto& own = report.rows[k].rounds_to[t];
      if (first && own) report.rows[k].delta_vs_first[t] = *own - *first;
    }
  }
  return report;
}

}  // namespace gne
