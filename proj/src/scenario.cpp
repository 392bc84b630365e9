#include "gne/scenario.hpp"

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>

#include "gne/errors.hpp"

namespace gne {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(path + ": expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        known = true;
        break;
      }
    if (!known) throw ConfigError(path + "." + it.key() + ": unknown key");
  }
}

const json& require(const json& obj, const std::string& path,
                    const char* key) {
  if (!obj.contains(key))
    throw ConfigError(path + "." + key + ": missing required key");
  return obj.at(key);
}

double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path + ": expected a number");
  return v.get<double>();
}

long as_integer(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw ConfigError(path + ": expected an integer");
  return v.get<long>();
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path + ": expected a string");
  return v.get<std::string>();
}

// number -> broadcast to count entries; array -> exactly count entries.
std::vector<double> number_or_array(const json& v, const std::string& path,
                                    int count) {
  std::vector<double> out;
  if (v.is_number()) {
    out.assign(count, v.get<double>());
  } else if (v.is_array()) {
    if (static_cast<int>(v.size()) != count)
      throw ConfigError(path + ": expected " + std::to_string(count) +
                        " entries, got " + std::to_string(v.size()));
    for (size_t i = 0; i < v.size(); ++i)
      out.push_back(as_number(v[i], path + "[" + std::to_string(i) + "]"));
  } else {
    throw ConfigError(path + ": expected a number or an array");
  }
  return out;
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (size_t i = 0; i < v.size(); ++i) out[i] = v[i];
  return out;
}

// "auto" -> nullopt; otherwise per-agent values, with inversion when the key
// uses the inverse convention.
std::optional<Eigen::VectorXd> parse_steps(const json& obj,
                                           const std::string& path,
                                           const char* direct_key,
                                           const char* inverse_key,
                                           int n_agents) {
  const bool has_direct = obj.contains(direct_key);
  const bool has_inverse = obj.contains(inverse_key);
  if (has_direct && has_inverse)
    throw ConfigError(path + "." + inverse_key + ": conflicts with " +
                      direct_key);
  if (!has_direct && !has_inverse) return std::nullopt;
  const char* key = has_direct ? direct_key : inverse_key;
  const json& v = obj.at(key);
  const std::string key_path = path + "." + key;
  if (v.is_string()) {
    if (as_string(v, key_path) != "auto")
      throw ConfigError(key_path + ": expected a number, array, or \"auto\"");
    return std::nullopt;
  }
  std::vector<double> vals = number_or_array(v, key_path, n_agents);
  for (double& x : vals) {
    if (!(x > 0.0)) throw ConfigError(key_path + ": entries must be > 0");
    if (has_inverse) x = 1.0 / x;
  }
  return to_vector(vals);
}

std::optional<double> parse_scalar_design(const json& obj,
                                          const std::string& path,
                                          const char* direct_key,
                                          const char* inverse_key) {
  const bool has_direct = obj.contains(direct_key);
  const bool has_inverse =
      inverse_key != nullptr && obj.contains(inverse_key);
  if (has_direct && has_inverse)
    throw ConfigError(path + "." + inverse_key + ": conflicts with " +
                      direct_key);
  if (!has_direct && !has_inverse) return std::nullopt;
  const char* key = has_direct ? direct_key : inverse_key;
  const json& v = obj.at(key);
  const std::string key_path = path + "." + key;
  if (v.is_string()) {
    if (as_string(v, key_path) != "auto")
      throw ConfigError(key_path + ": expected a number or \"auto\"");
    return std::nullopt;
  }
  double x = as_number(v, key_path);
  if (!(x > 0.0)) throw ConfigError(key_path + ": must be > 0");
  return has_direct ? x : 1.0 / x;
}

GameSpec parse_game(const json& g) {
  check_keys(g, "game",
             {"kind", "n_agents", "constants", "constant_samples",
              "coefficients", "box", "coupling"});
  GameSpec spec;
  spec.kind = as_string(require(g, "game", "kind"), "game.kind");
  if (spec.kind != "cournot" && spec.kind != "quadratic")
    throw ConfigError("game.kind: expected \"cournot\" or \"quadratic\"");
  spec.n_agents =
      static_cast<int>(as_integer(require(g, "game", "n_agents"),
                                  "game.n_agents"));
  if (spec.n_agents < 2) throw ConfigError("game.n_agents: must be >= 2");

  if (g.contains("constants")) {
    const json& c = g.at("constants");
    check_keys(c, "game.constants",
               {"mu", "lipschitz_fx", "lipschitz_fu", "lipschitz_f"});
    GameConstants k;
    k.mu = as_number(require(c, "game.constants", "mu"), "game.constants.mu");
    k.lipschitz_fx = as_number(require(c, "game.constants", "lipschitz_fx"),
                               "game.constants.lipschitz_fx");
    k.lipschitz_fu = as_number(require(c, "game.constants", "lipschitz_fu"),
                               "game.constants.lipschitz_fu");
    k.lipschitz_f = c.contains("lipschitz_f")
                        ? as_number(c.at("lipschitz_f"),
                                    "game.constants.lipschitz_f")
                        : k.lipschitz_fx + k.lipschitz_fu;
    k.provenance = GameConstants::Provenance::declared;
    spec.constants = k;
  }
  if (g.contains("constant_samples")) {
    spec.constant_samples = static_cast<int>(
        as_integer(g.at("constant_samples"), "game.constant_samples"));
    if (spec.constant_samples < 2)
      throw ConfigError("game.constant_samples: must be >= 2");
  }

  if (spec.kind == "cournot") {
    for (const char* k : {"coefficients", "box", "coupling"})
      if (g.contains(k))
        throw ConfigError(std::string("game.") + k +
                          ": only valid for quadratic games");
    return spec;
  }

  const json& coeffs = require(g, "game", "coefficients");
  if (!coeffs.is_array() ||
      static_cast<int>(coeffs.size()) != spec.n_agents)
    throw ConfigError("game.coefficients: expected one entry per agent");
  for (size_t i = 0; i < coeffs.size(); ++i) {
    const std::string path = "game.coefficients[" + std::to_string(i) + "]";
    check_keys(coeffs[i], path, {"xx", "yy", "xy", "x", "y"});
    QuadraticCoefficients q;
    if (coeffs[i].contains("xx")) q.xx = as_number(coeffs[i]["xx"], path + ".xx");
    if (coeffs[i].contains("yy")) q.yy = as_number(coeffs[i]["yy"], path + ".yy");
    if (coeffs[i].contains("xy")) q.xy = as_number(coeffs[i]["xy"], path + ".xy");
    if (coeffs[i].contains("x")) q.x = as_number(coeffs[i]["x"], path + ".x");
    if (coeffs[i].contains("y")) q.y = as_number(coeffs[i]["y"], path + ".y");
    spec.coefficients.push_back(q);
  }

  const json& box = require(g, "game", "box");
  check_keys(box, "game.box", {"lower", "upper"});
  spec.box_lower = number_or_array(require(box, "game.box", "lower"),
                                   "game.box.lower", spec.n_agents);
  spec.box_upper = number_or_array(require(box, "game.box", "upper"),
                                   "game.box.upper", spec.n_agents);

  const json& coupling = require(g, "game", "coupling");
  check_keys(coupling, "game.coupling", {"rows", "rhs", "rhs_total"});
  spec.coupling_rows = number_or_array(require(coupling, "game.coupling",
                                               "rows"),
                                       "game.coupling.rows", spec.n_agents);
  const bool has_rhs = coupling.contains("rhs");
  const bool has_total = coupling.contains("rhs_total");
  if (has_rhs == has_total)
    throw ConfigError(
        "game.coupling: give exactly one of rhs (per agent) or rhs_total");
  if (has_rhs) {
    spec.coupling_rhs = number_or_array(coupling.at("rhs"),
                                        "game.coupling.rhs", spec.n_agents);
  } else {
    const double total =
        as_number(coupling.at("rhs_total"), "game.coupling.rhs_total");
    spec.coupling_rhs.assign(spec.n_agents, total / spec.n_agents);
  }
  return spec;
}

GraphSpec parse_graph(const json& g, int game_agents) {
  check_keys(g, "graph", {"topology", "n_agents", "edges", "weights"});
  GraphSpec spec;
  spec.topology = topology_from_string(
      as_string(require(g, "graph", "topology"), "graph.topology"));
  spec.n_agents = static_cast<int>(
      as_integer(require(g, "graph", "n_agents"), "graph.n_agents"));
  if (spec.n_agents != game_agents)
    throw ConfigError("graph.n_agents: must match game.n_agents");
  if (g.contains("edges")) {
    if (spec.topology != Topology::edge_list)
      throw ConfigError("graph.edges: only valid with topology edge_list");
    const json& edges = g.at("edges");
    if (!edges.is_array()) throw ConfigError("graph.edges: expected an array");
    for (size_t k = 0; k < edges.size(); ++k) {
      const std::string path = "graph.edges[" + std::to_string(k) + "]";
      const json& e = edges[k];
      if (!e.is_array() || e.size() != 2)
        throw ConfigError(path + ": expected a pair of node ids");
      const long a = as_integer(e[0], path + "[0]");
      const long b = as_integer(e[1], path + "[1]");
      if (a < 1 || a > spec.n_agents || b < 1 || b > spec.n_agents)
        throw ConfigError(path + ": node ids are 1-based up to n_agents");
      spec.edges.emplace_back(static_cast<int>(a - 1),
                              static_cast<int>(b - 1));
    }
  } else if (spec.topology == Topology::edge_list) {
    throw ConfigError("graph.edges: required for topology edge_list");
  }
  if (g.contains("weights")) {
    const json& w = g.at("weights");
    if (!w.is_array()) throw ConfigError("graph.weights: expected an array");
    for (size_t k = 0; k < w.size(); ++k)
      spec.weights.push_back(
          as_number(w[k], "graph.weights[" + std::to_string(k) + "]"));
  }
  return spec;
}

ParamSpec parse_params(const json& p, int n_agents) {
  check_keys(p, "params",
             {"c", "delta", "kappa", "kappa_inv", "tau", "tau_inv", "upsilon",
              "upsilon_inv", "alpha", "alpha_inv", "delta_margin",
              "kappa_fraction"});
  ParamSpec spec;
  spec.consensus_gain = as_number(require(p, "params", "c"), "params.c");
  if (!(spec.consensus_gain > 0.0))
    throw ConfigError("params.c: must be > 0");
  if (p.contains("delta")) {
    const json& v = p.at("delta");
    if (v.is_string()) {
      if (as_string(v, "params.delta") != "auto")
        throw ConfigError("params.delta: expected a number or \"auto\"");
    } else {
      const double d = as_number(v, "params.delta");
      if (!(d > 0.0)) throw ConfigError("params.delta: must be > 0");
      spec.delta = d;
    }
  }
  spec.kappa = parse_scalar_design(p, "params", "kappa", "kappa_inv");
  spec.tau = parse_steps(p, "params", "tau", "tau_inv", n_agents);
  spec.upsilon = parse_steps(p, "params", "upsilon", "upsilon_inv", n_agents);
  spec.alpha = parse_steps(p, "params", "alpha", "alpha_inv", n_agents);
  if (p.contains("delta_margin")) {
    spec.delta_margin = as_number(p.at("delta_margin"), "params.delta_margin");
    if (!(spec.delta_margin > 0.0))
      throw ConfigError("params.delta_margin: must be > 0");
  }
  if (p.contains("kappa_fraction")) {
    spec.kappa_fraction =
        as_number(p.at("kappa_fraction"), "params.kappa_fraction");
    if (!(spec.kappa_fraction > 0.0) || !(spec.kappa_fraction < 1.0))
      throw ConfigError("params.kappa_fraction: must lie in (0, 1)");
  }
  return spec;
}

RunSpec parse_run(const json& r) {
  check_keys(r, "run", {"max_iterations", "tol", "record_every", "seed"});
  RunSpec spec;
  spec.max_iterations =
      as_integer(require(r, "run", "max_iterations"), "run.max_iterations");
  if (spec.max_iterations < 0)
    throw ConfigError("run.max_iterations: must be >= 0");
  if (r.contains("tol")) {
    spec.tol = as_number(r.at("tol"), "run.tol");
    if (spec.tol < 0.0) throw ConfigError("run.tol: must be >= 0");
  }
  if (r.contains("record_every")) {
    spec.record_every = as_integer(r.at("record_every"), "run.record_every");
    if (spec.record_every < 1)
      throw ConfigError("run.record_every: must be >= 1");
  }
  if (r.contains("seed"))
    spec.seed = static_cast<std::uint64_t>(
        as_integer(r.at("seed"), "run.seed"));
  return spec;
}

BaselineSpec parse_baseline(const json& b) {
  check_keys(b, "baseline",
             {"rounds_per_phase", "step", "mixing_eps", "max_updates",
              "record_every"});
  BaselineSpec spec;
  spec.rounds_per_phase = static_cast<int>(
      as_integer(require(b, "baseline", "rounds_per_phase"),
                 "baseline.rounds_per_phase"));
  if (spec.rounds_per_phase < 1)
    throw ConfigError("baseline.rounds_per_phase: must be >= 1");
  spec.step = as_number(require(b, "baseline", "step"), "baseline.step");
  if (!(spec.step > 0.0)) throw ConfigError("baseline.step: must be > 0");
  spec.mixing_eps =
      as_number(require(b, "baseline", "mixing_eps"), "baseline.mixing_eps");
  if (!(spec.mixing_eps > 0.0))
    throw ConfigError("baseline.mixing_eps: must be > 0");
  spec.max_updates =
      as_integer(require(b, "baseline", "max_updates"),
                 "baseline.max_updates");
  if (spec.max_updates < 0)
    throw ConfigError("baseline.max_updates: must be >= 0");
  if (b.contains("record_every")) {
    spec.record_every =
        as_integer(b.at("record_every"), "baseline.record_every");
    if (spec.record_every < 1)
      throw ConfigError("baseline.record_every: must be >= 1");
  }
  return spec;
}

}  // namespace

Scenario parse_scenario(const json& doc, const std::string& name) {
  check_keys(doc, "config",
             {"game", "graph", "params", "run", "baseline", "output_dir",
              "derived"});
  Scenario sc;
  sc.name = name;
  sc.game = parse_game(require(doc, "config", "game"));
  sc.graph = parse_graph(require(doc, "config", "graph"), sc.game.n_agents);
  sc.params = parse_params(require(doc, "config", "params"), sc.game.n_agents);
  sc.run = parse_run(require(doc, "config", "run"));
  if (doc.contains("baseline")) sc.baseline = parse_baseline(doc.at("baseline"));
  if (doc.contains("output_dir"))
    sc.output_dir = as_string(doc.at("output_dir"), "config.output_dir");
  // "derived" is the informational echo emitted with resolved configs; it is
  // accepted so resolved configs round-trip, but never read back.
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open scenario file");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return parse_scenario(doc, std::filesystem::path(path).stem().string());
}

nlohmann::json scenario_to_json(const Scenario& scenario,
                                const AlgorithmParams* resolved) {
  json doc;
  json& g = doc["game"];
  g["kind"] = scenario.game.kind;
  g["n_agents"] = scenario.game.n_agents;
  if (scenario.game.constants) {
    g["constants"] = {{"mu", scenario.game.constants->mu},
                      {"lipschitz_fx", scenario.game.constants->lipschitz_fx},
                      {"lipschitz_fu", scenario.game.constants->lipschitz_fu},
                      {"lipschitz_f", scenario.game.constants->lipschitz_f}};
  } else {
    g["constant_samples"] = scenario.game.constant_samples;
  }
  if (scenario.game.kind == "quadratic") {
    json coeffs = json::array();
    for (const auto& q : scenario.game.coefficients)
      coeffs.push_back({{"xx", q.xx},
                        {"yy", q.yy},
                        {"xy", q.xy},
                        {"x", q.x},
                        {"y", q.y}});
    g["coefficients"] = std::move(coeffs);
    g["box"] = {{"lower", scenario.game.box_lower},
                {"upper", scenario.game.box_upper}};
    g["coupling"] = {{"rows", scenario.game.coupling_rows},
                     {"rhs", scenario.game.coupling_rhs}};
  }

  json& gr = doc["graph"];
  gr["topology"] = topology_to_string(scenario.graph.topology);
  gr["n_agents"] = scenario.graph.n_agents;
  if (scenario.graph.topology == Topology::edge_list) {
    json edges = json::array();
    for (auto& [a, b] : scenario.graph.edges)
      edges.push_back({a + 1, b + 1});
    gr["edges"] = std::move(edges);
  }
  if (!scenario.graph.weights.empty()) gr["weights"] = scenario.graph.weights;

  json& p = doc["params"];
  p["c"] = scenario.params.consensus_gain;
  p["delta_margin"] = scenario.params.delta_margin;
  p["kappa_fraction"] = scenario.params.kappa_fraction;
  auto emit_steps = [&p](const char* key,
                         const std::optional<Eigen::VectorXd>& v) {
    if (!v) {
      p[key] = "auto";
      return;
    }
    std::vector<double> vals(v->data(), v->data() + v->size());
    p[key] = vals;
  };
  if (resolved) {
    p["delta"] = resolved->design_delta;
    p["kappa"] = resolved->estimate_step;
    emit_steps("tau", resolved->tau);
    emit_steps("upsilon", resolved->upsilon);
    emit_steps("alpha", resolved->alpha);
  } else {
    if (scenario.params.delta)
      p["delta"] = *scenario.params.delta;
    else
      p["delta"] = "auto";
    if (scenario.params.kappa)
      p["kappa"] = *scenario.params.kappa;
    else
      p["kappa"] = "auto";
    emit_steps("tau", scenario.params.tau);
    emit_steps("upsilon", scenario.params.upsilon);
    emit_steps("alpha", scenario.params.alpha);
  }

  doc["run"] = {{"max_iterations", scenario.run.max_iterations},
                {"tol", scenario.run.tol},
                {"record_every", scenario.run.record_every},
                {"seed", scenario.run.seed}};
  if (scenario.baseline) {
    doc["baseline"] = {
        {"rounds_per_phase", scenario.baseline->rounds_per_phase},
        {"step", scenario.baseline->step},
        {"mixing_eps", scenario.baseline->mixing_eps},
        {"max_updates", scenario.baseline->max_updates},
        {"record_every", scenario.baseline->record_every}};
  }
  if (!scenario.output_dir.empty()) doc["output_dir"] = scenario.output_dir;
  return doc;
}

AggregativeGame make_game(const GameSpec& spec, std::uint64_t seed) {
  if (spec.kind == "cournot") {
    AggregativeGame game = cournot_instance(spec.n_agents);
    if (spec.constants) game.set_constants(*spec.constants);
    return game;
  }
  if (spec.kind != "quadratic")
    throw ConfigError("game.kind: expected \"cournot\" or \"quadratic\"");
  AggregativeGame game =
      quadratic_game(spec.coefficients, to_vector(spec.box_lower),
                     to_vector(spec.box_upper), spec.coupling_rows,
                     spec.coupling_rhs);
  if (spec.constants) {
    game.set_constants(*spec.constants);
  } else {
    game.set_constants(
        estimate_constants(game, spec.constant_samples, seed).constants);
  }
  return game;
}

CommGraph make_graph(const GraphSpec& spec) {
  const auto* edges =
      spec.topology == Topology::edge_list ? &spec.edges : nullptr;
  const auto* weights = spec.weights.empty() ? nullptr : &spec.weights;
  return build_graph(spec.topology, spec.n_agents, edges, weights);
}

std::string game_fingerprint(const GameSpec& spec) {
  json digest;
  digest["kind"] = spec.kind;
  digest["n_agents"] = spec.n_agents;
  if (spec.kind == "quadratic") {
    json coeffs = json::array();
    for (const auto& q : spec.coefficients)
      coeffs.push_back({q.xx, q.yy, q.xy, q.x, q.y});
    digest["coefficients"] = std::move(coeffs);
    digest["box"] = {spec.box_lower, spec.box_upper};
    digest["coupling"] = {spec.coupling_rows, spec.coupling_rhs};
  }
  return digest.dump();
}

}  // namespace gne
