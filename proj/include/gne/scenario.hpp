// Scenario files: strict parsing, resolved-config emission, and construction
// of the game and graph they describe.
#pragma once

#include <cstdint>
#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <string>
#include <vector>

#include "gne/baseline.hpp"
#include "gne/game.hpp"
#include "gne/graph.hpp"
#include "gne/params.hpp"

namespace gne {

struct GameSpec {
  std::string kind;  // "cournot" | "quadratic"
  int n_agents = 0;
  std::optional<GameConstants> constants;  // declared; absent -> estimated
  int constant_samples = 500;              // estimation budget when absent
  // quadratic games only:
  std::vector<QuadraticCoefficients> coefficients;
  std::vector<double> box_lower, box_upper;
  std::vector<double> coupling_rows, coupling_rhs;
};

struct GraphSpec {
  Topology topology = Topology::star;
  int n_agents = 0;
  std::vector<std::pair<int, int>> edges;  // 1-based in files
  std::vector<double> weights;
};

struct RunSpec {
  long max_iterations = 10000;
  double tol = 0.0;
  long record_every = 1;
  std::uint64_t seed = 0;
};

struct BaselineSpec {
  int rounds_per_phase = 1;
  double step = 0.01;
  double mixing_eps = 0.0;
  long max_updates = 1000;
  long record_every = 1;
};

struct Scenario {
  std::string name;  // file stem; used for default output locations
  GameSpec game;
  GraphSpec graph;
  ParamSpec params;
  RunSpec run;
  std::optional<BaselineSpec> baseline;
  std::string output_dir;  // optional default output directory
};

// Parses and validates a scenario file. Unknown keys, missing required keys,
// type mismatches, and cross-section inconsistencies raise ConfigError with
// the offending key path.
Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const nlohmann::json& doc, const std::string& name);

// Serializes a scenario; pass resolved parameters to emit a fully pinned
// config that reproduces the run byte-for-byte.
nlohmann::json scenario_to_json(const Scenario& scenario,
                                const AlgorithmParams* resolved = nullptr);

AggregativeGame make_game(const GameSpec& spec, std::uint64_t seed);
CommGraph make_graph(const GraphSpec& spec);

// Canonical digest of the game section used to refuse cross-game comparisons.
std::string game_fingerprint(const GameSpec& spec);

}  // namespace gne
