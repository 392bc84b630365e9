// Distributed equilibrium-seeking iteration: network state, one-sweep update,
// run loop with trace recording, residual metrics, fixed-point construction.
#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "gne/game.hpp"
#include "gne/graph.hpp"
#include "gne/kkt.hpp"
#include "gne/params.hpp"

namespace gne {

// Stacked per-agent quantities: actions x (Nn), aggregate estimates u (Nn),
// auxiliary consensus variables z (Nm), local multipliers (Nm).
struct NetworkState {
  Eigen::VectorXd x, u, z, multiplier;
  long iteration = 0;
};

struct TraceRecord {
  long iteration = 0;
  std::optional<double> normalized_error_pct;  // 100 ||x - x*|| / ||x*||
  double kkt_residual = 0.0;      // at (x, average multiplier)
  double consensus_u = 0.0;       // max_i ||u_i - sigma(x)||
  double consensus_multiplier = 0.0;  // max pairwise multiplier gap
  double sigma_gap = 0.0;         // ||sigma(u) - sigma(x)||
  std::optional<double> phi_distance;  // distance to the fixed point
};

enum class RunStatus { converged, max_iterations };

struct RunTrace {
  std::vector<TraceRecord> records;
  RunStatus status = RunStatus::max_iterations;
  NetworkState final_state;
  long iterations = 0;
  int comm_rounds_per_iteration = 2;
  // Largest sigma-consistency gap seen at any iterate, scaled by 1/(1+||x||).
  double max_scaled_sigma_gap = 0.0;
  // States captured at the iterations requested in RunOptions::snapshots.
  std::vector<NetworkState> snapshots;
};

// Distance measure induced by the preconditioning matrix, anchored at a
// packed fixed point (see pack_split_coordinates).
struct PhiMetric {
  Eigen::MatrixXd phi;
  Eigen::VectorXd fixed_point;
};

struct RunOptions {
  long max_iterations = 10000;
  // When > 0, stop once kkt + consensus_u + consensus_multiplier < tol at a
  // recorded iterate.
  double tol = 0.0;
  long record_every = 1;
  std::optional<Eigen::VectorXd> x0;  // default: box projection of 0
  const Eigen::VectorXd* reference_x = nullptr;
  const PhiMetric* metric = nullptr;
  std::vector<long> snapshots;  // iterations whose states to capture
};

Eigen::VectorXd project_box(const Eigen::VectorXd& v, const Eigen::VectorXd& lo,
                            const Eigen::VectorXd& hi);
Eigen::VectorXd project_nonneg(const Eigen::VectorXd& v);

// x0 projected onto the box, estimates seeded at the actions, auxiliaries and
// multipliers at zero.
NetworkState initial_state(const AggregativeGame& game,
                           const std::optional<Eigen::VectorXd>& x0);

// One synchronous sweep: actions, then estimates, then auxiliaries, then
// multipliers, using two neighbor exchanges per sweep.
NetworkState step(const NetworkState& state, const AggregativeGame& game,
                  const LaplacianOps& laplacian, const AlgorithmParams& params);

// All trace metrics at one state.
TraceRecord residuals(const NetworkState& state, const AggregativeGame& game,
                      const Eigen::VectorXd* reference_x = nullptr,
                      const PhiMetric* metric = nullptr);

RunTrace run(const AggregativeGame& game, const CommGraph& graph,
             const AlgorithmParams& params, const RunOptions& options);

// Stacks (x, perp of u, z, multiplier) into one vector, the coordinates the
// preconditioning matrix acts on.
Eigen::VectorXd pack_split_coordinates(const NetworkState& state,
                                       const AggregativeGame& game);

double phi_distance(const PhiMetric& metric, const NetworkState& state,
                    const AggregativeGame& game);

// Network state whose actions and multipliers replicate the reference
// equilibrium, with estimates at the true average and auxiliaries given by
// the least-squares consensus correction for the constraint offsets.
NetworkState build_fixed_point(const AggregativeGame& game,
                               const CommGraph& graph,
                               const ReferenceSolution& reference);

}  // namespace gne
