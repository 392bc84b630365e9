// Multi-round gossip baseline: agents re-average their aggregate and
// multiplier estimates over many mixing rounds between action updates, so
// each action update costs 2*nu neighbor exchanges instead of 2.
#pragma once

#include <Eigen/Dense>

#include "gne/game.hpp"
#include "gne/graph.hpp"
#include "gne/solver.hpp"

namespace gne {

struct MixingMatrix {
  Eigen::MatrixXd w;  // I - eps * L: symmetric, doubly stochastic
};

// Requires 0 < eps and a nonnegative diagonal (eps <= 1/max_degree).
MixingMatrix build_mixing(const CommGraph& graph, double eps);

struct BaselineOptions {
  int rounds_per_phase = 1;   // nu: mixing rounds before each half-update
  double step = 0.01;         // primal and dual step size
  double mixing_eps = 0.0;    // mixing weight; must satisfy build_mixing
  long max_updates = 1000;    // action updates to perform
  long record_every = 1;      // in action updates
  const Eigen::VectorXd* reference_x = nullptr;
};

// Interpreted gossip scheme per action update t:
//   (a) nu mixing rounds on the local multipliers, then a projected dual
//       ascent step on the rescaled local constraint offset,
//   (b) one projected-gradient action step at the local aggregate estimate,
//   (c) nu mixing rounds on the aggregate estimates, then the dynamic
//       tracking correction by the agent's own action change.
// Converges to a neighborhood of the equilibrium whose size shrinks as nu
// grows; exact only in the limit of infinitely many mixing rounds.
RunTrace baseline_run(const AggregativeGame& game, const CommGraph& graph,
                      const BaselineOptions& options);

}  // namespace gne
