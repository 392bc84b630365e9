// Operator-level view of the iteration: forward and skew operator
// evaluations, the preconditioned inclusion residual linking consecutive
// iterates, the reduced sweep on disagreement coordinates, and an empirical
// probe of restricted monotonicity.
#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "gne/game.hpp"
#include "gne/graph.hpp"
#include "gne/params.hpp"
#include "gne/solver.hpp"

namespace gne {

// Reduced coordinates: actions, disagreement part of the estimates,
// auxiliaries, multipliers.
struct SplitState {
  Eigen::VectorXd x, u_perp, z, multiplier;
};

SplitState to_split_state(const NetworkState& state,
                          const AggregativeGame& game);
Eigen::VectorXd pack(const SplitState& s);
SplitState unpack(const Eigen::VectorXd& packed, int agents, int action_dim,
                  int coupling_dim);

// Single-valued forward part evaluated at the current point: extended
// gradients at reconstructed estimates, consensus flow on the disagreement,
// zero on the auxiliaries, multiplier disagreement plus constraint offsets.
Eigen::VectorXd forward_operator(const SplitState& s,
                                 const AggregativeGame& game,
                                 const LaplacianOps& laplacian,
                                 double consensus_gain);

// Skew-symmetric coupling part evaluated at the next point.
Eigen::VectorXd skew_operator(const SplitState& s, const AggregativeGame& game,
                              const LaplacianOps& laplacian);

// Largest violation (infinity norm) of the preconditioned inclusion that
// consecutive iterates must satisfy: the leftover after forward, skew, and
// preconditioned difference terms must lie in the normal cones of the box at
// the next actions and of the nonnegative orthant at the next multipliers,
// and vanish on the estimate and auxiliary blocks.
double fb_inclusion_residual(const SplitState& current, const SplitState& next,
                             const AggregativeGame& game,
                             const LaplacianOps& laplacian,
                             const AlgorithmParams& params,
                             const Eigen::MatrixXd& phi);

// One sweep expressed directly in the reduced coordinates.
SplitState reduced_step(const SplitState& s, const AggregativeGame& game,
                        const LaplacianOps& laplacian,
                        const AlgorithmParams& params);

// Empirical lower bound on the restricted monotonicity constant: minimum
// Rayleigh-type quotient of the forward map over seeded sample pairs against
// consensus-aligned anchors.
double restricted_monotonicity_probe(const AggregativeGame& game,
                                     const CommGraph& graph,
                                     double consensus_gain, int samples,
                                     std::uint64_t seed);

}  // namespace gne
