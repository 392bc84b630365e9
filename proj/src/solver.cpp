#include "gne/solver.hpp"

#include <algorithm>
#include <cmath>

#include "gne/errors.hpp"

namespace gne {

namespace {

// Expands per-agent scalars to per-coordinate entries of a stacked vector.
Eigen::VectorXd expand(const Eigen::VectorXd& per_agent, int dim) {
  Eigen::VectorXd out(per_agent.size() * dim);
  for (Eigen::Index i = 0; i < per_agent.size(); ++i)
    out.segment(i * dim, dim).setConstant(per_agent[i]);
  return out;
}

}  // namespace

Eigen::VectorXd project_box(const Eigen::VectorXd& v, const Eigen::VectorXd& lo,
                            const Eigen::VectorXd& hi) {
  if (v.size() != lo.size() || v.size() != hi.size())
    throw DomainError("project_box: dimension mismatch");
  return v.cwiseMax(lo).cwiseMin(hi);
}

Eigen::VectorXd project_nonneg(const Eigen::VectorXd& v) {
  return v.cwiseMax(0.0);
}

NetworkState initial_state(const AggregativeGame& game,
                           const std::optional<Eigen::VectorXd>& x0) {
  const Eigen::Index nx =
      static_cast<Eigen::Index>(game.agent_count()) * game.action_dim();
  const Eigen::Index nm =
      static_cast<Eigen::Index>(game.agent_count()) * game.coupling_dim();
  NetworkState s;
  Eigen::VectorXd start = x0 ? *x0 : Eigen::VectorXd::Zero(nx);
  if (start.size() != nx)
    throw DomainError("initial_state: x0 must be stacked over all agents");
  s.x = project_box(start, game.box_lower(), game.box_upper());
  s.u = s.x;
  s.z = Eigen::VectorXd::Zero(nm);
  s.multiplier = Eigen::VectorXd::Zero(nm);
  s.iteration = 0;
  return s;
}

NetworkState step(const NetworkState& state, const AggregativeGame& game,
                  const LaplacianOps& laplacian,
                  const AlgorithmParams& params) {
  const int n = game.action_dim();
  const int m = game.coupling_dim();
  const double c = params.consensus_gain;

  const Eigen::VectorXd tau = expand(params.tau, n);
  const Eigen::VectorXd upsilon = expand(params.upsilon, m);
  const Eigen::VectorXd alpha = expand(params.alpha, m);

  NetworkState next;
  // First exchange: neighbors' estimates and multipliers.
  const Eigen::VectorXd mixed_u = laplacian.apply(state.u, n);
  const Eigen::VectorXd mixed_mult = laplacian.apply(state.multiplier, m);

  const Eigen::VectorXd grad =
      game.extended_pseudo_gradient(state.x, state.u) +
      game.block_coupling_adjoint(state.multiplier) + c * mixed_u;
  next.x = project_box(state.x - tau.cwiseProduct(grad), game.box_lower(),
                       game.box_upper());
  next.u = state.u - (params.estimate_step * c) * mixed_u + (next.x - state.x);
  next.z = state.z + upsilon.cwiseProduct(mixed_mult);

  // Second exchange: neighbors' refreshed auxiliaries (reflected step).
  const Eigen::VectorXd mixed_z = laplacian.apply(2.0 * next.z - state.z, m);
  const Eigen::VectorXd drift = mixed_mult + game.coupling_rhs_local() -
                                game.block_coupling_apply(2.0 * next.x -
                                                          state.x) +
                                mixed_z;
  next.multiplier =
      project_nonneg(state.multiplier - alpha.cwiseProduct(drift));
  next.iteration = state.iteration + 1;

  if (!next.x.allFinite() || !next.u.allFinite() || !next.z.allFinite() ||
      !next.multiplier.allFinite())
    throw NumericalError("iteration " + std::to_string(next.iteration) +
                         ": state became non-finite");
  return next;
}

TraceRecord residuals(const NetworkState& state, const AggregativeGame& game,
                      const Eigen::VectorXd* reference_x,
                      const PhiMetric* metric) {
  const int N = game.agent_count();
  const int n = game.action_dim();
  const int m = game.coupling_dim();

  TraceRecord rec;
  rec.iteration = state.iteration;

  const Eigen::VectorXd sigma_x = block_average(state.x, N, n);
  const Eigen::VectorXd sigma_u = block_average(state.u, N, n);
  rec.sigma_gap = (sigma_u - sigma_x).norm();

  double worst_u = 0.0;
  for (int i = 0; i < N; ++i)
    worst_u =
        std::max(worst_u, (state.u.segment(i * n, n) - sigma_x).norm());
  rec.consensus_u = worst_u;

  double worst_mult = 0.0;
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j)
      worst_mult = std::max(worst_mult,
                            (state.multiplier.segment(i * m, m) -
                             state.multiplier.segment(j * m, m))
                                .norm());
  rec.consensus_multiplier = worst_mult;

  rec.kkt_residual =
      kkt_residual(state.x, block_average(state.multiplier, N, m), game);

  if (reference_x) {
    const double scale = reference_x->norm();
    if (scale > 0.0)
      rec.normalized_error_pct = 100.0 * (state.x - *reference_x).norm() / scale;
  }
  if (metric) rec.phi_distance = phi_distance(*metric, state, game);
  return rec;
}

Eigen::VectorXd pack_split_coordinates(const NetworkState& state,
                                       const AggregativeGame& game) {
  const ConsensusProjectors proj{game.agent_count(), game.action_dim()};
  Eigen::VectorXd packed(state.x.size() + state.u.size() + state.z.size() +
                         state.multiplier.size());
  packed << state.x, proj.perp(state.u), state.z, state.multiplier;
  return packed;
}

double phi_distance(const PhiMetric& metric, const NetworkState& state,
                    const AggregativeGame& game) {
  const Eigen::VectorXd diff =
      pack_split_coordinates(state, game) - metric.fixed_point;
  return std::sqrt(std::max(0.0, diff.dot(metric.phi * diff)));
}

RunTrace run(const AggregativeGame& game, const CommGraph& graph,
             const AlgorithmParams& params, const RunOptions& options) {
  if (options.max_iterations < 0)
    throw DomainError("run: max_iterations must be >= 0");
  if (options.record_every < 1)
    throw DomainError("run: record_every must be >= 1");

  const LaplacianOps laplacian(graph, game.action_dim());
  NetworkState state = initial_state(game, options.x0);

  RunTrace trace;
  trace.comm_rounds_per_iteration = 2;
  std::vector<long> snapshots = options.snapshots;
  std::sort(snapshots.begin(), snapshots.end());
  size_t next_snapshot = 0;

  const int N = game.agent_count();
  const int n = game.action_dim();
  for (long k = 0;; ++k) {
    // Sigma-consistency is tracked at every iterate, not just recorded ones.
    const double gap =
        (block_average(state.u, N, n) - block_average(state.x, N, n)).norm();
    trace.max_scaled_sigma_gap = std::max(
        trace.max_scaled_sigma_gap, gap / (1.0 + state.x.norm()));

    while (next_snapshot < snapshots.size() && snapshots[next_snapshot] == k) {
      trace.snapshots.push_back(state);
      ++next_snapshot;
    }

    const bool at_end = (k == options.max_iterations);
    if (at_end || k % options.record_every == 0) {
      TraceRecord rec =
          residuals(state, game, options.reference_x, options.metric);
      trace.records.push_back(rec);
      if (options.tol > 0.0 &&
          rec.kkt_residual + rec.consensus_u + rec.consensus_multiplier <
              options.tol) {
        trace.status = RunStatus::converged;
        break;
      }
    }
    if (at_end) {
      trace.status = RunStatus::max_iterations;
      break;
    }
    state = step(state, game, laplacian, params);
  }
  trace.final_state = state;
  trace.iterations = state.iteration;
  return trace;
}

NetworkState build_fixed_point(const AggregativeGame& game,
                               const CommGraph& graph,
                               const ReferenceSolution& reference) {
  const int N = game.agent_count();
  const int n = game.action_dim();
  const int m = game.coupling_dim();
  if (reference.x.size() != static_cast<Eigen::Index>(N) * n ||
      reference.multiplier.size() != m)
    throw DomainError("build_fixed_point: reference dimensions mismatch");

  NetworkState s;
  s.x = reference.x;
  s.u = replicate_blocks(block_average(reference.x, N, n), N);
  s.multiplier = replicate_blocks(reference.multiplier, N);
  // The multiplier update is stationary when the auxiliary consensus term
  // cancels the disagreement part of the per-agent constraint offsets; the
  // least-squares solve picks the minimum-norm such correction.
  const LaplacianOps lap(graph, m);
  const Eigen::VectorXd offsets =
      game.block_coupling_apply(reference.x) - game.coupling_rhs_local();
  s.z = lap.solve_least_squares(offsets, m);
  s.iteration = 0;
  return s;
}

}  // namespace gne
