#include "gne/baseline.hpp"

#include <cmath>

#include "gne/errors.hpp"

namespace gne {

MixingMatrix build_mixing(const CommGraph& graph, double eps) {
  if (!(eps > 0.0)) throw DomainError("mixing weight must be > 0");
  const double limit = 1.0 / graph.max_degree();
  if (eps > limit)
    throw DomainError("mixing weight " + std::to_string(eps) +
                      " yields negative self-weights; need eps <= " +
                      std::to_string(limit));
  const int N = graph.node_count();
  MixingMatrix mix;
  mix.w = Eigen::MatrixXd::Identity(N, N);
  for (int i = 0; i < N; ++i) {
    mix.w(i, i) -= eps * graph.degree(i);
    for (auto& [j, weight] : graph.neighbors(i)) mix.w(i, j) = eps * weight;
  }
  return mix;
}

namespace {

// (W (x) I_d) v for stacked v, applied in place.
void mix_blocks(Eigen::VectorXd& v, const Eigen::MatrixXd& w, int dim) {
  Eigen::Map<Eigen::MatrixXd> m(v.data(), dim, w.rows());
  m = (m * w).eval();  // w is symmetric
}

}  // namespace

RunTrace baseline_run(const AggregativeGame& game, const CommGraph& graph,
                      const BaselineOptions& options) {
  if (options.rounds_per_phase < 1)
    throw DomainError("baseline needs at least one mixing round per phase");
  if (!(options.step > 0.0)) throw DomainError("baseline step must be > 0");
  if (options.max_updates < 0 || options.record_every < 1)
    throw DomainError("baseline: invalid horizon or record cadence");
  if (graph.node_count() != game.agent_count())
    throw DomainError("baseline: graph and game disagree on agent count");

  const int N = game.agent_count();
  const int n = game.action_dim();
  const int m = game.coupling_dim();
  const MixingMatrix mix = build_mixing(graph, options.mixing_eps);
  const Eigen::VectorXd& rhs_local = game.coupling_rhs_local();

  NetworkState s = initial_state(game, std::nullopt);
  // z is unused by this scheme; u carries the aggregate estimates.

  RunTrace trace;
  trace.comm_rounds_per_iteration = 2 * options.rounds_per_phase;

  auto record = [&](long t) {
    NetworkState snapshot = s;
    snapshot.iteration = t;
    TraceRecord rec = residuals(snapshot, game, options.reference_x, nullptr);
    trace.records.push_back(rec);
  };

  for (long t = 0;; ++t) {
    const double gap = (block_average(s.u, N, n) - block_average(s.x, N, n))
                           .norm();
    trace.max_scaled_sigma_gap =
        std::max(trace.max_scaled_sigma_gap, gap / (1.0 + s.x.norm()));
    if (t == options.max_updates || t % options.record_every == 0) record(t);
    if (t == options.max_updates) break;

    // (a) multiplier phase: gossip, then local projected ascent on the
    // rescaled offset (N times the local share estimates the global slack).
    for (int r = 0; r < options.rounds_per_phase; ++r)
      mix_blocks(s.multiplier, mix.w, m);
    const Eigen::VectorXd offsets =
        game.block_coupling_apply(s.x) - rhs_local;
    s.multiplier =
        (s.multiplier + (options.step * N) * offsets).cwiseMax(0.0);

    // (b) action phase at the current aggregate estimates.
    Eigen::VectorXd next_x(s.x.size());
    for (int i = 0; i < N; ++i) {
      const Eigen::VectorXd grad =
          game.composite_local_gradient(i, s.x.segment(i * n, n),
                                        s.u.segment(i * n, n)) +
          game.coupling_row(i).transpose() * s.multiplier.segment(i * m, m);
      next_x.segment(i * n, n) = s.x.segment(i * n, n) - options.step * grad;
    }
    next_x = project_box(next_x, game.box_lower(), game.box_upper());

    // (c) aggregate phase: gossip, then dynamic tracking of the own change.
    for (int r = 0; r < options.rounds_per_phase; ++r)
      mix_blocks(s.u, mix.w, n);
    s.u += next_x - s.x;
    s.x = std::move(next_x);

    if (!s.x.allFinite() || !s.u.allFinite() || !s.multiplier.allFinite())
      throw NumericalError("baseline update " + std::to_string(t + 1) +
                           ": state became non-finite");
    s.iteration = t + 1;
  }
  trace.final_state = s;
  trace.iterations = s.iteration;
  trace.status = RunStatus::max_iterations;
  return trace;
}

}  // namespace gne
