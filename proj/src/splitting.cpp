#include "gne/splitting.hpp"

#include <cmath>
#include <random>

#include "gne/errors.hpp"

namespace gne {

namespace {

Eigen::VectorXd expand(const Eigen::VectorXd& per_agent, int dim) {
  Eigen::VectorXd out(per_agent.size() * dim);
  for (Eigen::Index i = 0; i < per_agent.size(); ++i)
    out.segment(i * dim, dim).setConstant(per_agent[i]);
  return out;
}

// Estimates reconstructed from reduced coordinates: consensus part from the
// actions plus the disagreement part.
Eigen::VectorXd reconstruct_estimates(const SplitState& s,
                                      const AggregativeGame& game) {
  const ConsensusProjectors proj{game.agent_count(), game.action_dim()};
  return proj.parallel(s.x) + s.u_perp;
}

}  // namespace

SplitState to_split_state(const NetworkState& state,
                          const AggregativeGame& game) {
  const ConsensusProjectors proj{game.agent_count(), game.action_dim()};
  SplitState s;
  s.x = state.x;
  s.u_perp = proj.perp(state.u);
  s.z = state.z;
  s.multiplier = state.multiplier;
  return s;
}

Eigen::VectorXd pack(const SplitState& s) {
  Eigen::VectorXd packed(s.x.size() + s.u_perp.size() + s.z.size() +
                         s.multiplier.size());
  packed << s.x, s.u_perp, s.z, s.multiplier;
  return packed;
}

SplitState unpack(const Eigen::VectorXd& packed, int agents, int action_dim,
                  int coupling_dim) {
  const Eigen::Index nx = static_cast<Eigen::Index>(agents) * action_dim;
  const Eigen::Index nm = static_cast<Eigen::Index>(agents) * coupling_dim;
  if (packed.size() != 2 * nx + 2 * nm)
    throw DomainError("unpack: packed vector has wrong size");
  SplitState s;
  s.x = packed.segment(0, nx);
  s.u_perp = packed.segment(nx, nx);
  s.z = packed.segment(2 * nx, nm);
  s.multiplier = packed.segment(2 * nx + nm, nm);
  return s;
}

Eigen::VectorXd forward_operator(const SplitState& s,
                                 const AggregativeGame& game,
                                 const LaplacianOps& laplacian,
                                 double consensus_gain) {
  const int n = game.action_dim();
  const int m = game.coupling_dim();
  Eigen::VectorXd out(2 * s.x.size() + 2 * s.z.size());
  const Eigen::VectorXd estimates = reconstruct_estimates(s, game);
  out << game.extended_pseudo_gradient(s.x, estimates),
      consensus_gain * laplacian.apply(s.u_perp, n),
      Eigen::VectorXd::Zero(s.z.size()),
      laplacian.apply(s.multiplier, m) + game.coupling_rhs_local();
  return out;
}

Eigen::VectorXd skew_operator(const SplitState& s, const AggregativeGame& game,
                              const LaplacianOps& laplacian) {
  const int m = game.coupling_dim();
  Eigen::VectorXd out(2 * s.x.size() + 2 * s.z.size());
  out << game.block_coupling_adjoint(s.multiplier),
      Eigen::VectorXd::Zero(s.u_perp.size()),
      -laplacian.apply(s.multiplier, m),
      laplacian.apply(s.z, m) - game.block_coupling_apply(s.x);
  return out;
}

double fb_inclusion_residual(const SplitState& current, const SplitState& next,
                             const AggregativeGame& game,
                             const LaplacianOps& laplacian,
                             const AlgorithmParams& params,
                             const Eigen::MatrixXd& phi) {
  const Eigen::VectorXd packed_cur = pack(current);
  const Eigen::VectorXd packed_next = pack(next);
  if (phi.rows() != packed_cur.size() || phi.cols() != packed_cur.size())
    throw DomainError("fb_inclusion_residual: matrix/state size mismatch");

  // What must land in the normal cones at the next point.
  const Eigen::VectorXd leftover =
      -(forward_operator(current, game, laplacian, params.consensus_gain) +
        skew_operator(next, game, laplacian) +
        phi * (packed_next - packed_cur));

  const Eigen::Index nx = next.x.size();
  const Eigen::Index nm = next.multiplier.size();
  const Eigen::VectorXd& lo = game.box_lower();
  const Eigen::VectorXd& hi = game.box_upper();

  double violation = 0.0;
  for (Eigen::Index j = 0; j < nx; ++j) {
    const double w = leftover[j];
    const bool at_lower = next.x[j] <= lo[j];
    const bool at_upper = next.x[j] >= hi[j];
    double v;
    if (at_lower && at_upper)
      v = 0.0;  // degenerate coordinate, any direction is normal
    else if (at_lower)
      v = std::max(0.0, w);   // cone is (-inf, 0]
    else if (at_upper)
      v = std::max(0.0, -w);  // cone is [0, inf)
    else
      v = std::abs(w);
    violation = std::max(violation, v);
  }
  for (Eigen::Index j = nx; j < 2 * nx + nm; ++j)  // estimate + auxiliary rows
    violation = std::max(violation, std::abs(leftover[j]));
  for (Eigen::Index j = 0; j < nm; ++j) {
    const double w = leftover[2 * nx + nm + j];
    const double v = (next.multiplier[j] <= 0.0) ? std::max(0.0, w)
                                                 : std::abs(w);
    violation = std::max(violation, v);
  }
  return violation;
}

SplitState reduced_step(const SplitState& s, const AggregativeGame& game,
                        const LaplacianOps& laplacian,
                        const AlgorithmParams& params) {
  const int n = game.action_dim();
  const int m = game.coupling_dim();
  const ConsensusProjectors proj{game.agent_count(), game.action_dim()};
  const Eigen::VectorXd tau = expand(params.tau, n);
  const Eigen::VectorXd upsilon = expand(params.upsilon, m);
  const Eigen::VectorXd alpha = expand(params.alpha, m);
  const double c = params.consensus_gain;

  SplitState next;
  const Eigen::VectorXd mixed_perp = laplacian.apply(s.u_perp, n);
  const Eigen::VectorXd grad =
      game.extended_pseudo_gradient(s.x, reconstruct_estimates(s, game)) +
      game.block_coupling_adjoint(s.multiplier) + c * mixed_perp;
  next.x = project_box(s.x - tau.cwiseProduct(grad), game.box_lower(),
                       game.box_upper());
  next.u_perp =
      s.u_perp - (params.estimate_step * c) * mixed_perp + proj.perp(next.x - s.x);

  const Eigen::VectorXd mixed_mult = laplacian.apply(s.multiplier, m);
  next.z = s.z + upsilon.cwiseProduct(mixed_mult);
  const Eigen::VectorXd drift =
      mixed_mult + game.coupling_rhs_local() -
      game.block_coupling_apply(2.0 * next.x - s.x) +
      laplacian.apply(2.0 * next.z - s.z, m);
  next.multiplier = project_nonneg(s.multiplier - alpha.cwiseProduct(drift));
  return next;
}

double restricted_monotonicity_probe(const AggregativeGame& game,
                                     const CommGraph& graph,
                                     double consensus_gain, int samples,
                                     std::uint64_t seed) {
  if (samples < 1) throw DomainError("probe needs at least one sample");
  const int N = game.agent_count();
  const int n = game.action_dim();
  const Eigen::Index nx = static_cast<Eigen::Index>(N) * n;
  const LaplacianOps laplacian(graph, n);
  const ConsensusProjectors proj{N, n};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const double hull_lo = game.box_lower().minCoeff();
  const double hull_hi = game.box_upper().maxCoeff();
  auto draw_box = [&] {
    Eigen::VectorXd v(nx);
    for (Eigen::Index j = 0; j < nx; ++j)
      v[j] = game.box_lower()[j] +
             unit(rng) * (game.box_upper()[j] - game.box_lower()[j]);
    return v;
  };
  auto draw_hull = [&] {
    Eigen::VectorXd v(nx);
    for (Eigen::Index j = 0; j < nx; ++j)
      v[j] = hull_lo + unit(rng) * (hull_hi - hull_lo);
    return v;
  };

  double worst = std::numeric_limits<double>::infinity();
  for (int s = 0; s < samples; ++s) {
    // Anchor with consensus-aligned estimates, probe point with disagreement.
    const Eigen::VectorXd anchor_x = draw_box();
    const Eigen::VectorXd x = draw_box();
    const Eigen::VectorXd u_perp = proj.perp(draw_hull());

    const Eigen::VectorXd dx = x - anchor_x;
    const double denom = dx.squaredNorm() + u_perp.squaredNorm();
    if (denom < 1e-16) continue;

    const Eigen::VectorXd df =
        game.extended_pseudo_gradient(x, proj.parallel(x) + u_perp) -
        game.pseudo_gradient(anchor_x);
    const double inner = dx.dot(df) + consensus_gain *
                                          u_perp.dot(laplacian.apply(u_perp, n));
    worst = std::min(worst, inner / denom);
  }
  if (!std::isfinite(worst))
    throw NumericalError("monotonicity probe produced no valid samples");
  return worst;
}

}  // namespace gne
