#include "gne/game.hpp"

#include <cmath>
#include <random>

#include "gne/errors.hpp"
#include "gne/graph.hpp"

namespace gne {

AggregativeGame::AggregativeGame(int action_dim, int coupling_dim,
                                 std::vector<GradientOracle> oracles,
                                 Eigen::VectorXd box_lower,
                                 Eigen::VectorXd box_upper,
                                 std::vector<Eigen::MatrixXd> coupling_rows,
                                 Eigen::VectorXd coupling_rhs)
    : agent_count_(static_cast<int>(oracles.size())),
      action_dim_(action_dim),
      coupling_dim_(coupling_dim),
      oracles_(std::move(oracles)),
      lower_(std::move(box_lower)),
      upper_(std::move(box_upper)),
      coupling_rows_(std::move(coupling_rows)),
      rhs_(std::move(coupling_rhs)) {
  if (agent_count_ < 2)
    throw DomainError("game needs at least 2 agents, got " +
                      std::to_string(agent_count_));
  if (action_dim_ < 1 || coupling_dim_ < 1)
    throw DomainError("action and coupling dimensions must be >= 1");
  const Eigen::Index nx = static_cast<Eigen::Index>(agent_count_) * action_dim_;
  const Eigen::Index nm =
      static_cast<Eigen::Index>(agent_count_) * coupling_dim_;
  if (lower_.size() != nx || upper_.size() != nx)
    throw DomainError("box bounds must be stacked over all agents (size " +
                      std::to_string(nx) + ")");
  if ((upper_ - lower_).minCoeff() < 0.0)
    throw DomainError("box has empty coordinate: lower > upper");
  if (static_cast<int>(coupling_rows_.size()) != agent_count_)
    throw DomainError("need one coupling block per agent");
  for (const auto& a : coupling_rows_)
    if (a.rows() != coupling_dim_ || a.cols() != action_dim_)
      throw DomainError("coupling block must be coupling_dim x action_dim");
  if (rhs_.size() != nm)
    throw DomainError("coupling rhs must be stacked over all agents (size " +
                      std::to_string(nm) + ")");
  for (const auto& o : oracles_)
    if (!o.own || !o.aggregate)
      throw DomainError("every agent needs both gradient oracles");

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(stacked_coupling_matrix());
  coupling_norm_ = svd.singularValues()[0];
}

const Eigen::MatrixXd& AggregativeGame::coupling_row(int agent) const {
  if (agent < 0 || agent >= agent_count_)
    throw DomainError("agent index out of range: " + std::to_string(agent + 1));
  return coupling_rows_[agent];
}

Eigen::VectorXd AggregativeGame::coupling_rhs_total() const {
  return block_average(rhs_, agent_count_, coupling_dim_) *
         static_cast<double>(agent_count_);
}

Eigen::VectorXd AggregativeGame::coupling_apply(
    const Eigen::VectorXd& x) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(coupling_dim_);
  for (int i = 0; i < agent_count_; ++i)
    out += coupling_rows_[i] * x.segment(i * action_dim_, action_dim_);
  return out;
}

Eigen::VectorXd AggregativeGame::block_coupling_apply(
    const Eigen::VectorXd& x) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(agent_count_) * coupling_dim_);
  for (int i = 0; i < agent_count_; ++i)
    out.segment(i * coupling_dim_, coupling_dim_) =
        coupling_rows_[i] * x.segment(i * action_dim_, action_dim_);
  return out;
}

Eigen::VectorXd AggregativeGame::block_coupling_adjoint(
    const Eigen::VectorXd& lam) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(agent_count_) * action_dim_);
  for (int i = 0; i < agent_count_; ++i)
    out.segment(i * action_dim_, action_dim_) =
        coupling_rows_[i].transpose() *
        lam.segment(i * coupling_dim_, coupling_dim_);
  return out;
}

Eigen::MatrixXd AggregativeGame::stacked_coupling_matrix() const {
  Eigen::MatrixXd a(coupling_dim_,
                    static_cast<Eigen::Index>(agent_count_) * action_dim_);
  for (int i = 0; i < agent_count_; ++i)
    a.middleCols(i * action_dim_, action_dim_) = coupling_rows_[i];
  return a;
}

Eigen::VectorXd AggregativeGame::composite_local_gradient(
    int agent, const Eigen::VectorXd& x_i, const Eigen::VectorXd& u_i) const {
  if (agent < 0 || agent >= agent_count_)
    throw DomainError("agent index out of range: " + std::to_string(agent + 1));
  if (x_i.size() != action_dim_ || u_i.size() != action_dim_)
    throw DomainError("composite_local_gradient: argument dimension mismatch");
  Eigen::VectorXd g = oracles_[agent].own(x_i, u_i) +
                      oracles_[agent].aggregate(x_i, u_i) /
                          static_cast<double>(agent_count_);
  if (g.size() != action_dim_ || !g.allFinite())
    throw NumericalError("gradient oracle of agent " +
                         std::to_string(agent + 1) +
                         " returned a non-finite or mis-sized value");
  return g;
}

Eigen::VectorXd AggregativeGame::extended_pseudo_gradient(
    const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
  const Eigen::Index nx = static_cast<Eigen::Index>(agent_count_) * action_dim_;
  if (x.size() != nx || u.size() != nx)
    throw DomainError("extended_pseudo_gradient: expected stacked size " +
                      std::to_string(nx));
  Eigen::VectorXd out(nx);
  for (int i = 0; i < agent_count_; ++i)
    out.segment(i * action_dim_, action_dim_) = composite_local_gradient(
        i, x.segment(i * action_dim_, action_dim_),
        u.segment(i * action_dim_, action_dim_));
  return out;
}

Eigen::VectorXd AggregativeGame::pseudo_gradient(
    const Eigen::VectorXd& x) const {
  const Eigen::VectorXd avg = block_average(x, agent_count_, action_dim_);
  return extended_pseudo_gradient(x, replicate_blocks(avg, agent_count_));
}

AggregativeGame quadratic_game(const std::vector<QuadraticCoefficients>& coeffs,
                               const Eigen::VectorXd& box_lower,
                               const Eigen::VectorXd& box_upper,
                               const std::vector<double>& coupling_rows,
                               const std::vector<double>& coupling_rhs) {
  const int n_agents = static_cast<int>(coeffs.size());
  if (static_cast<int>(coupling_rows.size()) != n_agents ||
      static_cast<int>(coupling_rhs.size()) != n_agents)
    throw DomainError("quadratic game: coupling data must list every agent");
  std::vector<GradientOracle> oracles;
  oracles.reserve(coeffs.size());
  for (const auto& c : coeffs) {
    GradientOracle o;
    o.own = [c](const Eigen::VectorXd& xi, const Eigen::VectorXd& y) {
      Eigen::VectorXd g(1);
      g[0] = 2.0 * c.xx * xi[0] + c.xy * y[0] + c.x;
      return g;
    };
    o.aggregate = [c](const Eigen::VectorXd& xi, const Eigen::VectorXd& y) {
      Eigen::VectorXd g(1);
      g[0] = 2.0 * c.yy * y[0] + c.xy * xi[0] + c.y;
      return g;
    };
    oracles.push_back(std::move(o));
  }
  std::vector<Eigen::MatrixXd> rows;
  rows.reserve(coupling_rows.size());
  for (double a : coupling_rows)
    rows.push_back(Eigen::MatrixXd::Constant(1, 1, a));
  Eigen::VectorXd rhs(n_agents);
  for (int i = 0; i < n_agents; ++i) rhs[i] = coupling_rhs[i];
  return AggregativeGame(1, 1, std::move(oracles), box_lower, box_upper,
                         std::move(rows), rhs);
}

AggregativeGame cournot_instance(int n_agents) {
  if (n_agents < 2)
    throw DomainError("Cournot instance needs at least 2 firms");
  std::vector<QuadraticCoefficients> coeffs(n_agents);
  for (int i = 0; i < n_agents; ++i) {
    // Cost (1 + 2i) x_i minus revenue x_i (60 - y - x_i/2), written in the
    // quadratic template: J_i = 0.5 x_i^2 + x_i y + (2i + 1 - 60) x_i.
    coeffs[i].xx = 0.5;
    coeffs[i].xy = 1.0;
    coeffs[i].x = static_cast<double>(2 * i + 1) - 60.0;
  }
  const double capacity = 20.0;
  Eigen::VectorXd lower = Eigen::VectorXd::Zero(n_agents);
  Eigen::VectorXd upper = Eigen::VectorXd::Constant(n_agents, 10.0);
  std::vector<double> rows(n_agents, 1.0);
  std::vector<double> rhs(n_agents, capacity / n_agents);
  AggregativeGame game =
      quadratic_game(coeffs, lower, upper, rows, rhs);
  GameConstants k;
  k.mu = 1.0;
  k.lipschitz_fx = 1.0;
  k.lipschitz_fu = 1.0;
  k.lipschitz_f = k.lipschitz_fx + k.lipschitz_fu;
  k.provenance = GameConstants::Provenance::declared;
  game.set_constants(k);
  return game;
}

EstimatedConstants estimate_constants(const AggregativeGame& game,
                                      int sample_count, std::uint64_t seed) {
  if (sample_count < 2)
    throw DomainError("estimate_constants needs at least 2 samples");
  const int N = game.agent_count();
  const int n = game.action_dim();
  const Eigen::Index nx = static_cast<Eigen::Index>(N) * n;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // Estimates can only see sampled pairs: the Lipschitz maxima lower-bound
  // the true constants, the monotonicity minimum upper-bounds the true mu.
  // Aggregate estimates are drawn from the hull of the per-agent box ranges.
  double hull_lo = game.box_lower().minCoeff();
  double hull_hi = game.box_upper().maxCoeff();
  auto draw_x = [&] {
    Eigen::VectorXd v(nx);
    for (Eigen::Index j = 0; j < nx; ++j)
      v[j] = game.box_lower()[j] +
             unit(rng) * (game.box_upper()[j] - game.box_lower()[j]);
    return v;
  };
  auto draw_u = [&] {
    Eigen::VectorXd v(nx);
    for (Eigen::Index j = 0; j < nx; ++j)
      v[j] = hull_lo + unit(rng) * (hull_hi - hull_lo);
    return v;
  };

  double mu_min = std::numeric_limits<double>::infinity();
  double lx_max = 0.0, lu_max = 0.0, lf_max = 0.0;
  for (int s = 0; s < sample_count; ++s) {
    Eigen::VectorXd x1 = draw_x(), x2 = draw_x(), u1 = draw_u(), u2 = draw_u();
    const double dx = (x1 - x2).norm();
    const double du = (u1 - u2).norm();
    if (dx > 1e-12) {
      Eigen::VectorXd f1 = game.pseudo_gradient(x1);
      Eigen::VectorXd f2 = game.pseudo_gradient(x2);
      mu_min = std::min(mu_min, (x1 - x2).dot(f1 - f2) / (dx * dx));
      lf_max = std::max(lf_max, (f1 - f2).norm() / dx);
      lx_max = std::max(lx_max, (game.extended_pseudo_gradient(x1, u1) -
                                 game.extended_pseudo_gradient(x2, u1))
                                    .norm() /
                                    dx);
    }
    if (du > 1e-12)
      lu_max = std::max(lu_max, (game.extended_pseudo_gradient(x1, u1) -
                                 game.extended_pseudo_gradient(x1, u2))
                                    .norm() /
                                    du);
  }

  EstimatedConstants result;
  result.constants.mu = mu_min;
  result.constants.lipschitz_fx = lx_max;
  result.constants.lipschitz_fu = lu_max;
  result.constants.lipschitz_f = lf_max;
  result.constants.provenance = GameConstants::Provenance::estimated;
  result.monotonicity_warning = !(mu_min > 0.0);
  return result;
}

}  // namespace gne
