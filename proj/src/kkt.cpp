#include "gne/kkt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gne/errors.hpp"
#include "gne/graph.hpp"

namespace gne {

namespace {

Eigen::VectorXd clamp_to_box(const Eigen::VectorXd& v,
                             const Eigen::VectorXd& lo,
                             const Eigen::VectorXd& hi) {
  return v.cwiseMax(lo).cwiseMin(hi);
}

// Stacked A_i^T lambda for one shared multiplier lambda in R^m.
Eigen::VectorXd shared_adjoint(const AggregativeGame& game,
                               const Eigen::VectorXd& lambda) {
  const int n = game.action_dim();
  Eigen::VectorXd out(static_cast<Eigen::Index>(game.agent_count()) * n);
  for (int i = 0; i < game.agent_count(); ++i)
    out.segment(i * n, n) = game.coupling_row(i).transpose() * lambda;
  return out;
}

}  // namespace

double kkt_residual(const Eigen::VectorXd& x, const Eigen::VectorXd& multiplier,
                    const AggregativeGame& game) {
  const Eigen::Index nx =
      static_cast<Eigen::Index>(game.agent_count()) * game.action_dim();
  if (x.size() != nx)
    throw DomainError("kkt_residual: x must be stacked over all agents");
  if (multiplier.size() != game.coupling_dim())
    throw DomainError("kkt_residual: multiplier must have coupling dimension");

  const Eigen::VectorXd grad =
      game.pseudo_gradient(x) + shared_adjoint(game, multiplier);
  const double primal =
      (x - clamp_to_box(x - grad, game.box_lower(), game.box_upper())).norm();
  const Eigen::VectorXd slack =
      multiplier + game.coupling_apply(x) - game.coupling_rhs_total();
  const double dual = (multiplier - slack.cwiseMax(0.0)).norm();
  return primal + dual;
}

ReferenceSolution solve_reference_gne(const AggregativeGame& game, double tol,
                                      long max_iterations) {
  if (!(tol > 0.0)) throw DomainError("solve_reference_gne: tol must be > 0");

  GameConstants consts;
  if (game.constants()) {
    consts = *game.constants();
  } else {
    EstimatedConstants est = estimate_constants(game, 500, 0x5eedu);
    if (est.monotonicity_warning)
      throw OracleError(
          "reference solve: sampled monotonicity estimate is non-positive");
    consts = est.constants;
  }
  if (!(consts.mu > 0.0))
    throw OracleError("reference solve: needs a positive monotonicity constant");
  double lip = consts.lipschitz_f;
  if (!(lip > 0.0)) lip = consts.lipschitz_fx + consts.lipschitz_fu;
  if (!(lip > 0.0)) lip = 1.0;

  const double a2 = game.coupling_norm() * game.coupling_norm();
  const double primal_step = 1.0 / (lip + a2);
  // Dual ascent is safe for steps below mu / ||A||^2; the extra factor and
  // the clamp at mu keep the fixed default conservative for stiff games.
  const double dual_step = 0.5 * std::min(1.0, consts.mu) / a2;

  Eigen::VectorXd x = clamp_to_box(
      Eigen::VectorXd::Zero(game.box_lower().size()), game.box_lower(),
      game.box_upper());
  Eigen::VectorXd multiplier = Eigen::VectorXd::Zero(game.coupling_dim());
  const Eigen::VectorXd b = game.coupling_rhs_total();

  long spent = 0;
  double residual = kkt_residual(x, multiplier, game);
  while (residual > tol && spent < max_iterations) {
    // Inner projected-gradient sweeps at the frozen multiplier, down to a
    // tolerance tied to the current outer accuracy.
    const double inner_tol =
        primal_step * std::max(tol * 0.1, residual * 1e-2);
    while (spent < max_iterations) {
      Eigen::VectorXd next = clamp_to_box(
          x - primal_step *
                  (game.pseudo_gradient(x) + shared_adjoint(game, multiplier)),
          game.box_lower(), game.box_upper());
      const double moved = (next - x).norm();
      x = std::move(next);
      ++spent;
      if (moved <= inner_tol) break;
    }
    multiplier =
        (multiplier + dual_step * (game.coupling_apply(x) - b)).cwiseMax(0.0);
    ++spent;
    residual = kkt_residual(x, multiplier, game);
  }
  if (residual > tol)
    throw OracleError("reference solve did not reach tolerance " +
                      std::to_string(tol) + " within " +
                      std::to_string(max_iterations) +
                      " iterations (residual " + std::to_string(residual) +
                      ")");

  ReferenceSolution sol;
  sol.x = x;
  sol.multiplier = multiplier;
  sol.residual = residual;
  sol.iterations = spent;
  const Eigen::VectorXd slack = game.coupling_apply(x) - b;
  for (int r = 0; r < game.coupling_dim(); ++r)
    if (std::abs(slack[r]) <= 1e-7 * (1.0 + std::abs(b[r])))
      sol.active_coupling_rows.push_back(r);

  // Independent cross-check for scalar games with a shared capacity row.
  if (auto exact = enumerate_scalar_equilibrium(game)) {
    const double agree = std::max(1e-8, 50.0 * tol);
    const double dx = (exact->x - sol.x).cwiseAbs().maxCoeff();
    const double dl =
        (exact->multiplier - sol.multiplier).cwiseAbs().maxCoeff();
    if (dx > agree || dl > agree)
      throw OracleError(
          "reference oracles disagree: projected-gradient vs enumeration "
          "(max action gap " +
          std::to_string(dx) + ", multiplier gap " + std::to_string(dl) + ")");
  }
  return sol;
}

namespace {

struct AffineMap {  // g(x, y) = offset + own * x + agg * y
  double offset = 0.0, own = 0.0, agg = 0.0;
};

// Recovers the coefficients of a scalar affine oracle and validates
// affinity with a fourth probe point.
std::optional<AffineMap> probe_affine(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&,
                                        const Eigen::VectorXd&)>& g) {
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(1);
  Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
  const double g00 = g(zero, zero)[0];
  const double g10 = g(one, zero)[0];
  const double g01 = g(zero, one)[0];
  const double g11 = g(one, one)[0];
  AffineMap m;
  m.offset = g00;
  m.own = g10 - g00;
  m.agg = g01 - g00;
  const double predicted = m.offset + m.own + m.agg;
  if (std::abs(g11 - predicted) > 1e-9 * (1.0 + std::abs(g11)))
    return std::nullopt;
  return m;
}

}  // namespace

std::optional<ReferenceSolution> enumerate_scalar_equilibrium(
    const AggregativeGame& game) {
  if (game.action_dim() != 1 || game.coupling_dim() != 1) return std::nullopt;
  const int N = game.agent_count();

  const double a = game.coupling_row(0)(0, 0);
  if (!(a > 0.0)) return std::nullopt;
  for (int i = 1; i < N; ++i)
    if (std::abs(game.coupling_row(i)(0, 0) - a) > 1e-13 * (1.0 + a))
      return std::nullopt;

  // Composite full-information coefficients: F_i(x) = off_i + agg_i*sigma(x)
  // + own_i*x_i, where the own coefficient must be positive for the
  // breakpoint scan below to be valid.
  std::vector<double> off(N), aggc(N), own(N);
  for (int i = 0; i < N; ++i) {
    // Probe the two oracles through the composite map the agents evaluate.
    auto composite = [&](double xi, double y) {
      Eigen::VectorXd xv = Eigen::VectorXd::Constant(1, xi);
      Eigen::VectorXd yv = Eigen::VectorXd::Constant(1, y);
      return game.composite_local_gradient(i, xv, yv)[0];
    };
    auto probe = probe_affine([&](const Eigen::VectorXd& xv,
                                  const Eigen::VectorXd& yv) {
      return Eigen::VectorXd::Constant(1, composite(xv[0], yv[0])).eval();
    });
    if (!probe) return std::nullopt;
    off[i] = probe->offset;
    own[i] = probe->own;
    aggc[i] = probe->agg;
    if (!(own[i] > 0.0)) return std::nullopt;
  }

  const double b = game.coupling_rhs_total()[0];
  const Eigen::VectorXd& lo = game.box_lower();
  const Eigen::VectorXd& hi = game.box_upper();

  auto actions_at = [&](double sigma, double lambda) {
    Eigen::VectorXd x(N);
    for (int i = 0; i < N; ++i) {
      const double stationary = -(off[i] + aggc[i] * sigma + a * lambda) / own[i];
      x[i] = std::clamp(stationary, lo[i], hi[i]);
    }
    return x;
  };

  auto finish = [&](const Eigen::VectorXd& x, double lambda) {
    ReferenceSolution sol;
    sol.x = x;
    sol.multiplier = Eigen::VectorXd::Constant(1, lambda);
    const double slack = a * x.sum() - b;
    if (std::abs(slack) <= 1e-9 * (1.0 + std::abs(b)))
      sol.active_coupling_rows.push_back(0);
    sol.residual = kkt_residual(sol.x, sol.multiplier, game);
    sol.iterations = 0;
    return sol;
  };

  // Branch 1: constraint inactive. The consistent aggregate is a root of
  // sigma - mean(actions(sigma, 0)), bracketed by the box means.
  {
    double s_lo = lo.mean(), s_hi = hi.mean();
    auto gap = [&](double s) { return s - actions_at(s, 0.0).mean(); };
    double g_lo = gap(s_lo), g_hi = gap(s_hi);
    if (g_lo <= 0.0 && g_hi >= 0.0) {
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (s_lo + s_hi);
        if (gap(mid) <= 0.0)
          s_lo = mid;
        else
          s_hi = mid;
      }
      const Eigen::VectorXd x = actions_at(0.5 * (s_lo + s_hi), 0.0);
      if (a * x.sum() <= b + 1e-9 * (1.0 + std::abs(b)))
        return finish(x, 0.0);
    }
  }

  // Branch 2: constraint active, so the aggregate is pinned at b/(aN) and
  // the multiplier is scanned across the breakpoints where agents enter or
  // leave their box faces. The total action is affine and non-increasing in
  // the multiplier on each interval.
  const double sigma_star = b / (a * N);
  std::vector<double> grid{0.0};
  for (int i = 0; i < N; ++i) {
    const double base = -(off[i] + aggc[i] * sigma_star);
    for (double bound : {lo[i], hi[i]}) {
      const double breakpoint = (base - own[i] * bound) / a;
      if (breakpoint > 0.0) grid.push_back(breakpoint);
    }
  }
  std::sort(grid.begin(), grid.end());
  grid.push_back(grid.back() + 1.0);

  auto excess = [&](double lambda) {
    return a * actions_at(sigma_star, lambda).sum() - b;
  };
  for (size_t k = 0; k + 1 < grid.size(); ++k) {
    const double la = grid[k], lb = grid[k + 1];
    if (lb - la < 1e-300) continue;
    const double ha = excess(la), hb = excess(lb);
    if (ha < -1e-12 * (1.0 + std::abs(b))) break;  // already below zero
    if (hb > 1e-12 * (1.0 + std::abs(b))) continue;
    const double lambda =
        (std::abs(ha - hb) < 1e-300) ? la : la + (lb - la) * ha / (ha - hb);
    return finish(actions_at(sigma_star, lambda), lambda);
  }
  throw OracleError(
      "scalar enumeration found no consistent multiplier interval");
}

}  // namespace gne
