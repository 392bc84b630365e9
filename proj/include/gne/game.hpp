// Aggregative game container: per-agent gradient oracles, local box sets,
// affine coupling constraint, and monotonicity/Lipschitz constants.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace gne {

// Partial gradients of agent i's cost J_i(x_i, y), where y stands for the
// aggregate average the agent reacts to. `own` is the gradient in x_i,
// `aggregate` the gradient in y; both map (x_i, y) -> R^n resp. R^n.
struct GradientOracle {
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)>
      own;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)>
      aggregate;
};

// Monotonicity/Lipschitz data used by certification and the reference solve.
//  mu            strong monotonicity of the full-information pseudo-gradient
//  lipschitz_fx  Lipschitz constant of the extended map in its x argument
//  lipschitz_fu  Lipschitz constant of the extended map in the estimates
//  lipschitz_f   Lipschitz constant of the full-information pseudo-gradient
struct GameConstants {
  double mu = 0.0;
  double lipschitz_fx = 0.0;
  double lipschitz_fu = 0.0;
  double lipschitz_f = 0.0;
  enum class Provenance { declared, estimated } provenance =
      Provenance::declared;
};

// N agents, each with action x_i in a box of R^n, coupled through the shared
// affine constraint sum_i A_i x_i <= b with local slices b_i (sum b_i = b).
class AggregativeGame {
 public:
  AggregativeGame(int action_dim, int coupling_dim,
                  std::vector<GradientOracle> oracles,
                  Eigen::VectorXd box_lower, Eigen::VectorXd box_upper,
                  std::vector<Eigen::MatrixXd> coupling_rows,
                  Eigen::VectorXd coupling_rhs);

  int agent_count() const { return agent_count_; }
  int action_dim() const { return action_dim_; }
  int coupling_dim() const { return coupling_dim_; }

  const Eigen::VectorXd& box_lower() const { return lower_; }   // stacked, Nn
  const Eigen::VectorXd& box_upper() const { return upper_; }

  const Eigen::MatrixXd& coupling_row(int agent) const;          // A_i, m x n
  const Eigen::VectorXd& coupling_rhs_local() const { return rhs_; }  // Nm
  Eigen::VectorXd coupling_rhs_total() const;                    // b, R^m

  // A x = sum_i A_i x_i.
  Eigen::VectorXd coupling_apply(const Eigen::VectorXd& x) const;
  // Block-diagonal forms: (Lambda x)_i = A_i x_i and its adjoint.
  Eigen::VectorXd block_coupling_apply(const Eigen::VectorXd& x) const;
  Eigen::VectorXd block_coupling_adjoint(const Eigen::VectorXd& lam) const;
  Eigen::MatrixXd stacked_coupling_matrix() const;               // m x Nn
  double coupling_norm() const { return coupling_norm_; }        // ||A||_2

  // grad_{x_i} J_i(x_i, u_i) + (1/N) grad_y J_i(x_i, u_i): the local gradient
  // an agent evaluates at its own aggregate estimate.
  Eigen::VectorXd composite_local_gradient(int agent,
                                           const Eigen::VectorXd& x_i,
                                           const Eigen::VectorXd& u_i) const;

  // Stacked composite gradients at per-agent estimates u (size Nn).
  Eigen::VectorXd extended_pseudo_gradient(const Eigen::VectorXd& x,
                                           const Eigen::VectorXd& u) const;

  // Full-information pseudo-gradient: the extended map evaluated at the true
  // average, u = 1 (x) sigma(x). Same code path by construction.
  Eigen::VectorXd pseudo_gradient(const Eigen::VectorXd& x) const;

  const std::optional<GameConstants>& constants() const { return constants_; }
  void set_constants(GameConstants c) { constants_ = c; }

 private:
  int agent_count_;
  int action_dim_;
  int coupling_dim_;
  std::vector<GradientOracle> oracles_;
  Eigen::VectorXd lower_, upper_;
  std::vector<Eigen::MatrixXd> coupling_rows_;
  Eigen::VectorXd rhs_;
  double coupling_norm_ = 0.0;
  std::optional<GameConstants> constants_;
};

// Scalar quadratic aggregative cost
//   J_i(x_i, y) = xx*x_i^2 + yy*y^2 + xy*x_i*y + x*x_i + y*y_term,
// so grad_{x_i} = 2*xx*x_i + xy*y + x and grad_y = 2*yy*y + xy*x_i + y_term.
struct QuadraticCoefficients {
  double xx = 0.0;
  double yy = 0.0;
  double xy = 0.0;
  double x = 0.0;
  double y = 0.0;
};

// Builds a scalar-action (n = m = 1) quadratic aggregative game.
AggregativeGame quadratic_game(const std::vector<QuadraticCoefficients>& coeffs,
                               const Eigen::VectorXd& box_lower,
                               const Eigen::VectorXd& box_upper,
                               const std::vector<double>& coupling_rows,
                               const std::vector<double>& coupling_rhs);

// Networked Cournot benchmark with N firms: production bounds [0, 10], market
// capacity constraint sum_i x_i <= 20 split evenly across agents, linear cost
// (1 + 2(i-1)) x_i and inverse demand 60 - sigma(x) - x_i/2. Declared
// constants mu = lipschitz_fx = lipschitz_fu = 1.
AggregativeGame cournot_instance(int n_agents);

// Sampled estimates of the game constants over the box domain (seeded,
// deterministic). A non-positive monotonicity estimate is reported through
// the warning flag rather than an exception.
struct EstimatedConstants {
  GameConstants constants;
  bool monotonicity_warning = false;
};
EstimatedConstants estimate_constants(const AggregativeGame& game,
                                      int sample_count, std::uint64_t seed);

}  // namespace gne
