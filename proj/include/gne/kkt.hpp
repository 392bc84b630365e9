// Centralized reference equilibrium: KKT residual, projected-gradient plus
// dual-ascent solve, and an independent breakpoint enumeration for scalar
// games with a shared capacity row.
#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "gne/game.hpp"

namespace gne {

struct ReferenceSolution {
  Eigen::VectorXd x;           // stacked equilibrium actions, Nn
  Eigen::VectorXd multiplier;  // shared constraint multiplier, R^m
  std::vector<int> active_coupling_rows;  // rows with A x = b (within tol)
  double residual = 0.0;                  // kkt_residual at (x, multiplier)
  long iterations = 0;
};

// Natural-map residual of the variational KKT system at (x, lambda):
//   || x - P_box(x - F(x) - A^T lambda) || + || lambda - P_+(lambda + A x - b) ||
double kkt_residual(const Eigen::VectorXd& x, const Eigen::VectorXd& multiplier,
                    const AggregativeGame& game);

// Full-information solve of the variational problem: inner projected-gradient
// sweeps on the actions, outer ascent on the shared multiplier. When the game
// is scalar (n = m = 1) with identical positive coupling entries and affine
// oracles, the result is cross-checked against the enumeration oracle below;
// disagreement raises OracleError. Throws OracleError when the requested
// tolerance is not reached.
ReferenceSolution solve_reference_gne(const AggregativeGame& game,
                                      double tol = 1e-10,
                                      long max_iterations = 2000000);

// Exact equilibrium of a scalar affine game by enumerating the multiplier
// intervals on which the set of box-saturated agents is constant (the
// constraint either inactive, or active with the aggregate pinned by the
// shared coupling row). Returns nullopt when the game is not of this shape.
std::optional<ReferenceSolution> enumerate_scalar_equilibrium(
    const AggregativeGame& game);

}  // namespace gne
