#include "gne/params.hpp"

#include <cmath>

#include "gne/errors.hpp"

namespace gne {

double restricted_monotonicity_constant(double mu, double lipschitz_fu,
                                        double consensus_gain,
                                        double fiedler_value) {
  if (!(mu > 0.0))
    throw DomainError("restricted monotonicity needs mu > 0");
  if (lipschitz_fu < 0.0 || !(consensus_gain > 0.0) || !(fiedler_value > 0.0))
    throw DomainError("restricted monotonicity: invalid constants");
  const double cl = consensus_gain * fiedler_value;
  const double threshold = lipschitz_fu * lipschitz_fu / (4.0 * mu);
  if (!(cl > threshold)) {
    const double min_gain = threshold / fiedler_value;
    throw CertificationError(
        "consensus gain too small for restricted monotonicity: need c > " +
        std::to_string(min_gain) + ", got " + std::to_string(consensus_gain));
  }
  // Closed-form smallest eigenvalue of the symmetric 2x2 block
  // [[mu, -l/2], [-l/2, c*fiedler]].
  const double tr = mu + cl;
  const double det = mu * cl - threshold * mu;  // mu*cl - l^2/4
  return 0.5 * (tr - std::sqrt(tr * tr - 4.0 * det));
}

CocoercivityConstants cocoercivity_constants(double mu_restricted,
                                             double lipschitz_fx,
                                             double lipschitz_fu,
                                             double consensus_gain,
                                             double spectral_radius) {
  if (!(mu_restricted > 0.0))
    throw DomainError("cocoercivity needs a positive monotonicity constant");
  if (!(spectral_radius > 0.0))
    throw DomainError("cocoercivity needs a positive spectral radius");
  CocoercivityConstants out;
  const double cr = consensus_gain * spectral_radius;
  out.theta_sq = std::max(lipschitz_fx * lipschitz_fx,
                          lipschitz_fu * lipschitz_fu + cr * cr);
  if (!(out.theta_sq > 0.0))
    throw DomainError("cocoercivity: forward map has zero Lipschitz bound");
  out.beta = std::min(mu_restricted / out.theta_sq, 1.0 / spectral_radius);
  return out;
}

StepSizeBounds step_size_bounds(const AggregativeGame& game,
                                const CommGraph& graph, double delta,
                                double kappa) {
  if (!(delta > 0.0)) throw DomainError("step bounds: delta must be > 0");
  if (!(kappa > 0.0) || !(kappa < 1.0 / delta))
    throw DomainError("step bounds: need 0 < kappa < 1/delta, got kappa = " +
                      std::to_string(kappa) + ", delta = " +
                      std::to_string(delta));
  if (graph.node_count() != game.agent_count())
    throw DomainError("step bounds: graph and game disagree on agent count");

  const int N = game.agent_count();
  const double kappa_term = 1.0 / (kappa * (1.0 - kappa * delta));
  StepSizeBounds bounds;
  bounds.tau_max.resize(N);
  bounds.upsilon_max.resize(N);
  bounds.alpha_max.resize(N);
  for (int i = 0; i < N; ++i) {
    const Eigen::MatrixXd abs_a = game.coupling_row(i).cwiseAbs();
    const double col_sum = abs_a.colwise().sum().maxCoeff();
    const double row_sum = abs_a.rowwise().sum().maxCoeff();
    const double deg2 = 2.0 * graph.degree(i);
    bounds.tau_max[i] = 1.0 / (col_sum + delta + kappa_term);
    bounds.upsilon_max[i] = 1.0 / (deg2 + delta);
    bounds.alpha_max[i] = 1.0 / (row_sum + deg2 + delta);
  }
  return bounds;
}

Eigen::MatrixXd assemble_precondition_matrix(const AlgorithmParams& params,
                                             const CommGraph& graph,
                                             const AggregativeGame& game) {
  const int N = game.agent_count();
  const int n = game.action_dim();
  const int m = game.coupling_dim();
  if (graph.node_count() != N)
    throw DomainError("precondition matrix: graph and game disagree");
  if (params.tau.size() != N || params.upsilon.size() != N ||
      params.alpha.size() != N)
    throw DomainError("precondition matrix: need one step size per agent");
  if (params.tau.minCoeff() <= 0.0 || params.upsilon.minCoeff() <= 0.0 ||
      params.alpha.minCoeff() <= 0.0 || !(params.estimate_step > 0.0))
    throw DomainError("precondition matrix: step sizes must be positive");

  const int nx = N * n;
  const int nm = N * m;
  const int dim = 2 * nx + 2 * nm;
  const double kappa_inv = 1.0 / params.estimate_step;

  // Orthogonal projector onto the complement of the consensus subspace.
  Eigen::MatrixXd perp = Eigen::MatrixXd::Identity(nx, nx);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      for (int d = 0; d < n; ++d) perp(i * n + d, j * n + d) -= 1.0 / N;

  Eigen::MatrixXd lap_m = Eigen::MatrixXd::Zero(nm, nm);
  {
    const LaplacianOps lap(graph, 1);
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j)
        for (int d = 0; d < m; ++d)
          lap_m(i * m + d, j * m + d) = lap.matrix()(i, j);
  }

  Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(dim, dim);
  const int ux = nx;        // offset of the estimate block
  const int zx = 2 * nx;    // offset of the auxiliary block
  const int lx = 2 * nx + nm;  // offset of the multiplier block

  phi.block(0, 0, nx, nx) = kappa_inv * perp;
  for (int i = 0; i < N; ++i)
    for (int d = 0; d < n; ++d)
      phi(i * n + d, i * n + d) += 1.0 / params.tau[i];
  phi.block(0, ux, nx, nx) = -kappa_inv * perp;
  phi.block(ux, 0, nx, nx) = -kappa_inv * perp;
  phi.block(ux, ux, nx, nx) =
      kappa_inv * Eigen::MatrixXd::Identity(nx, nx);

  for (int i = 0; i < N; ++i)
    for (int d = 0; d < m; ++d) {
      phi(zx + i * m + d, zx + i * m + d) = 1.0 / params.upsilon[i];
      phi(lx + i * m + d, lx + i * m + d) = 1.0 / params.alpha[i];
    }
  phi.block(zx, lx, nm, nm) = lap_m;
  phi.block(lx, zx, nm, nm) = lap_m;

  for (int i = 0; i < N; ++i) {
    const Eigen::MatrixXd& a = game.coupling_row(i);
    phi.block(i * n, lx + i * m, n, m) = -a.transpose();
    phi.block(lx + i * m, i * n, m, n) = -a;
  }
  return phi;
}

PsdCheck verify_precondition_psd(const Eigen::MatrixXd& phi, double delta) {
  if (phi.rows() != phi.cols())
    throw DomainError("precondition matrix must be square");
  if ((phi - phi.transpose()).cwiseAbs().maxCoeff() >
      1e-12 * (1.0 + phi.cwiseAbs().maxCoeff()))
    throw DomainError("precondition matrix must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(phi);
  if (es.info() != Eigen::Success)
    throw NumericalError("precondition matrix eigensolve failed");
  PsdCheck check;
  check.phi_lambda_min = es.eigenvalues().minCoeff();
  check.phi_norm = es.eigenvalues().cwiseAbs().maxCoeff();
  check.shifted_lambda_min = check.phi_lambda_min - delta;
  check.ok =
      check.shifted_lambda_min >= -1e-9 * std::max(check.phi_norm, 1.0);
  return check;
}

Certification certify(const AggregativeGame& game, const CommGraph& graph,
                      const ParamSpec& spec) {
  if (graph.node_count() != game.agent_count())
    throw DomainError("certify: graph and game disagree on agent count");
  if (!(spec.consensus_gain > 0.0))
    throw DomainError("certify: consensus gain must be > 0");
  if (!(spec.delta_margin > 0.0))
    throw DomainError("certify: delta margin must be > 0");
  if (!(spec.kappa_fraction > 0.0) || !(spec.kappa_fraction < 1.0))
    throw DomainError("certify: kappa fraction must lie in (0, 1)");

  GameConstants consts;
  if (game.constants()) {
    consts = *game.constants();
  } else {
    EstimatedConstants est = estimate_constants(game, 500, 0x5eedu);
    if (est.monotonicity_warning)
      throw CertificationError(
          "certify: sampled monotonicity estimate is non-positive");
    consts = est.constants;
  }

  const LaplacianOps lap(graph, 1);
  const int N = game.agent_count();

  Certification cert;
  CertificateReport& r = cert.report;
  r.mu = consts.mu;
  r.lipschitz_fx = consts.lipschitz_fx;
  r.lipschitz_fu = consts.lipschitz_fu;
  r.constants_provenance = consts.provenance;
  r.fiedler_value = lap.fiedler_value();
  r.spectral_radius = lap.spectral_radius();
  r.consensus_gain = spec.consensus_gain;
  r.min_admissible_gain =
      consts.lipschitz_fu * consts.lipschitz_fu /
      (4.0 * consts.mu * lap.fiedler_value());
  r.gain_ok = spec.consensus_gain > r.min_admissible_gain;

  // Throws with the admissible gain when the consensus term is too weak;
  // nothing downstream is meaningful in that case.
  r.restricted_monotonicity = restricted_monotonicity_constant(
      consts.mu, consts.lipschitz_fu, spec.consensus_gain, r.fiedler_value);
  const CocoercivityConstants co = cocoercivity_constants(
      r.restricted_monotonicity, consts.lipschitz_fx, consts.lipschitz_fu,
      spec.consensus_gain, r.spectral_radius);
  r.theta_sq = co.theta_sq;
  r.beta = co.beta;
  r.delta_lower = 0.5 / co.beta;

  r.delta = spec.delta ? *spec.delta
                       : (1.0 + spec.delta_margin) * r.delta_lower;
  if (!(r.delta > 0.0)) throw DomainError("certify: delta must be > 0");
  r.delta_ok = r.delta > r.delta_lower;
  r.kappa_upper = 1.0 / r.delta;
  if (spec.kappa) {
    if (!(*spec.kappa > 0.0))
      throw DomainError("certify: kappa must be > 0");
    r.kappa = *spec.kappa;
  } else {
    r.kappa = spec.kappa_fraction / r.delta;
  }
  r.kappa_ok = r.kappa > 0.0 && r.kappa < r.kappa_upper;

  // A pinned kappa outside (0, 1/delta) only fails the report; the bounds are
  // then evaluated at the derived kappa so the table stays meaningful.
  const double bounds_kappa =
      r.kappa_ok ? r.kappa : spec.kappa_fraction / r.delta;
  r.bounds = step_size_bounds(game, graph, r.delta, bounds_kappa);

  auto resolve = [&](const std::optional<Eigen::VectorXd>& pinned,
                     const Eigen::VectorXd& bound,
                     const char* name) -> Eigen::VectorXd {
    if (!pinned) return bound;
    if (pinned->size() != N)
      throw DomainError(std::string("certify: ") + name +
                        " needs one entry per agent");
    if (pinned->minCoeff() <= 0.0)
      throw DomainError(std::string("certify: ") + name +
                        " entries must be > 0");
    return *pinned;
  };
  AlgorithmParams& p = cert.params;
  p.consensus_gain = spec.consensus_gain;
  p.estimate_step = r.kappa;
  p.design_delta = r.delta;
  p.tau = resolve(spec.tau, r.bounds.tau_max, "tau");
  p.upsilon = resolve(spec.upsilon, r.bounds.upsilon_max, "upsilon");
  p.alpha = resolve(spec.alpha, r.bounds.alpha_max, "alpha");

  const double slack = 1.0 + 1e-12;
  r.steps_within_bounds =
      (p.tau.array() <= r.bounds.tau_max.array() * slack).all() &&
      (p.upsilon.array() <= r.bounds.upsilon_max.array() * slack).all() &&
      (p.alpha.array() <= r.bounds.alpha_max.array() * slack).all();

  const Eigen::MatrixXd phi =
      assemble_precondition_matrix(p, graph, game);
  const PsdCheck psd = verify_precondition_psd(phi, r.delta);
  r.phi_psd = psd.ok;
  r.shifted_lambda_min = psd.shifted_lambda_min;
  r.phi_norm = psd.phi_norm;
  return cert;
}

}  // namespace gne
