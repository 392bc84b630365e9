// Step-size design: restricted monotonicity and cocoercivity constants,
// per-agent step-size bounds, the preconditioning matrix, and the
// certification report tying them together.
#pragma once

#include <Eigen/Dense>
#include <optional>

#include "gne/game.hpp"
#include "gne/graph.hpp"

namespace gne {

// Per-agent step sizes and the design constants they were checked against.
struct AlgorithmParams {
  double consensus_gain = 0.0;  // gain on the Laplacian consensus terms
  double estimate_step = 0.0;   // step on the aggregate-estimate update
  double design_delta = 0.0;    // diagonal-dominance margin of the design
  Eigen::VectorXd tau;          // action steps, one per agent
  Eigen::VectorXd upsilon;      // auxiliary steps, one per agent
  Eigen::VectorXd alpha;        // multiplier steps, one per agent
};

// Smallest eigenvalue of [[mu, -l/2], [-l/2, c*fiedler]]; positive exactly
// when c*fiedler > l^2 / (4 mu). Throws CertificationError otherwise, naming
// the minimum admissible gain.
double restricted_monotonicity_constant(double mu, double lipschitz_fu,
                                        double consensus_gain,
                                        double fiedler_value);

struct CocoercivityConstants {
  double theta_sq = 0.0;  // squared Lipschitz constant of the forward map
  double beta = 0.0;      // cocoercivity constant
};
CocoercivityConstants cocoercivity_constants(double mu_restricted,
                                             double lipschitz_fx,
                                             double lipschitz_fu,
                                             double consensus_gain,
                                             double spectral_radius);

// Diagonal-dominance step bounds at margin delta and estimate step kappa:
//   tau_i     <= 1 / (max column sum of |A_i| + delta + 1/(kappa(1-kappa*delta)))
//   upsilon_i <= 1 / (2 d_i + delta)
//   alpha_i   <= 1 / (max row sum of |A_i| + 2 d_i + delta)
// with d_i the weighted degree. Requires 0 < kappa < 1/delta.
struct StepSizeBounds {
  Eigen::VectorXd tau_max, upsilon_max, alpha_max;
};
StepSizeBounds step_size_bounds(const AggregativeGame& game,
                                const CommGraph& graph, double delta,
                                double kappa);

// Dense symmetric preconditioning matrix over the stacked coordinates
// (x, u_perp, z, multiplier); dimension 2N(n+m).
Eigen::MatrixXd assemble_precondition_matrix(const AlgorithmParams& params,
                                             const CommGraph& graph,
                                             const AggregativeGame& game);

struct PsdCheck {
  bool ok = false;
  double shifted_lambda_min = 0.0;  // smallest eigenvalue of phi - delta I
  double phi_lambda_min = 0.0;
  double phi_norm = 0.0;            // spectral norm of phi
};
// ok when lambda_min(phi - delta I) >= -1e-9 * max(||phi||, 1).
PsdCheck verify_precondition_psd(const Eigen::MatrixXd& phi, double delta);

// Requested design: the consensus gain is mandatory, everything else may be
// pinned or left to the certificate (nullopt = derive). Pinned step sizes are
// direct values; inverse conventions are converted by the config layer.
struct ParamSpec {
  double consensus_gain = 0.0;
  std::optional<double> delta;
  std::optional<double> kappa;
  std::optional<Eigen::VectorXd> tau;      // one entry per agent
  std::optional<Eigen::VectorXd> upsilon;
  std::optional<Eigen::VectorXd> alpha;
  double delta_margin = 0.1;    // derived delta = (1 + margin) / (2 beta)
  double kappa_fraction = 0.5;  // derived kappa = fraction / delta
};

struct CertificateReport {
  // Constants the certificate was computed from.
  double mu = 0.0, lipschitz_fx = 0.0, lipschitz_fu = 0.0;
  GameConstants::Provenance constants_provenance =
      GameConstants::Provenance::declared;
  double fiedler_value = 0.0, spectral_radius = 0.0;
  // Derived quantities.
  double consensus_gain = 0.0, min_admissible_gain = 0.0;
  double restricted_monotonicity = 0.0;
  double theta_sq = 0.0, beta = 0.0;
  double delta_lower = 0.0;  // 1 / (2 beta)
  double delta = 0.0, kappa = 0.0, kappa_upper = 0.0;
  StepSizeBounds bounds;
  // Checks.
  bool gain_ok = false, delta_ok = false, kappa_ok = false;
  bool steps_within_bounds = false, phi_psd = false;
  double shifted_lambda_min = 0.0, phi_norm = 0.0;

  bool pass() const {
    return gain_ok && delta_ok && kappa_ok && steps_within_bounds && phi_psd;
  }
};

struct Certification {
  CertificateReport report;
  AlgorithmParams params;
};

// Fills every unpinned quantity from the convergence theory, evaluates all
// checks, and returns runnable parameters. Pinned values are taken as given,
// so the report may carry failing flags for designs outside the sufficient
// conditions; callers decide how strict to be. Throws CertificationError when
// the consensus gain is too small for restricted monotonicity, and
// DomainError for malformed requests.
Certification certify(const AggregativeGame& game, const CommGraph& graph,
                      const ParamSpec& spec);

}  // namespace gne
