#include <doctest.h>

#include <Eigen/Dense>

#include "gne/game.hpp"
#include "gne/graph.hpp"
#include "gne/kkt.hpp"
#include "gne/params.hpp"
#include "gne/solver.hpp"

using namespace gne;

namespace {

// Two agents on a path: agent 0 ignores the aggregate (gradient 2 x - 2),
// agent 1 couples to it (gradient 1.5 x + u). Unequal constraint rows.
AggregativeGame two_agent_game() {
  std::vector<QuadraticCoefficients> coeffs(2);
  coeffs[0].xx = 1.0;
  coeffs[0].x = -2.0;
  coeffs[1].xx = 0.5;
  coeffs[1].xy = 1.0;
  return quadratic_game(coeffs, Eigen::VectorXd::Zero(2),
                        Eigen::VectorXd::Constant(2, 5.0), {1.0, 2.0},
                        {1.0, 1.0});
}

AlgorithmParams two_agent_params() {
  AlgorithmParams p;
  p.consensus_gain = 0.7;
  p.estimate_step = 0.01;
  p.design_delta = 1.0;
  p.tau = Eigen::VectorXd(2);
  p.tau << 0.1, 0.2;
  p.upsilon = Eigen::VectorXd(2);
  p.upsilon << 0.05, 0.06;
  p.alpha = Eigen::VectorXd(2);
  p.alpha << 0.02, 0.03;
  return p;
}

NetworkState make_state(std::initializer_list<double> x,
                        std::initializer_list<double> u,
                        std::initializer_list<double> z,
                        std::initializer_list<double> lam) {
  NetworkState s;
  auto fill = [](std::initializer_list<double> vals) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(vals.size()));
    Eigen::Index i = 0;
    for (double val : vals) v[i++] = val;
    return v;
  };
  s.x = fill(x);
  s.u = fill(u);
  s.z = fill(z);
  s.multiplier = fill(lam);
  return s;
}

void check_state(const NetworkState& got, std::initializer_list<double> x,
                 std::initializer_list<double> u,
                 std::initializer_list<double> z,
                 std::initializer_list<double> lam) {
  const NetworkState want = make_state(x, u, z, lam);
  CHECK((got.x - want.x).lpNorm<Eigen::Infinity>() <= 1e-14);
  CHECK((got.u - want.u).lpNorm<Eigen::Infinity>() <= 1e-14);
  CHECK((got.z - want.z).lpNorm<Eigen::Infinity>() <= 1e-14);
  CHECK((got.multiplier - want.multiplier).lpNorm<Eigen::Infinity>() <= 1e-14);
}

}  // namespace

TEST_CASE("one sweep matches the hand-computed update") {
  const AggregativeGame game = two_agent_game();
  const CommGraph graph = build_graph(Topology::path, 2);
  const LaplacianOps laplacian(graph, 1);
  const AlgorithmParams params = two_agent_params();

  SUBCASE("interior point") {
    // Worked by hand from the sweep equations:
    //   x+ = P[x - tau (F + A^T lam + c Lu)]      = (1.04, 0.8)
    //   u+ = u - kappa c Lu + (x+ - x)            = (0.547, 0.293)
    //   z+ = z + upsilon L lam                    = (0.095, -0.194)
    //   lam+ = P+[lam - alpha (L lam + b - A(2x+ - x) + L(2z+ - z))]
    //        = (0.29804, 0.35134)
    const NetworkState s = make_state({1.0, 2.0}, {0.5, 1.5}, {0.1, -0.2},
                                      {0.3, 0.4});
    const NetworkState next = step(s, game, laplacian, params);
    check_state(next, {1.04, 0.8}, {0.547, 0.293}, {0.095, -0.194},
                {0.29804, 0.35134});
    CHECK(next.iteration == s.iteration + 1);
  }

  SUBCASE("both projections clip") {
    // Agent 0 is pushed below the box, the first multiplier below zero.
    const NetworkState s = make_state({0.2, 0.1}, {5.0, -5.0}, {0.1, -0.2},
                                      {0.0, 0.0});
    const NetworkState next = step(s, game, laplacian, params);
    check_state(next, {0.0, 2.47}, {4.73, -2.56}, {0.1, -0.2}, {0.0, 0.2694});
  }
}

TEST_CASE("initial state seeds estimates at the actions") {
  const AggregativeGame game = cournot_instance(5);
  const NetworkState s = initial_state(game, std::nullopt);
  CHECK((s.u - s.x).norm() == 0.0);
  CHECK(s.z.norm() == 0.0);
  CHECK(s.multiplier.norm() == 0.0);
  CHECK(s.iteration == 0);
  // Explicit start is projected onto the box.
  Eigen::VectorXd x0 = Eigen::VectorXd::Constant(5, 25.0);
  const NetworkState clipped = initial_state(game, x0);
  CHECK(clipped.x.maxCoeff() == 10.0);
}

TEST_CASE("the constructed fixed point is invariant under the sweep") {
  const AggregativeGame game = cournot_instance(20);
  const CommGraph graph = build_graph(Topology::star, 20);
  const LaplacianOps laplacian(graph, 1);
  const ReferenceSolution ref = solve_reference_gne(game, 1e-11);
  const NetworkState fp = build_fixed_point(game, graph, ref);

  ParamSpec spec;
  spec.consensus_gain = 0.5;
  const Certification cert = certify(game, graph, spec);
  const NetworkState next = step(fp, game, laplacian, cert.params);
  CHECK((next.x - fp.x).lpNorm<Eigen::Infinity>() <= 1e-10);
  CHECK((next.u - fp.u).lpNorm<Eigen::Infinity>() <= 1e-10);
  CHECK((next.z - fp.z).lpNorm<Eigen::Infinity>() <= 1e-10);
  CHECK((next.multiplier - fp.multiplier).lpNorm<Eigen::Infinity>() <= 1e-10);

  // Residual metrics at the fixed point are at solver accuracy.
  const TraceRecord rec = residuals(fp, game, &ref.x);
  CHECK(rec.kkt_residual <= 1e-9);
  CHECK(rec.consensus_u <= 1e-12);
  CHECK(rec.consensus_multiplier == 0.0);
  CHECK(*rec.normalized_error_pct == 0.0);
}

TEST_CASE("sigma consistency is preserved along the run") {
  const AggregativeGame game = cournot_instance(5);
  const CommGraph graph = build_graph(Topology::star, 5);
  ParamSpec spec;
  spec.consensus_gain = 0.5;
  const Certification cert = certify(game, graph, spec);

  RunOptions options;
  options.max_iterations = 200;
  const RunTrace trace = run(game, graph, cert.params, options);
  CHECK(trace.max_scaled_sigma_gap <= 1e-12);
  CHECK(trace.comm_rounds_per_iteration == 2);
}

TEST_CASE("tolerance stop reports convergence before the horizon") {
  const AggregativeGame game = cournot_instance(5);
  const CommGraph graph = build_graph(Topology::star, 5);
  ParamSpec spec;
  spec.consensus_gain = 0.5;
  const Certification cert = certify(game, graph, spec);

  RunOptions options;
  options.max_iterations = 2000000;
  options.tol = 1e-5;
  options.record_every = 50;
  const RunTrace trace = run(game, graph, cert.params, options);
  CHECK(trace.status == RunStatus::converged);
  CHECK(trace.iterations < options.max_iterations);
  const TraceRecord& last = trace.records.back();
  CHECK(last.kkt_residual + last.consensus_u + last.consensus_multiplier <=
        1e-5);
  CHECK(last.iteration == trace.iterations);
}

TEST_CASE("distance to the fixed point never increases") {
  const AggregativeGame game = cournot_instance(5);
  const CommGraph graph = build_graph(Topology::star, 5);
  ParamSpec spec;
  spec.consensus_gain = 0.5;
  const Certification cert = certify(game, graph, spec);
  const ReferenceSolution ref = solve_reference_gne(game, 1e-11);

  PhiMetric metric;
  metric.phi = assemble_precondition_matrix(cert.params, graph, game);
  metric.fixed_point =
      pack_split_coordinates(build_fixed_point(game, graph, ref), game);

  RunOptions options;
  options.max_iterations = 500;
  options.metric = &metric;
  options.reference_x = &ref.x;
  const RunTrace trace = run(game, graph, cert.params, options);
  REQUIRE(trace.records.size() > 400);
  for (size_t k = 1; k < trace.records.size(); ++k) {
    const double prev = *trace.records[k - 1].phi_distance;
    const double cur = *trace.records[k].phi_distance;
    CHECK(cur <= prev * (1.0 + 1e-12) + 1e-300);
  }
  // The error actually decreases over the window.
  CHECK(*trace.records.back().normalized_error_pct <
        *trace.records.front().normalized_error_pct);
}

TEST_CASE("snapshots capture the requested iterations") {
  const AggregativeGame game = cournot_instance(5);
  const CommGraph graph = build_graph(Topology::star, 5);
  ParamSpec spec;
  spec.consensus_gain = 0.5;
  const Certification cert = certify(game, graph, spec);

  RunOptions options;
  options.max_iterations = 50;
  options.record_every = 7;
  options.snapshots = {0, 3, 20};
  const RunTrace trace = run(game, graph, cert.params, options);
  REQUIRE(trace.snapshots.size() == 3);
  CHECK(trace.snapshots[0].iteration == 0);
  CHECK(trace.snapshots[1].iteration == 3);
  CHECK(trace.snapshots[2].iteration == 20);
  // Records appear at the cadence plus the final iterate.
  CHECK(trace.records.front().iteration == 0);
  CHECK(trace.records[1].iteration == 7);
  CHECK(trace.records.back().iteration == 50);
}
