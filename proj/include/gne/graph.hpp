// Communication graph, weighted Laplacian operations, consensus projectors.
#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

namespace gne {

enum class Topology { star, ring, path, complete, edge_list };

Topology topology_from_string(const std::string& name);
std::string topology_to_string(Topology t);

// Undirected weighted graph over agents 0..N-1. Edges are stored once with
// first < second; adjacency lists are kept in both directions for O(deg)
// neighbor sweeps.
class CommGraph {
 public:
  CommGraph(int node_count, std::vector<std::pair<int, int>> edges,
            std::vector<double> weights);

  int node_count() const { return node_count_; }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<std::pair<int, double>>& neighbors(int node) const;

  double degree(int node) const;  // weighted degree
  double max_degree() const;

 private:
  int node_count_;
  std::vector<std::pair<int, int>> edges_;
  std::vector<double> weights_;
  std::vector<std::vector<std::pair<int, double>>> adjacency_;
  std::vector<double> degrees_;
};

// Builds one of the named topologies (star hub = node 0; ring/path in index
// order; complete over all pairs). For Topology::edge_list the caller supplies
// the edges explicitly. Unit weights unless `weights` is given. Throws
// ConnectivityError when the result is not a connected graph on >= 2 nodes.
CommGraph build_graph(Topology topology, int n_agents,
                      const std::vector<std::pair<int, int>>* edge_list = nullptr,
                      const std::vector<double>* weights = nullptr);

// Weighted Laplacian L = Deg - W of a graph together with its extreme
// nonzero eigenvalues. apply() computes (L (x) I_d) v for stacked vectors
// without materializing the Kronecker product; d defaults to block_dim().
class LaplacianOps {
 public:
  LaplacianOps(const CommGraph& graph, int block_dim);

  const Eigen::MatrixXd& matrix() const { return laplacian_; }
  int block_dim() const { return block_dim_; }
  int node_count() const { return node_count_; }

  double fiedler_value() const { return fiedler_; }    // smallest nonzero eig
  double spectral_radius() const { return radius_; }   // largest eig

  Eigen::VectorXd apply(const Eigen::VectorXd& stacked) const;
  Eigen::VectorXd apply(const Eigen::VectorXd& stacked, int block_dim) const;

  // Minimum-norm solution of (L (x) I_d) y = r restricted to range(L) per
  // block coordinate; the component of r along the consensus subspace is
  // ignored (it is orthogonal to the range).
  Eigen::VectorXd solve_least_squares(const Eigen::VectorXd& rhs,
                                      int block_dim) const;

 private:
  int node_count_;
  int block_dim_;
  Eigen::MatrixXd laplacian_;
  std::vector<std::vector<std::pair<int, double>>> adjacency_;
  Eigen::VectorXd degrees_;
  double fiedler_ = 0.0;
  double radius_ = 0.0;
  Eigen::MatrixXd eigenvectors_;
  Eigen::VectorXd eigenvalues_;
};

// Block average sigma(v) = (1/N) sum_i v_i of a stacked vector of N blocks
// of size dim.
Eigen::VectorXd block_average(const Eigen::VectorXd& stacked, int blocks,
                              int dim);

// N copies of w stacked.
Eigen::VectorXd replicate_blocks(const Eigen::VectorXd& w, int blocks);

// Orthogonal projectors onto the consensus subspace {1 (x) w} of stacked
// vectors and its complement, applied matrix-free.
struct ConsensusProjectors {
  int blocks = 0;
  int dim = 0;

  Eigen::VectorXd average(const Eigen::VectorXd& v) const;   // sigma(v)
  Eigen::VectorXd parallel(const Eigen::VectorXd& v) const;  // 1 (x) sigma(v)
  Eigen::VectorXd perp(const Eigen::VectorXd& v) const;      // v - parallel(v)
};

}  // namespace gne
