#include "gne/graph.hpp"

#include <algorithm>
#include <set>

#include "gne/errors.hpp"

namespace gne {

Topology topology_from_string(const std::string& name) {
  if (name == "star") return Topology::star;
  if (name == "ring") return Topology::ring;
  if (name == "path") return Topology::path;
  if (name == "complete") return Topology::complete;
  if (name == "edge_list") return Topology::edge_list;
  throw DomainError("unknown topology '" + name + "'");
}

std::string topology_to_string(Topology t) {
  switch (t) {
    case Topology::star: return "star";
    case Topology::ring: return "ring";
    case Topology::path: return "path";
    case Topology::complete: return "complete";
    case Topology::edge_list: return "edge_list";
  }
  throw DomainError("invalid topology enum value");
}

CommGraph::CommGraph(int node_count, std::vector<std::pair<int, int>> edges,
                     std::vector<double> weights)
    : node_count_(node_count),
      edges_(std::move(edges)),
      weights_(std::move(weights)) {
  if (node_count_ < 2)
    throw DomainError("graph needs at least 2 nodes, got " +
                      std::to_string(node_count_));
  if (weights_.empty()) weights_.assign(edges_.size(), 1.0);
  if (weights_.size() != edges_.size())
    throw DomainError("edge/weight count mismatch: " +
                      std::to_string(edges_.size()) + " edges vs " +
                      std::to_string(weights_.size()) + " weights");

  std::set<std::pair<int, int>> seen;
  for (auto& e : edges_) {
    if (e.first > e.second) std::swap(e.first, e.second);
    if (e.first == e.second)
      throw DomainError("self-loop on node " + std::to_string(e.first + 1));
    if (e.first < 0 || e.second >= node_count_)
      throw DomainError("edge endpoint out of range: (" +
                        std::to_string(e.first + 1) + "," +
                        std::to_string(e.second + 1) + ")");
    if (!seen.insert(e).second)
      throw DomainError("duplicate edge (" + std::to_string(e.first + 1) +
                        "," + std::to_string(e.second + 1) + ")");
  }
  for (double w : weights_)
    if (!(w > 0.0)) throw DomainError("edge weights must be positive");

  adjacency_.assign(node_count_, {});
  degrees_.assign(node_count_, 0.0);
  for (size_t k = 0; k < edges_.size(); ++k) {
    auto [i, j] = edges_[k];
    adjacency_[i].emplace_back(j, weights_[k]);
    adjacency_[j].emplace_back(i, weights_[k]);
    degrees_[i] += weights_[k];
    degrees_[j] += weights_[k];
  }
  for (auto& nbrs : adjacency_)
    std::sort(nbrs.begin(), nbrs.end());

  // Connectivity via BFS from node 0.
  std::vector<char> visited(node_count_, 0);
  std::vector<int> stack{0};
  visited[0] = 1;
  int reached = 1;
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    for (auto& [w, _] : adjacency_[v])
      if (!visited[w]) {
        visited[w] = 1;
        ++reached;
        stack.push_back(w);
      }
  }
  if (reached != node_count_)
    throw ConnectivityError("graph is disconnected (" +
                            std::to_string(reached) + " of " +
                            std::to_string(node_count_) +
                            " nodes reachable from node 1)");
}

const std::vector<std::pair<int, double>>& CommGraph::neighbors(
    int node) const {
  if (node < 0 || node >= node_count_)
    throw DomainError("node index out of range: " + std::to_string(node + 1));
  return adjacency_[node];
}

double CommGraph::degree(int node) const {
  if (node < 0 || node >= node_count_)
    throw DomainError("node index out of range: " + std::to_string(node + 1));
  return degrees_[node];
}

double CommGraph::max_degree() const {
  return *std::max_element(degrees_.begin(), degrees_.end());
}

CommGraph build_graph(Topology topology, int n_agents,
                      const std::vector<std::pair<int, int>>* edge_list,
                      const std::vector<double>* weights) {
  if (n_agents < 2)
    throw DomainError("graph needs at least 2 nodes, got " +
                      std::to_string(n_agents));
  std::vector<std::pair<int, int>> edges;
  switch (topology) {
    case Topology::star:
      for (int i = 1; i < n_agents; ++i) edges.emplace_back(0, i);
      break;
    case Topology::ring:
      if (n_agents == 2)
        throw DomainError("ring requires at least 3 nodes");
      for (int i = 0; i < n_agents; ++i)
        edges.emplace_back(i, (i + 1) % n_agents);
      break;
    case Topology::path:
      for (int i = 0; i + 1 < n_agents; ++i) edges.emplace_back(i, i + 1);
      break;
    case Topology::complete:
      for (int i = 0; i < n_agents; ++i)
        for (int j = i + 1; j < n_agents; ++j) edges.emplace_back(i, j);
      break;
    case Topology::edge_list:
      if (!edge_list)
        throw DomainError("edge_list topology requires explicit edges");
      edges = *edge_list;
      break;
  }
  std::vector<double> w;
  if (weights) w = *weights;
  return CommGraph(n_agents, std::move(edges), std::move(w));
}

LaplacianOps::LaplacianOps(const CommGraph& graph, int block_dim)
    : node_count_(graph.node_count()), block_dim_(block_dim) {
  if (block_dim_ < 1)
    throw DomainError("block dimension must be >= 1, got " +
                      std::to_string(block_dim_));
  const int n = node_count_;
  laplacian_ = Eigen::MatrixXd::Zero(n, n);
  adjacency_.resize(n);
  degrees_ = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    adjacency_[i] = graph.neighbors(i);
    degrees_[i] = graph.degree(i);
    laplacian_(i, i) = degrees_[i];
    for (auto& [j, w] : adjacency_[i]) laplacian_(i, j) = -w;
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(laplacian_);
  if (es.info() != Eigen::Success)
    throw NumericalError("Laplacian eigensolve failed");
  eigenvalues_ = es.eigenvalues();
  eigenvectors_ = es.eigenvectors();
  // Eigenvalues are sorted ascending; index 0 is the zero eigenvalue of a
  // connected graph, index 1 the smallest nonzero one.
  fiedler_ = eigenvalues_[1];
  radius_ = eigenvalues_[n - 1];
}

Eigen::VectorXd LaplacianOps::apply(const Eigen::VectorXd& stacked) const {
  return apply(stacked, block_dim_);
}

Eigen::VectorXd LaplacianOps::apply(const Eigen::VectorXd& stacked,
                                    int block_dim) const {
  const int n = node_count_;
  if (stacked.size() != static_cast<Eigen::Index>(n) * block_dim)
    throw DomainError("stacked vector has size " +
                      std::to_string(stacked.size()) + ", expected " +
                      std::to_string(n * block_dim));
  Eigen::VectorXd out(stacked.size());
  for (int i = 0; i < n; ++i) {
    auto block = out.segment(i * block_dim, block_dim);
    block = degrees_[i] * stacked.segment(i * block_dim, block_dim);
    for (auto& [j, w] : adjacency_[i])
      block -= w * stacked.segment(j * block_dim, block_dim);
  }
  return out;
}

Eigen::VectorXd LaplacianOps::solve_least_squares(const Eigen::VectorXd& rhs,
                                                  int block_dim) const {
  const int n = node_count_;
  if (rhs.size() != static_cast<Eigen::Index>(n) * block_dim)
    throw DomainError("rhs has size " + std::to_string(rhs.size()) +
                      ", expected " + std::to_string(n * block_dim));
  // Pseudo-inverse through the cached eigendecomposition, one block
  // coordinate at a time.
  const double cutoff = 1e-12 * std::max(radius_, 1.0);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(rhs.size());
  Eigen::VectorXd coord(n), solved(n);
  for (int d = 0; d < block_dim; ++d) {
    for (int i = 0; i < n; ++i) coord[i] = rhs[i * block_dim + d];
    Eigen::VectorXd proj = eigenvectors_.transpose() * coord;
    for (int k = 0; k < n; ++k)
      proj[k] = (eigenvalues_[k] > cutoff) ? proj[k] / eigenvalues_[k] : 0.0;
    solved = eigenvectors_ * proj;
    for (int i = 0; i < n; ++i) out[i * block_dim + d] = solved[i];
  }
  return out;
}

Eigen::VectorXd block_average(const Eigen::VectorXd& stacked, int blocks,
                              int dim) {
  if (blocks < 1 || dim < 1 ||
      stacked.size() != static_cast<Eigen::Index>(blocks) * dim)
    throw DomainError("block_average: vector of size " +
                      std::to_string(stacked.size()) + " is not " +
                      std::to_string(blocks) + " blocks of " +
                      std::to_string(dim));
  Eigen::VectorXd avg = Eigen::VectorXd::Zero(dim);
  for (int i = 0; i < blocks; ++i) avg += stacked.segment(i * dim, dim);
  return avg / static_cast<double>(blocks);
}

Eigen::VectorXd replicate_blocks(const Eigen::VectorXd& w, int blocks) {
  if (blocks < 1) throw DomainError("replicate_blocks: blocks must be >= 1");
  Eigen::VectorXd out(w.size() * blocks);
  for (int i = 0; i < blocks; ++i) out.segment(i * w.size(), w.size()) = w;
  return out;
}

Eigen::VectorXd ConsensusProjectors::average(const Eigen::VectorXd& v) const {
  return block_average(v, blocks, dim);
}

Eigen::VectorXd ConsensusProjectors::parallel(const Eigen::VectorXd& v) const {
  return replicate_blocks(average(v), blocks);
}

Eigen::VectorXd ConsensusProjectors::perp(const Eigen::VectorXd& v) const {
  return v - parallel(v);
}

}  // namespace gne
