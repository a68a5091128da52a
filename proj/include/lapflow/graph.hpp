// Copyright 2026 The lapflow Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace lapflow {

struct Edge {
  int i = 0;
  int j = 0;
  double w = 1.0;
};

struct Neighbor {
  int node = 0;
  double w = 0.0;
};

/// Undirected graph with strictly positive edge weights.
///
/// Duplicate edges and self-loops are rejected. Connectivity is not required
/// by the constructor; generators check it and laplacian() insists on it.
class WeightedGraph {
 public:
  WeightedGraph() = default;
  WeightedGraph(int n, std::vector<Edge> edges);

  int node_count() const { return n_; }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  const std::vector<Edge>& edges() const { return edges_; }
  std::span<const Neighbor> neighbors(int k) const;
  int degree(int k) const;

  int max_degree() const;
  double max_weight() const;
  double min_weight() const;
  bool is_connected() const;
  /// Largest finite hop distance; 0 for a single node.
  int diameter() const;

 private:
  int n_ = 0;
  std::vector<Edge> edges_;
  std::vector<int> offsets_;
  std::vector<Neighbor> adjacency_;
};

/// M = D - A with D the diagonal and A the negated off-diagonal part.
struct StandardSplitting {
  Eigen::VectorXd diag;
  Eigen::SparseMatrix<double, Eigen::RowMajor> off;

  int size() const { return static_cast<int>(diag.size()); }
  Eigen::SparseMatrix<double> matrix() const;
  Eigen::MatrixXd dense() const;
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  /// Throws unless D > 0, A symmetric, nonnegative, zero diagonal.
  void check_structure() const;
};

/// Builds a splitting from a diagonal and a list of symmetric off-diagonal
/// weights (each pair given once).
StandardSplitting make_splitting(const Eigen::VectorXd& diag,
                                 const std::vector<Edge>& off);

/// Weighted Laplacian of the given edges. Each diagonal entry is the sum of
/// its row's off-diagonal entries in storage order, so (D - A) 1 = 0 exactly.
StandardSplitting laplacian_from_edges(int n, const std::vector<Edge>& edges);

StandardSplitting laplacian(const WeightedGraph& g);

/// Deletes row and column `ref_node`.
StandardSplitting ground(const StandardSplitting& s, int ref_node);

/// Graph whose edges are the nonzero off-diagonal entries of `s`.
WeightedGraph support_graph(const StandardSplitting& s);

/// Arcs oriented from the lower to the higher node id.
class DirectedFlowGraph {
 public:
  DirectedFlowGraph() = default;
  explicit DirectedFlowGraph(const WeightedGraph& g);

  int node_count() const { return n_; }
  int arc_count() const { return static_cast<int>(arcs_.size()); }
  const std::vector<std::pair<int, int>>& arcs() const { return arcs_; }
  const WeightedGraph& undirected() const { return undirected_; }
  /// n x E, +1 at the tail and -1 at the head of every arc.
  const Eigen::SparseMatrix<double>& incidence() const { return incidence_; }

 private:
  int n_ = 0;
  std::vector<std::pair<int, int>> arcs_;
  WeightedGraph undirected_;
  Eigen::SparseMatrix<double> incidence_;
};

std::vector<int> hop_distances(const WeightedGraph& g, int k);

/// A pair of nodes realizing diam(G), the lexicographically first one.
std::pair<int, int> diameter_endpoints(const WeightedGraph& g);

enum class GraphKind { kPath, kGrid, kBarbell, kRandom, kScaleFree, kComplete };

struct GraphParams {
  int n = 0;
  int rows = 0;
  int cols = 0;
  int clique = 0;
  int path_len = 0;
  int edges = 0;
  std::uint64_t seed = 1;
};

WeightedGraph path_graph(int n);
WeightedGraph grid_graph(int rows, int cols);
WeightedGraph barbell_graph(int clique, int path_len);
WeightedGraph random_graph(int n, int m, std::uint64_t seed);
WeightedGraph scale_free_graph(int n, std::uint64_t seed);
WeightedGraph complete_graph(int n);
WeightedGraph generate(GraphKind kind, const GraphParams& params);
GraphKind parse_graph_kind(const std::string& name);

/// Same topology, weights drawn uniformly from [lo, hi].
WeightedGraph with_random_weights(const WeightedGraph& g, double lo, double hi,
                                  std::uint64_t seed);

/// Plain text: "n m" then m lines "i j w".
WeightedGraph read_edge_list(std::istream& in);
void write_edge_list(const WeightedGraph& g, std::ostream& out);

}  // namespace lapflow
