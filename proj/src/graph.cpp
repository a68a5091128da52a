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

#include "lapflow/graph.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <queue>
#include <random>
#include <set>
#include <tuple>

#include "lapflow/errors.hpp"

namespace lapflow {

namespace {

std::vector<int> bfs(const WeightedGraph& g, int source) {
  std::vector<int> dist(g.node_count(), -1);
  std::queue<int> frontier;
  dist[source] = 0;
  frontier.push(source);
  while (!frontier.empty()) {
    int u = frontier.front();
    frontier.pop();
    for (const Neighbor& nb : g.neighbors(u)) {
      if (dist[nb.node] < 0) {
        dist[nb.node] = dist[u] + 1;
        frontier.push(nb.node);
      }
    }
  }
  return dist;
}

void require_connected(const WeightedGraph& g, const char* who) {
  if (!g.is_connected()) {
    throw InvalidArgument(std::string(who) + ": graph is not connected");
  }
}

}  // namespace

WeightedGraph::WeightedGraph(int n, std::vector<Edge> edges)
    : n_(n), edges_(std::move(edges)) {
  if (n < 1) throw InvalidArgument("graph needs at least one node");
  std::set<std::pair<int, int>> seen;
  std::vector<int> deg(n, 0);
  for (const Edge& e : edges_) {
    if (e.i < 0 || e.j < 0 || e.i >= n || e.j >= n) {
      throw InvalidArgument("edge endpoint out of range: " +
                            std::to_string(e.i) + "-" + std::to_string(e.j));
    }
    if (e.i == e.j) {
      throw InvalidArgument("self-loop at node " + std::to_string(e.i));
    }
    if (!(e.w > 0.0) || !std::isfinite(e.w)) {
      throw InvalidArgument("edge weight must be positive and finite");
    }
    auto key = std::minmax(e.i, e.j);
    if (!seen.insert(key).second) {
      throw InvalidArgument("duplicate edge " + std::to_string(key.first) +
                            "-" + std::to_string(key.second));
    }
    ++deg[e.i];
    ++deg[e.j];
  }
  offsets_.assign(n + 1, 0);
  for (int k = 0; k < n; ++k) offsets_[k + 1] = offsets_[k] + deg[k];
  adjacency_.resize(offsets_[n]);
  std::vector<int> fill(offsets_.begin(), offsets_.end() - 1);
  for (const Edge& e : edges_) {
    adjacency_[fill[e.i]++] = {e.j, e.w};
    adjacency_[fill[e.j]++] = {e.i, e.w};
  }
  for (int k = 0; k < n; ++k) {
    std::sort(adjacency_.begin() + offsets_[k],
              adjacency_.begin() + offsets_[k + 1],
              [](const Neighbor& a, const Neighbor& b) { return a.node < b.node; });
  }
}

std::span<const Neighbor> WeightedGraph::neighbors(int k) const {
  return {adjacency_.data() + offsets_[k],
          static_cast<std::size_t>(offsets_[k + 1] - offsets_[k])};
}

int WeightedGraph::degree(int k) const { return offsets_[k + 1] - offsets_[k]; }

int WeightedGraph::max_degree() const {
  int best = 0;
  for (int k = 0; k < n_; ++k) best = std::max(best, degree(k));
  return best;
}

double WeightedGraph::max_weight() const {
  double w = 0.0;
  for (const Edge& e : edges_) w = std::max(w, e.w);
  return w;
}

double WeightedGraph::min_weight() const {
  double w = std::numeric_limits<double>::infinity();
  for (const Edge& e : edges_) w = std::min(w, e.w);
  return w;
}

bool WeightedGraph::is_connected() const {
  if (n_ == 0) return false;
  auto dist = bfs(*this, 0);
  return std::none_of(dist.begin(), dist.end(), [](int d) { return d < 0; });
}

int WeightedGraph::diameter() const {
  int best = 0;
  for (int k = 0; k < n_; ++k) {
    auto dist = bfs(*this, k);
    best = std::max(best, *std::max_element(dist.begin(), dist.end()));
  }
  return best;
}

Eigen::SparseMatrix<double> StandardSplitting::matrix() const {
  Eigen::SparseMatrix<double> m = -Eigen::SparseMatrix<double>(off);
  for (int k = 0; k < size(); ++k) m.coeffRef(k, k) += diag[k];
  m.makeCompressed();
  return m;
}

Eigen::MatrixXd StandardSplitting::dense() const {
  Eigen::MatrixXd m = -Eigen::MatrixXd(off);
  m.diagonal() += diag;
  return m;
}

Eigen::VectorXd StandardSplitting::apply(const Eigen::VectorXd& x) const {
  return diag.cwiseProduct(x) - off * x;
}

void StandardSplitting::check_structure() const {
  const int n = size();
  if (off.rows() != n || off.cols() != n) {
    throw InvalidArgument("splitting: off-diagonal part has wrong shape");
  }
  for (int k = 0; k < n; ++k) {
    if (!(diag[k] > 0.0)) {
      throw InvalidArgument("splitting: D[" + std::to_string(k) +
                            "] is not positive");
    }
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(off, k);
         it; ++it) {
      if (it.col() == k && it.value() != 0.0) {
        throw InvalidArgument("splitting: A has a nonzero diagonal");
      }
      if (it.value() < 0.0) {
        throw InvalidArgument("splitting: A has a negative entry");
      }
      if (off.coeff(it.col(), k) != it.value()) {
        throw InvalidArgument("splitting: A is not symmetric");
      }
    }
  }
}

StandardSplitting make_splitting(const Eigen::VectorXd& diag,
                                 const std::vector<Edge>& off) {
  const int n = static_cast<int>(diag.size());
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(2 * off.size());
  for (const Edge& e : off) {
    if (e.i < 0 || e.j < 0 || e.i >= n || e.j >= n || e.i == e.j) {
      throw InvalidArgument("make_splitting: bad off-diagonal index");
    }
    trips.emplace_back(e.i, e.j, e.w);
    trips.emplace_back(e.j, e.i, e.w);
  }
  StandardSplitting s;
  s.diag = diag;
  s.off.resize(n, n);
  s.off.setFromTriplets(trips.begin(), trips.end());
  s.off.makeCompressed();
  return s;
}

StandardSplitting laplacian_from_edges(int n, const std::vector<Edge>& edges) {
  StandardSplitting s = make_splitting(Eigen::VectorXd::Zero(n), edges);
  for (int k = 0; k < n; ++k) {
    double sum = 0.0;
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(s.off, k);
         it; ++it) {
      sum += it.value();
    }
    s.diag[k] = sum;
  }
  return s;
}

StandardSplitting laplacian(const WeightedGraph& g) {
  require_connected(g, "laplacian");
  return laplacian_from_edges(g.node_count(), g.edges());
}

StandardSplitting ground(const StandardSplitting& s, int ref_node) {
  const int n = s.size();
  if (n < 2) throw InvalidArgument("ground: need at least two nodes");
  if (ref_node < 0 || ref_node >= n) {
    throw InvalidArgument("ground: reference node out of range");
  }
  auto shrink = [ref_node](int k) { return k < ref_node ? k : k - 1; };
  Eigen::VectorXd diag(n - 1);
  std::vector<Eigen::Triplet<double>> trips;
  for (int k = 0; k < n; ++k) {
    if (k == ref_node) continue;
    diag[shrink(k)] = s.diag[k];
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(s.off, k);
         it; ++it) {
      if (it.col() == ref_node) continue;
      trips.emplace_back(shrink(k), shrink(static_cast<int>(it.col())),
                         it.value());
    }
  }
  StandardSplitting out;
  out.diag = diag;
  out.off.resize(n - 1, n - 1);
  out.off.setFromTriplets(trips.begin(), trips.end());
  out.off.makeCompressed();
  return out;
}

WeightedGraph support_graph(const StandardSplitting& s) {
  std::vector<Edge> edges;
  for (int k = 0; k < s.size(); ++k) {
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(s.off, k);
         it; ++it) {
      if (it.col() > k && it.value() != 0.0) {
        edges.push_back({k, static_cast<int>(it.col()), it.value()});
      }
    }
  }
  return WeightedGraph(s.size(), std::move(edges));
}

DirectedFlowGraph::DirectedFlowGraph(const WeightedGraph& g)
    : n_(g.node_count()), undirected_(g) {
  require_connected(g, "flow graph");
  std::vector<Eigen::Triplet<double>> trips;
  for (const Edge& e : g.edges()) {
    int tail = std::min(e.i, e.j);
    int head = std::max(e.i, e.j);
    int col = static_cast<int>(arcs_.size());
    arcs_.emplace_back(tail, head);
    trips.emplace_back(tail, col, 1.0);
    trips.emplace_back(head, col, -1.0);
  }
  incidence_.resize(n_, arc_count());
  incidence_.setFromTriplets(trips.begin(), trips.end());
  incidence_.makeCompressed();
}

std::vector<int> hop_distances(const WeightedGraph& g, int k) {
  if (k < 0 || k >= g.node_count()) {
    throw InvalidArgument("hop_distances: node out of range");
  }
  return bfs(g, k);
}

std::pair<int, int> diameter_endpoints(const WeightedGraph& g) {
  std::pair<int, int> best{0, 0};
  int best_d = -1;
  for (int k = 0; k < g.node_count(); ++k) {
    auto dist = bfs(g, k);
    for (int j = k + 1; j < g.node_count(); ++j) {
      if (dist[j] > best_d) {
        best_d = dist[j];
        best = {k, j};
      }
    }
  }
  return best;
}

WeightedGraph path_graph(int n) {
  if (n < 2) throw InvalidArgument("path: n must be at least 2");
  std::vector<Edge> edges;
  for (int k = 0; k + 1 < n; ++k) edges.push_back({k, k + 1, 1.0});
  return WeightedGraph(n, std::move(edges));
}

WeightedGraph grid_graph(int rows, int cols) {
  if (rows < 1 || cols < 1 || rows * cols < 2) {
    throw InvalidArgument("grid: need rows*cols >= 2");
  }
  std::vector<Edge> edges;
  auto id = [cols](int r, int c) { return r * cols + c; };
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (c + 1 < cols) edges.push_back({id(r, c), id(r, c + 1), 1.0});
      if (r + 1 < rows) edges.push_back({id(r, c), id(r + 1, c), 1.0});
    }
  }
  return WeightedGraph(rows * cols, std::move(edges));
}

// Clique A is nodes [0, c), the path is [c, c + p), clique B follows.
WeightedGraph barbell_graph(int clique, int path_len) {
  if (clique < 2 || path_len < 0) {
    throw InvalidArgument("barbell: clique >= 2 and path length >= 0 required");
  }
  const int c = clique;
  const int p = path_len;
  const int n = 2 * c + p;
  std::vector<Edge> edges;
  for (int base : {0, c + p}) {
    for (int a = 0; a < c; ++a) {
      for (int b = a + 1; b < c; ++b) edges.push_back({base + a, base + b, 1.0});
    }
  }
  for (int k = c - 1; k < c + p; ++k) edges.push_back({k, k + 1, 1.0});
  return WeightedGraph(n, std::move(edges));
}

WeightedGraph random_graph(int n, int m, std::uint64_t seed) {
  if (n < 2) throw InvalidArgument("random: n must be at least 2");
  const long long max_edges = static_cast<long long>(n) * (n - 1) / 2;
  if (m < n - 1 || m > max_edges) {
    throw InvalidArgument("random: need n-1 <= m <= n(n-1)/2");
  }
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(max_edges);
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) pairs.emplace_back(a, b);
  }
  std::mt19937_64 rng(seed);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    // Partial Fisher-Yates: the first m slots become a uniform m-subset.
    for (int t = 0; t < m; ++t) {
      std::uniform_int_distribution<long long> pick(t, max_edges - 1);
      std::swap(pairs[t], pairs[pick(rng)]);
    }
    std::vector<Edge> edges;
    edges.reserve(m);
    for (int t = 0; t < m; ++t) edges.push_back({pairs[t].first, pairs[t].second, 1.0});
    std::sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) {
      return std::tie(x.i, x.j) < std::tie(y.i, y.j);
    });
    WeightedGraph g(n, std::move(edges));
    if (g.is_connected()) return g;
  }
  throw InvalidArgument("random: no connected sample after 10000 attempts");
}

WeightedGraph scale_free_graph(int n, std::uint64_t seed) {
  if (n < 2) throw InvalidArgument("scale-free: n must be at least 2");
  std::mt19937_64 rng(seed);
  std::vector<Edge> edges{{0, 1, 1.0}};
  std::vector<int> urn{0, 1};  // one ball per edge endpoint
  for (int v = 2; v < n; ++v) {
    std::uniform_int_distribution<std::size_t> pick(0, urn.size() - 1);
    int target = urn[pick(rng)];
    edges.push_back({target, v, 1.0});
    urn.push_back(target);
    urn.push_back(v);
  }
  return WeightedGraph(n, std::move(edges));
}

WeightedGraph complete_graph(int n) {
  if (n < 2) throw InvalidArgument("complete: n must be at least 2");
  std::vector<Edge> edges;
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) edges.push_back({a, b, 1.0});
  }
  return WeightedGraph(n, std::move(edges));
}

WeightedGraph generate(GraphKind kind, const GraphParams& p) {
  switch (kind) {
    case GraphKind::kPath:
      return path_graph(p.n);
    case GraphKind::kGrid:
      return grid_graph(p.rows, p.cols);
    case GraphKind::kBarbell:
      return barbell_graph(p.clique, p.path_len);
    case GraphKind::kRandom:
      return random_graph(p.n, p.edges, p.seed);
    case GraphKind::kScaleFree:
      return scale_free_graph(p.n, p.seed);
    case GraphKind::kComplete:
      return complete_graph(p.n);
  }
  throw InvalidArgument("unknown graph kind");
}

GraphKind parse_graph_kind(const std::string& name) {
  if (name == "path") return GraphKind::kPath;
  if (name == "grid") return GraphKind::kGrid;
  if (name == "barbell") return GraphKind::kBarbell;
  if (name == "random") return GraphKind::kRandom;
  if (name == "scale-free" || name == "scale_free") return GraphKind::kScaleFree;
  if (name == "complete") return GraphKind::kComplete;
  throw InvalidArgument("unknown graph kind '" + name + "'");
}

WeightedGraph with_random_weights(const WeightedGraph& g, double lo, double hi,
                                  std::uint64_t seed) {
  if (!(lo > 0.0) || hi < lo) throw InvalidArgument("weights: need 0 < lo <= hi");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> draw(lo, hi);
  std::vector<Edge> edges = g.edges();
  for (Edge& e : edges) e.w = draw(rng);
  return WeightedGraph(g.node_count(), std::move(edges));
}

WeightedGraph read_edge_list(std::istream& in) {
  long long n = 0;
  long long m = 0;
  if (!(in >> n >> m) || n < 1 || m < 0) {
    throw Error(ErrorKind::kIo, "edge list: bad 'n m' header");
  }
  std::vector<Edge> edges;
  edges.reserve(m);
  for (long long t = 0; t < m; ++t) {
    Edge e;
    if (!(in >> e.i >> e.j >> e.w)) {
      throw Error(ErrorKind::kIo,
                  "edge list: expected " + std::to_string(m) + " edges, got " +
                      std::to_string(t));
    }
    edges.push_back(e);
  }
  return WeightedGraph(static_cast<int>(n), std::move(edges));
}

void write_edge_list(const WeightedGraph& g, std::ostream& out) {
  out << g.node_count() << ' ' << g.edge_count() << '\n';
  out.precision(17);
  for (const Edge& e : g.edges()) out << e.i << ' ' << e.j << ' ' << e.w << '\n';
}

}  // namespace lapflow
