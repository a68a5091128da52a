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

// Shared fixtures and dense oracles for the unit tests.
#ifndef LAPFLOW_TESTS_HELPERS_HPP_
#define LAPFLOW_TESTS_HELPERS_HPP_

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "lapflow/graph.hpp"

namespace lftest {

// Grounded Laplacian of a weighted random graph.
inline lapflow::StandardSplitting random_grounded(int n, int m, std::uint64_t seed,
                                                  double lo = 1.0, double hi = 10.0) {
  lapflow::WeightedGraph g =
      lapflow::with_random_weights(lapflow::random_graph(n, m, seed), lo, hi, seed + 7);
  return lapflow::ground(lapflow::laplacian(g), 0);
}

inline int edges_for(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int max_m = n * (n - 1) / 2;
  std::uniform_int_distribution<int> pick(n - 1, std::min(max_m, 3 * n));
  return pick(rng);
}

inline Eigen::VectorXd random_vector(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = dist(rng);
  return v;
}

inline Eigen::MatrixXd dense_inverse(const lapflow::StandardSplitting& s) {
  return s.dense().fullPivLu().inverse();
}

inline double m_norm(const Eigen::MatrixXd& m, const Eigen::VectorXd& v) {
  return std::sqrt(v.dot(m * v));
}

// All-pairs hop counts, unreachable pairs left at a large value.
inline std::vector<std::vector<int>> floyd_warshall(const lapflow::WeightedGraph& g) {
  const int n = g.node_count();
  const int inf = 1 << 28;
  std::vector<std::vector<int>> d(n, std::vector<int>(n, inf));
  for (int i = 0; i < n; ++i) d[i][i] = 0;
  for (const lapflow::Edge& e : g.edges()) d[e.i][e.j] = d[e.j][e.i] = 1;
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (d[i][k] + d[k][j] < d[i][j]) d[i][j] = d[i][k] + d[k][j];
  return d;
}

// Dense eigenvalues of a symmetric matrix, ascending.
inline Eigen::VectorXd eigenvalues(const Eigen::MatrixXd& m) {
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m, Eigen::EigenvaluesOnly).eigenvalues();
}

}  // namespace lftest

#endif  // LAPFLOW_TESTS_HELPERS_HPP_
