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

#include <functional>
#include <memory>

#include <Eigen/Core>

#include "lapflow/graph.hpp"
#include "lapflow/spectral.hpp"

namespace lapflow {

/// Factorization reused across right-hand sides. Dense Cholesky up to 1000
/// unknowns, sparse above. A singular Laplacian is factored grounded at
/// node 0.
class DirectSolver {
 public:
  explicit DirectSolver(const StandardSplitting& s);
  ~DirectSolver();
  DirectSolver(DirectSolver&&) noexcept;
  DirectSolver& operator=(DirectSolver&&) noexcept;

  bool laplacian_mode() const;
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Ground-truth solve of (D - A) x = b.
///
/// A singular Laplacian (row sums zero, connected support) is accepted when
/// b sums to zero; the returned solution then has zero mean.
Eigen::VectorXd direct_solve(const StandardSplitting& s,
                             const Eigen::VectorXd& b);

/// The inverse chain A_k = D (D^-1 A)^(2^k), D_k = D, kept implicit.
struct InverseChainView {
  const StandardSplitting* splitting = nullptr;
  int d = 0;
};

/// Iteration count of the preconditioned Richardson loop for accuracy eps.
int richardson_iterations(double eps);

/// Crude solve x0 = Z0 b0 through the chain.
Eigen::VectorXd parallel_rsolve(const InverseChainView& chain,
                                const Eigen::VectorXd& b0);

/// Called after each Richardson update with (iteration, y).
using IterateObserver = std::function<void(int, const Eigen::VectorXd&)>;

Eigen::VectorXd parallel_esolve(const InverseChainView& chain,
                                const Eigen::VectorXd& b0, double eps,
                                const IterateObserver& observer = {});

/// sqrt(v' M v).
double energy_norm(const StandardSplitting& s, const Eigen::VectorXd& v);

}  // namespace lapflow
