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
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "lapflow/graph.hpp"

namespace lapflow {

struct SddmReport {
  bool positive_diagonal = true;
  bool symmetric = true;
  bool nonpositive_offdiagonal = true;  // in M, i.e. A >= 0
  bool diagonally_dominant = true;
  std::vector<int> dominance_violations;
  std::vector<int> strict_rows;
  /// Every connected component of the support owns a strictly dominant row.
  bool strict_in_every_component = false;
  bool sdd = false;
  bool sddm = false;

  std::string summary() const;
};

SddmReport validate_sddm(const StandardSplitting& s);

/// n^3 Wmax/Wmin, or n^4 Wmax/Wmin for a grounded system.
double condition_bound(const WeightedGraph& g, bool grounded);

struct ConditionEstimate {
  double lambda_max = 0.0;
  double lambda_min = 0.0;
  double kappa = 0.0;
  int iterations = 0;
};

/// Power iteration for the top eigenvalue and inverse iteration (through a
/// direct factorization) for the bottom one. A singular Laplacian is handled
/// on the complement of the constant vector.
ConditionEstimate estimate_condition(const StandardSplitting& s,
                                     double tol = 1e-9, int max_iters = 20000);

enum class KappaSource { kAnalyticBound, kEstimated, kGiven };

const char* to_string(KappaSource source);

struct ChainSpec {
  double kappa = 1.0;
  KappaSource kappa_source = KappaSource::kGiven;
  int d = 0;
  double eps_d = 0.0;
};

/// Multiplier in d = ceil(log2(c * kappa)).
inline constexpr int kChainConstant = 4;

ChainSpec chain_length(double kappa,
                       KappaSource source = KappaSource::kGiven);

using LinearOp = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct OrderCheck {
  bool ok = true;
  /// Largest |log(v'Yv / v'Xv)| seen over all probes.
  double worst_log_ratio = 0.0;
  Eigen::VectorXd violating;
};

/// Samples random probes v and checks exp(-alpha) v'Xv <= v'Yv <= exp(alpha)
/// v'Xv. Only a necessary condition for the Loewner sandwich.
OrderCheck approx_order_check(const LinearOp& x_apply, const LinearOp& y_apply,
                              int n, double alpha, int probes,
                              std::uint64_t seed, bool project_out_ones = false);

}  // namespace lapflow
