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

#include <iosfwd>
#include <map>
#include <memory>
#include <vector>

#include <Eigen/Core>

#include "lapflow/graph.hpp"
#include "lapflow/netsim.hpp"
#include "lapflow/reference.hpp"
#include "lapflow/spectral.hpp"

namespace lapflow {

struct SolveRun {
  Eigen::VectorXd x;
  Transcript transcript;
  int richardson_iterations = 0;
  int crude_solves = 0;
};

/// What node k holds after the most recent crude solve.
struct NodeSolverState {
  int k = 0;
  LocalRow row_m;
  SparseRow forward_power;   // row k of (A D^-1)^R, or empty in full mode
  SparseRow backward_power;  // row k of (D^-1 A)^R
  std::vector<double> b_components;  // [b_i]_k, i = 0..d
  std::vector<double> x_components;  // [x_i]_k, i = 0..d
};

/// Node-local SDDM solvers running on the synchronous network simulator.
///
/// The network topology is the support of A. R-hop modes run with strict
/// enforcement at radius R; the full-communication mode gathers at up to the
/// diameter with enforcement off. Row powers are computed once per mode and
/// reused by every later solve; their traffic is kept in a setup transcript.
class DistributedSolver {
 public:
  DistributedSolver(StandardSplitting s, ChainSpec chain);
  ~DistributedSolver();

  const StandardSplitting& system() const { return s_; }
  const ChainSpec& chain() const { return chain_; }
  const Topology& topology() const { return *topo_; }

  SolveRun distr_rsolve(const Eigen::VectorXd& b0);
  SolveRun distr_esolve(const Eigen::VectorXd& b0, double eps,
                        const IterateObserver& observer = {});
  SolveRun rdist_rsolve(const Eigen::VectorXd& b0, int R);
  SolveRun edist_rsolve(const Eigen::VectorXd& b0, int R, double eps,
                        const IterateObserver& observer = {});

  /// Rows of (A D^-1)^R and (D^-1 A)^R, built over 1..R hop gathers.
  const std::vector<SparseRow>& f0_rows(int R);
  const std::vector<SparseRow>& f1_rows(int R);

  /// Traffic spent building row powers; empty until the mode is first used.
  Transcript setup_transcript(int R) const;
  Transcript full_setup_transcript() const;

  NodeSolverState node_state(int k) const;

 private:
  struct Mode;
  struct Stage;

  Mode& rhop_mode(int R);
  Mode& full_mode();
  std::vector<Stage> schedule(const Mode& mode) const;
  SolveRun run(Mode& mode, const Eigen::VectorXd& b0, int q,
               const IterateObserver& observer);

  StandardSplitting s_;
  ChainSpec chain_;
  std::unique_ptr<Topology> topo_;
  std::vector<LocalRow> rows_;
  std::map<int, std::unique_ptr<Mode>> rhop_;
  std::unique_ptr<Mode> full_;
  const Mode* last_mode_ = nullptr;
  std::vector<std::vector<double>> last_b_;
  std::vector<std::vector<double>> last_x_;
};

bool is_power_of_two(int r);

/// Writes "node,x0,xtilde".
void write_solution_csv(const Eigen::VectorXd& crude, const Eigen::VectorXd& refined,
                        std::ostream& out);

}  // namespace lapflow
