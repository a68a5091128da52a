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
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "lapflow/errors.hpp"
#include "lapflow/graph.hpp"
#include "lapflow/spectral.hpp"

namespace lapflow {

/// Strictly convex per-arc cost with an invertible derivative.
class EdgeCost {
 public:
  virtual ~EdgeCost() = default;
  virtual std::string name() const = 0;
  virtual double value(double x) const = 0;
  virtual double slope(double x) const = 0;
  virtual double curvature(double x) const = 0;
  /// Inverse of slope().
  virtual double slope_inverse(double y) const = 0;
  /// Lower bound on curvature over the whole line.
  virtual double curvature_min() const = 0;
  /// Upper bound on curvature over [-box, box].
  virtual double curvature_max(double box) const = 0;
  /// Lipschitz constant of 1 / curvature.
  virtual double inverse_curvature_lipschitz() const = 0;
};

/// exp(x) + exp(-x).
class ExpCost final : public EdgeCost {
 public:
  std::string name() const override { return "exp"; }
  double value(double x) const override;
  double slope(double x) const override;
  double curvature(double x) const override;
  double slope_inverse(double y) const override;
  double curvature_min() const override { return 2.0; }
  double curvature_max(double box) const override;
  double inverse_curvature_lipschitz() const override { return 0.25; }
};

/// x^2 / 2.
class QuadraticCost final : public EdgeCost {
 public:
  std::string name() const override { return "quadratic"; }
  double value(double x) const override { return 0.5 * x * x; }
  double slope(double x) const override { return x; }
  double curvature(double) const override { return 1.0; }
  double slope_inverse(double y) const override { return y; }
  double curvature_min() const override { return 1.0; }
  double curvature_max(double) const override { return 1.0; }
  double inverse_curvature_lipschitz() const override { return 0.0; }
};

std::shared_ptr<const EdgeCost> make_cost(const std::string& name);

struct FlowProblem {
  DirectedFlowGraph graph;
  Eigen::VectorXd b;
  std::vector<std::shared_ptr<const EdgeCost>> costs;  // one per arc

  int node_count() const { return graph.node_count(); }
  int arc_count() const { return graph.arc_count(); }
  /// Throws unless b sums to zero, sizes agree and the graph is connected.
  void validate() const;
};

/// Unit source at one end of a diameter-realizing pair, unit sink at the
/// other, scaled by `magnitude`.
Eigen::VectorXd diameter_source_sink(const WeightedGraph& g, double magnitude = 1.0);

FlowProblem make_flow_problem(const WeightedGraph& g, const Eigen::VectorXd& b,
                              const std::string& cost = "exp");

/// Text format: "n m", m lines "i j w" (arc i -> j), "cost <name>", "b" and
/// n values.
FlowProblem read_flow_problem(std::istream& in);
void write_flow_problem(const FlowProblem& p, std::ostream& out);

struct DualState {
  Eigen::VectorXd lambda;
  Eigen::VectorXd x;  // x(lambda), per arc
  Eigen::VectorXd g;  // A x - b
  int k = 0;
};

/// x_e = [cost_e']^-1(lambda_tail - lambda_head).
Eigen::VectorXd primal_recovery(const Eigen::VectorXd& lambda, const FlowProblem& p);

/// Node-local: outflow minus inflow minus b.
Eigen::VectorXd dual_gradient(const Eigen::VectorXd& x, const FlowProblem& p);

DualState make_dual_state(const Eigen::VectorXd& lambda, const FlowProblem& p, int k = 0);

/// Convex dual: sum_e [(l_i - l_j) x_e - cost(x_e)] - lambda' b.
double dual_value(const Eigen::VectorXd& lambda, const FlowProblem& p);

/// Sum of arc costs.
double primal_objective(const Eigen::VectorXd& x, const FlowProblem& p);

/// Weighted Laplacian with arc weights 1 / cost''(x_e).
StandardSplitting dual_hessian(const Eigen::VectorXd& x, const FlowProblem& p);

/// Laplacian of the unweighted undirected support.
StandardSplitting unweighted_laplacian(const FlowProblem& p);

double laplacian_norm(const StandardSplitting& lap, const Eigen::VectorXd& v);

enum class SolverMode { kExactOracle, kFullDistributed, kRhopDistributed };

struct DirectionConfig {
  SolverMode mode = SolverMode::kRhopDistributed;
  double eps = 1e-4;
  int R = 1;
  int ground = 0;
  KappaSource kappa_source = KappaSource::kEstimated;
};

struct DirectionResult {
  Eigen::VectorXd d;
  long long messages = 0;
  int rounds = 0;
  int max_hop = 0;
  double kappa = 0.0;
  int chain_d = 0;
};

/// Approximate Newton direction: ground, solve H d = -g on the rest, put 0
/// back at the reference node and shift to zero mean.
DirectionResult newton_direction(const DualState& state, const FlowProblem& p,
                                 const DirectionConfig& cfg);

struct ConvergenceConstants {
  double gamma = 0.0;
  double Gamma = 0.0;
  double delta = 0.0;
  double B = 0.0;
  double mu2 = 0.0;
  double mun = 0.0;
  double eps = 0.0;
  double alpha_star = 0.0;
  double xi = 0.0;
  double zeta = 0.0;
  double eta0 = 0.0;
  double eta1 = 0.0;
  /// Guaranteed decrease of the dual per strict-phase step.
  double strict_decrement = 0.0;
};

/// Upper end of the admissible eps interval, (mu2/mun) sqrt(gamma/Gamma).
double max_theory_eps(double gamma, double Gamma, double mu2, double mun);

ConvergenceConstants convergence_constants(const FlowProblem& p, double eps,
                                           double box = 5.0);

/// Step size from the theory; throws if eps is outside its interval.
double alpha_star(const ConvergenceConstants& c, double eps);

enum class Method { kSddmNewton, kExactNewton, kSubgradient, kAddNeumann };
enum class StepPolicy { kFixed, kAlphaStar, kBacktracking };

Method parse_method(const std::string& name);
StepPolicy parse_step_policy(const std::string& name);
const char* to_string(Method m);
const char* to_string(StepPolicy s);

struct OptimizeConfig {
  Method method = Method::kSddmNewton;
  StepPolicy step = StepPolicy::kBacktracking;
  /// Step for the fixed policy; <= 0 picks 1/L for subgradient and 1 for the
  /// Newton-type directions (ADD included).
  double fixed_step = 0.0;
  double eps = 1e-4;
  int R = 1;
  SolverMode solver = SolverMode::kRhopDistributed;
  KappaSource kappa_source = KappaSource::kEstimated;
  int ground = 0;
  int neumann_terms = 2;
  int max_iters = 1000;
  double feas_threshold = 1e-5;
  double box = 5.0;
  /// Stop after this many iterations with a terminal-phase label (0 = off).
  int stop_after_terminal = 0;
};

struct TraceRow {
  int iter = 0;
  double objective = 0.0;
  double feasibility = 0.0;
  double grad_lnorm = 0.0;
  double step = 0.0;
  std::string phase;
  long long messages = 0;
  double dual = 0.0;
};

struct Trace {
  std::vector<TraceRow> rows;
  Eigen::VectorXd lambda;
  bool converged = false;
  bool constants_valid = false;
  ConvergenceConstants constants;

  /// First iteration whose feasibility is at most `threshold`, or -1.
  int iterations_to(double threshold) const;
  long long total_messages() const;
  void write_csv(std::ostream& out) const;
};

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, Trace partial)
      : Error(ErrorKind::kNumerical, what), trace_(std::move(partial)) {}
  const Trace& trace() const noexcept { return trace_; }

 private:
  Trace trace_;
};

Trace optimize(const FlowProblem& p, const OptimizeConfig& cfg,
               const Eigen::VectorXd& lambda0 = {});

struct PhaseReport {
  std::vector<std::string> labels;
  int strict_count = 0;
  int quadratic_count = 0;
  int terminal_count = 0;
  /// Bounds on iterations in the strict and quadratic phases and on the
  /// gradient norm in the terminal phase.
  double n1_bound = 0.0;
  double n2_bound = 0.0;
  double terminal_radius = 0.0;
};

/// Labels by the gradient Laplacian norm: above eta1 strict, [eta0, eta1]
/// quadratic, below eta0 terminal. q* is taken from the last trace row.
PhaseReport classify_phase(const Trace& trace, const ConvergenceConstants& c);

}  // namespace lapflow
