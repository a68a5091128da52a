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

#include "lapflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

#include <Eigen/Eigenvalues>

#include "lapflow/distributed.hpp"
#include "lapflow/reference.hpp"

namespace lapflow {

double ExpCost::value(double x) const { return std::exp(x) + std::exp(-x); }
double ExpCost::slope(double x) const { return 2.0 * std::sinh(x); }
double ExpCost::curvature(double x) const { return 2.0 * std::cosh(x); }
double ExpCost::slope_inverse(double y) const { return std::asinh(0.5 * y); }
double ExpCost::curvature_max(double box) const { return 2.0 * std::cosh(box); }

std::shared_ptr<const EdgeCost> make_cost(const std::string& name) {
  if (name == "exp") return std::make_shared<ExpCost>();
  if (name == "quadratic") return std::make_shared<QuadraticCost>();
  throw InvalidArgument("unknown cost '" + name + "' (expected exp or quadratic)");
}

void FlowProblem::validate() const {
  const int n = node_count();
  if (b.size() != n) throw InvalidArgument("flow problem: b has the wrong length");
  if (static_cast<int>(costs.size()) != arc_count()) {
    throw InvalidArgument("flow problem: need one cost per arc");
  }
  for (const auto& c : costs) {
    if (!c) throw InvalidArgument("flow problem: missing cost");
  }
  if (std::abs(b.sum()) > 1e-10 * std::max(1.0, b.lpNorm<1>())) {
    throw InvalidArgument("flow problem: b must sum to zero");
  }
  if (!graph.undirected().is_connected()) {
    throw InvalidArgument("flow problem: graph is not connected");
  }
}

Eigen::VectorXd diameter_source_sink(const WeightedGraph& g, double magnitude) {
  auto [u, v] = diameter_endpoints(g);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(g.node_count());
  b[u] = magnitude;
  b[v] = -magnitude;
  return b;
}

FlowProblem make_flow_problem(const WeightedGraph& g, const Eigen::VectorXd& b,
                              const std::string& cost) {
  FlowProblem p;
  p.graph = DirectedFlowGraph(g);
  p.b = b;
  p.costs.assign(p.graph.arc_count(), make_cost(cost));
  p.validate();
  return p;
}

FlowProblem read_flow_problem(std::istream& in) {
  WeightedGraph g = read_edge_list(in);
  std::string word;
  std::string cost = "exp";
  if (!(in >> word) || word != "cost" || !(in >> cost)) {
    throw Error(ErrorKind::kIo, "flow problem: expected 'cost <name>'");
  }
  if (!(in >> word) || word != "b") {
    throw Error(ErrorKind::kIo, "flow problem: expected 'b' section");
  }
  Eigen::VectorXd b(g.node_count());
  for (int k = 0; k < g.node_count(); ++k) {
    if (!(in >> b[k])) throw Error(ErrorKind::kIo, "flow problem: b is too short");
  }
  // Arcs are re-oriented low -> high. Both supported costs are even, so a
  // reversed arc only flips the sign of its reported flow.
  return make_flow_problem(g, b, cost);
}

void write_flow_problem(const FlowProblem& p, std::ostream& out) {
  out.precision(17);
  out << p.node_count() << ' ' << p.arc_count() << '\n';
  const auto& edges = p.graph.undirected().edges();
  for (int e = 0; e < p.arc_count(); ++e) {
    out << p.graph.arcs()[e].first << ' ' << p.graph.arcs()[e].second << ' '
        << edges[e].w << '\n';
  }
  out << "cost " << p.costs.front()->name() << "\nb\n";
  for (int k = 0; k < p.node_count(); ++k) out << p.b[k] << '\n';
}

Eigen::VectorXd primal_recovery(const Eigen::VectorXd& lambda, const FlowProblem& p) {
  const auto& arcs = p.graph.arcs();
  Eigen::VectorXd x(p.arc_count());
  for (int e = 0; e < p.arc_count(); ++e) {
    const double diff = lambda[arcs[e].first] - lambda[arcs[e].second];
    x[e] = p.costs[e]->slope_inverse(diff);
    if (!std::isfinite(x[e])) {
      throw NumericalFailure("primal recovery failed on arc " + std::to_string(e) +
                             " (" + std::to_string(arcs[e].first) + "->" +
                             std::to_string(arcs[e].second) + ")");
    }
  }
  return x;
}

Eigen::VectorXd dual_gradient(const Eigen::VectorXd& x, const FlowProblem& p) {
  Eigen::VectorXd g = -p.b;
  const auto& arcs = p.graph.arcs();
  for (int e = 0; e < p.arc_count(); ++e) {
    g[arcs[e].first] += x[e];
    g[arcs[e].second] -= x[e];
  }
  return g;
}

DualState make_dual_state(const Eigen::VectorXd& lambda, const FlowProblem& p, int k) {
  DualState s;
  s.lambda = lambda;
  s.x = primal_recovery(lambda, p);
  s.g = dual_gradient(s.x, p);
  s.k = k;
  return s;
}

double dual_value(const Eigen::VectorXd& lambda, const FlowProblem& p) {
  const Eigen::VectorXd x = primal_recovery(lambda, p);
  const auto& arcs = p.graph.arcs();
  double q = -lambda.dot(p.b);
  for (int e = 0; e < p.arc_count(); ++e) {
    const double diff = lambda[arcs[e].first] - lambda[arcs[e].second];
    q += diff * x[e] - p.costs[e]->value(x[e]);
  }
  return q;
}

double primal_objective(const Eigen::VectorXd& x, const FlowProblem& p) {
  double f = 0.0;
  for (int e = 0; e < p.arc_count(); ++e) f += p.costs[e]->value(x[e]);
  return f;
}

StandardSplitting dual_hessian(const Eigen::VectorXd& x, const FlowProblem& p) {
  std::vector<Edge> edges;
  edges.reserve(p.arc_count());
  const auto& arcs = p.graph.arcs();
  for (int e = 0; e < p.arc_count(); ++e) {
    const double w = 1.0 / p.costs[e]->curvature(x[e]);
    if (!(w > 0.0) || !std::isfinite(w)) {
      throw NumericalFailure("Hessian weight underflow on arc " + std::to_string(e));
    }
    edges.push_back({arcs[e].first, arcs[e].second, w});
  }
  return laplacian_from_edges(p.node_count(), edges);
}

StandardSplitting unweighted_laplacian(const FlowProblem& p) {
  std::vector<Edge> edges;
  for (const auto& [t, h] : p.graph.arcs()) edges.push_back({t, h, 1.0});
  return laplacian_from_edges(p.node_count(), edges);
}

double laplacian_norm(const StandardSplitting& lap, const Eigen::VectorXd& v) {
  return energy_norm(lap, v);
}

namespace {

Eigen::VectorXd insert_ground(const Eigen::VectorXd& reduced, int ground) {
  const int n = static_cast<int>(reduced.size()) + 1;
  Eigen::VectorXd full(n);
  full.head(ground) = reduced.head(ground);
  full[ground] = 0.0;
  full.tail(n - ground - 1) = reduced.tail(n - ground - 1);
  return full;
}

Eigen::VectorXd drop_ground(const Eigen::VectorXd& v, int ground) {
  const int n = static_cast<int>(v.size());
  Eigen::VectorXd out(n - 1);
  out.head(ground) = v.head(ground);
  out.tail(n - ground - 1) = v.tail(n - ground - 1);
  return out;
}

std::pair<double, double> laplacian_extremes(const StandardSplitting& lap) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(lap.dense(),
                                                     Eigen::EigenvaluesOnly);
  const auto& ev = eig.eigenvalues();
  return {ev.size() > 1 ? ev[1] : ev[0], ev[ev.size() - 1]};
}

}  // namespace

DirectionResult newton_direction(const DualState& state, const FlowProblem& p,
                                 const DirectionConfig& cfg) {
  const int n = p.node_count();
  if (cfg.ground < 0 || cfg.ground >= n) {
    throw InvalidArgument("newton_direction: reference node out of range");
  }
  DirectionResult out;
  out.d = Eigen::VectorXd::Zero(n);
  if (state.g.lpNorm<Eigen::Infinity>() == 0.0) return out;

  const StandardSplitting h = dual_hessian(state.x, p);
  const StandardSplitting grounded = ground(h, cfg.ground);
  const Eigen::VectorXd rhs = -drop_ground(state.g, cfg.ground);
  Eigen::VectorXd reduced;
  if (cfg.mode == SolverMode::kExactOracle) {
    reduced = direct_solve(grounded, rhs);
  } else {
    double kappa = 0.0;
    if (cfg.kappa_source == KappaSource::kEstimated) {
      kappa = estimate_condition(grounded).kappa;
    } else {
      std::vector<Edge> weighted;
      for (const auto& [t, hd] : p.graph.arcs()) {
        weighted.push_back({t, hd, h.off.coeff(t, hd)});
      }
      kappa = condition_bound(WeightedGraph(n, weighted), /*grounded=*/true);
    }
    ChainSpec chain = chain_length(kappa, cfg.kappa_source);
    DistributedSolver solver(grounded, chain);
    SolveRun run = cfg.mode == SolverMode::kFullDistributed
                       ? solver.distr_esolve(rhs, cfg.eps)
                       : solver.edist_rsolve(rhs, cfg.R, cfg.eps);
    Transcript setup = cfg.mode == SolverMode::kFullDistributed
                           ? solver.full_setup_transcript()
                           : solver.setup_transcript(cfg.R);
    reduced = run.x;
    out.messages = run.transcript.messages_total + setup.messages_total;
    out.rounds = run.transcript.rounds + setup.rounds;
    out.max_hop = std::max(run.transcript.max_hop_used, setup.max_hop_used);
    out.kappa = kappa;
    out.chain_d = chain.d;
  }
  out.d = insert_ground(reduced, cfg.ground);
  out.d.array() -= out.d.mean();
  return out;
}

double max_theory_eps(double gamma, double Gamma, double mu2, double mun) {
  return (mu2 / mun) * std::sqrt(gamma / Gamma);
}

namespace {

double alpha_star_formula(double gamma, double Gamma, double mu2, double mun,
                          double eps) {
  const double ratio = (gamma / Gamma) * (mu2 / mun);
  const double a = std::exp(-eps * eps) / ((1.0 + eps) * (1.0 + eps)) * ratio * ratio;
  return std::clamp(a, std::numeric_limits<double>::min(), 1.0);
}

}  // namespace

ConvergenceConstants convergence_constants(const FlowProblem& p, double eps,
                                           double box) {
  ConvergenceConstants c;
  c.eps = eps;
  c.gamma = std::numeric_limits<double>::infinity();
  for (const auto& cost : p.costs) {
    c.gamma = std::min(c.gamma, cost->curvature_min());
    c.Gamma = std::max(c.Gamma, cost->curvature_max(box));
    c.delta = std::max(c.delta, cost->inverse_curvature_lipschitz());
  }
  auto [mu2, mun] = laplacian_extremes(unweighted_laplacian(p));
  c.mu2 = mu2;
  c.mun = mun;
  c.B = mun * c.delta / (c.gamma * std::sqrt(mu2));
  c.alpha_star = alpha_star_formula(c.gamma, c.Gamma, mu2, mun, eps);
  const double spread = eps * (mun / mu2) * std::sqrt(c.Gamma / c.gamma);
  c.xi = std::sqrt(1.0 - c.alpha_star + c.alpha_star * spread);
  const double ag = c.alpha_star * c.Gamma * (1.0 + eps);
  c.zeta = c.B * ag * ag / (2.0 * mu2 * mu2);
  c.eta0 = c.xi * (1.0 - c.xi) / c.zeta;
  c.eta1 = (1.0 - c.xi) / c.zeta;
  c.strict_decrement = 0.5 * std::exp(-2.0 * eps * eps) / ((1.0 + eps) * (1.0 + eps)) *
                       std::pow(c.gamma, 3) / (c.Gamma * c.Gamma) * (mu2 * mu2) /
                       std::pow(mun, 4) * c.eta1 * c.eta1;
  return c;
}

double alpha_star(const ConvergenceConstants& c, double eps) {
  const double limit = max_theory_eps(c.gamma, c.Gamma, c.mu2, c.mun);
  if (!(eps >= 0.0) || eps >= limit) {
    throw InvalidArgument("alpha_star: eps = " + std::to_string(eps) +
                          " is outside [0, " + std::to_string(limit) +
                          "); use a smaller eps");
  }
  return alpha_star_formula(c.gamma, c.Gamma, c.mu2, c.mun, eps);
}

Method parse_method(const std::string& name) {
  if (name == "sddm-newton" || name == "sddm_newton") return Method::kSddmNewton;
  if (name == "exact-newton" || name == "exact_newton") return Method::kExactNewton;
  if (name == "subgradient") return Method::kSubgradient;
  if (name == "add" || name == "add_neumann" || name == "add-neumann") {
    return Method::kAddNeumann;
  }
  throw InvalidArgument("unknown method '" + name + "'");
}

StepPolicy parse_step_policy(const std::string& name) {
  if (name == "fixed") return StepPolicy::kFixed;
  if (name == "alpha-star" || name == "alpha_star") return StepPolicy::kAlphaStar;
  if (name == "backtracking") return StepPolicy::kBacktracking;
  throw InvalidArgument("unknown step policy '" + name + "'");
}

const char* to_string(Method m) {
  switch (m) {
    case Method::kSddmNewton:
      return "sddm-newton";
    case Method::kExactNewton:
      return "exact-newton";
    case Method::kSubgradient:
      return "subgradient";
    case Method::kAddNeumann:
      return "add";
  }
  return "unknown";
}

const char* to_string(StepPolicy s) {
  switch (s) {
    case StepPolicy::kFixed:
      return "fixed";
    case StepPolicy::kAlphaStar:
      return "alpha-star";
    case StepPolicy::kBacktracking:
      return "backtracking";
  }
  return "unknown";
}

int Trace::iterations_to(double threshold) const {
  for (const TraceRow& r : rows) {
    if (r.feasibility <= threshold) return r.iter;
  }
  return -1;
}

long long Trace::total_messages() const {
  long long total = 0;
  for (const TraceRow& r : rows) total += r.messages;
  return total;
}

void Trace::write_csv(std::ostream& out) const {
  out << "iter,objective,feasibility,grad_lnorm,step,phase,messages\n";
  out.precision(17);
  for (const TraceRow& r : rows) {
    out << r.iter << ',' << r.objective << ',' << r.feasibility << ','
        << r.grad_lnorm << ',' << r.step << ',' << r.phase << ',' << r.messages
        << '\n';
  }
}

namespace {

std::string phase_label(double lnorm, const ConvergenceConstants& c) {
  if (lnorm > c.eta1) return "strict";
  if (lnorm >= c.eta0) return "quadratic";
  return "terminal";
}

// -sum_{i=0}^{N} (D^-1 A)^i D^-1 g over the Hessian splitting.
Eigen::VectorXd neumann_direction(const StandardSplitting& h, const Eigen::VectorXd& g,
                                  int terms) {
  const Eigen::VectorXd dinv = h.diag.cwiseInverse();
  Eigen::VectorXd term = dinv.cwiseProduct(g);
  Eigen::VectorXd sum = term;
  for (int i = 1; i <= terms; ++i) {
    term = dinv.cwiseProduct(h.off * term);
    sum += term;
  }
  return -sum;
}

}  // namespace

Trace optimize(const FlowProblem& p, const OptimizeConfig& cfg,
               const Eigen::VectorXd& lambda0) {
  p.validate();
  const int n = p.node_count();
  const long long exchange = 2LL * p.arc_count();
  Trace trace;
  Eigen::VectorXd lambda =
      lambda0.size() == 0 ? Eigen::VectorXd(Eigen::VectorXd::Zero(n)) : lambda0;
  if (lambda.size() != n) throw InvalidArgument("optimize: lambda0 has wrong length");
  if (cfg.max_iters < 0) throw InvalidArgument("optimize: max_iters must be >= 0");

  trace.constants = convergence_constants(p, cfg.eps, cfg.box);
  const ConvergenceConstants& consts = trace.constants;
  trace.constants_valid =
      cfg.eps > 0.0 &&
      cfg.eps < max_theory_eps(consts.gamma, consts.Gamma, consts.mu2, consts.mun) &&
      std::isfinite(consts.eta1);
  const StandardSplitting lap = unweighted_laplacian(p);

  double fixed = cfg.fixed_step;
  if (fixed <= 0.0) {
    fixed = cfg.method == Method::kSubgradient ? consts.gamma / consts.mun : 1.0;
  }
  double astar = 0.0;
  if (cfg.step == StepPolicy::kAlphaStar) astar = alpha_star(consts, cfg.eps);

  DirectionConfig dcfg;
  dcfg.eps = cfg.eps;
  dcfg.R = cfg.R;
  dcfg.ground = cfg.ground;
  dcfg.kappa_source = cfg.kappa_source;
  dcfg.mode = cfg.method == Method::kExactNewton ? SolverMode::kExactOracle : cfg.solver;

  int terminal_run = 0;
  for (int k = 0;; ++k) {
    DualState state;
    TraceRow row;
    row.iter = k;
    try {
      state = make_dual_state(lambda, p, k);
      row.objective = primal_objective(state.x, p);
      row.dual = dual_value(lambda, p);
    } catch (const Error& e) {
      throw DivergenceError(std::string("optimize: ") + e.what(), trace);
    }
    if (!std::isfinite(row.objective) || !std::isfinite(row.dual)) {
      trace.lambda = lambda;
      throw DivergenceError("optimize: objective is not finite at iteration " +
                                std::to_string(k),
                            trace);
    }
    row.feasibility = state.g.norm();
    row.grad_lnorm = laplacian_norm(lap, state.g);
    row.phase = trace.constants_valid ? phase_label(row.grad_lnorm, consts)
                                      : "unclassified";
    if (row.feasibility <= cfg.feas_threshold) {
      trace.converged = true;
      trace.rows.push_back(row);
      break;
    }
    if (k >= cfg.max_iters) {
      trace.rows.push_back(row);
      break;
    }
    if (row.phase == "terminal") {
      ++terminal_run;
      if (cfg.stop_after_terminal > 0 && terminal_run > cfg.stop_after_terminal) {
        trace.rows.push_back(row);
        break;
      }
    }

    Eigen::VectorXd d;
    long long messages = 0;
    switch (cfg.method) {
      case Method::kSddmNewton:
      case Method::kExactNewton: {
        DirectionResult dir = newton_direction(state, p, dcfg);
        d = std::move(dir.d);
        messages = dir.messages + (cfg.method == Method::kSddmNewton ? exchange : 0);
        break;
      }
      case Method::kSubgradient:
        d = -state.g;
        messages = exchange;
        break;
      case Method::kAddNeumann:
        d = neumann_direction(dual_hessian(state.x, p), state.g, cfg.neumann_terms);
        messages = exchange * (1 + cfg.neumann_terms);
        break;
    }

    double alpha = fixed;
    if (cfg.step == StepPolicy::kAlphaStar) {
      alpha = astar;
    } else if (cfg.step == StepPolicy::kBacktracking) {
      const double slope = state.g.dot(d);
      alpha = 1.0;
      for (int t = 0; t < 60; ++t) {
        double trial = std::numeric_limits<double>::infinity();
        try {
          trial = dual_value(lambda + alpha * d, p);
        } catch (const Error&) {
        }
        if (std::isfinite(trial) && trial <= row.dual + 1e-4 * alpha * slope) break;
        alpha *= 0.5;
      }
    }
    row.step = alpha;
    row.messages = messages;
    trace.rows.push_back(row);
    lambda += alpha * d;
  }
  trace.lambda = lambda;
  return trace;
}

PhaseReport classify_phase(const Trace& trace, const ConvergenceConstants& c) {
  PhaseReport r;
  int first_quadratic = -1;
  for (const TraceRow& row : trace.rows) {
    std::string label = phase_label(row.grad_lnorm, c);
    if (label == "strict") ++r.strict_count;
    if (label == "quadratic") {
      ++r.quadratic_count;
      if (first_quadratic < 0) first_quadratic = row.iter;
    }
    if (label == "terminal") ++r.terminal_count;
    r.labels.push_back(std::move(label));
  }
  const double spread = c.eps * (c.mun / c.mu2) * std::sqrt(c.Gamma / c.gamma);
  const double shrink = 1.0 - spread;
  if (!trace.rows.empty()) {
    const double gap = trace.rows.front().dual - trace.rows.back().dual;
    r.n1_bound = 2.0 * c.delta * c.delta * (1.0 + c.eps) * (1.0 + c.eps) * gap *
                 (c.Gamma * c.Gamma / c.gamma) * (c.mun * c.mun) /
                 std::pow(c.mu2, 3) / (shrink * shrink);
  }
  r.n2_bound = std::numeric_limits<double>::quiet_NaN();
  if (first_quadratic >= 0) {
    const double ratio = trace.rows[first_quadratic].grad_lnorm / c.eta1;
    if (ratio > 0.0 && ratio < 1.0) {
      r.n2_bound = std::log2(0.5 * std::log2(1.0 - c.alpha_star * shrink) /
                             std::log2(ratio));
    }
  }
  r.terminal_radius = 2.0 * shrink * c.mun * std::sqrt(c.mu2) /
                      (std::exp(-c.eps * c.eps) * c.gamma * c.delta);
  return r;
}

}  // namespace lapflow
