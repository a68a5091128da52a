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

// Command-line front end. Talks to the library only through lapflow.h.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "lapflow/lapflow.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

struct Failure {
  int code;
  std::string message;
};

void check(lf_status st, const char* what) {
  if (st == LF_OK) return;
  const int code = (st == LF_ERR_INVALID_ARGUMENT || st == LF_ERR_IO) ? kExitUsage
                                                                      : kExitNumerical;
  throw Failure{code, std::string(what) + ": " + lf_last_error()};
}

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using GraphPtr = std::unique_ptr<lf_graph, Deleter<lf_graph, lf_graph_free>>;
using SystemPtr = std::unique_ptr<lf_system, Deleter<lf_system, lf_system_free>>;
using ResultPtr = std::unique_ptr<lf_solve_result, Deleter<lf_solve_result, lf_result_free>>;
using ProblemPtr =
    std::unique_ptr<lf_flow_problem, Deleter<lf_flow_problem, lf_flow_problem_free>>;
using TracePtr = std::unique_ptr<lf_trace, Deleter<lf_trace, lf_trace_free>>;

struct GraphOptions {
  std::string kind = "random";
  std::string file;
  int n = 20;
  int rows = 4;
  int cols = 4;
  int clique = 20;
  int path_len = 20;
  int edges = 60;
  std::uint64_t seed = 1;
  double weight_lo = 0.0;
  double weight_hi = 0.0;
};

struct Options {
  GraphOptions graph;
  double eps = 1e-4;
  int rhop = 1;
  int ground = 0;
  std::string out;
  // solve
  std::string solver = "rhop";
  std::string kappa;  // empty: bound for solve/scale, estimate for flow
  std::string transcript;
  // flow / bench
  std::string method = "sddm-newton";
  std::string step = "backtracking";
  double fixed_step = 0.0;
  int max_iters = 1000;
  double feas_threshold = 1e-5;
  double magnitude = 1.0;
  std::string cost = "exp";
  std::string solver_mode = "rhop";
  std::string problem;
  int neumann_terms = 2;
  double box = 5.0;
  // scale
  std::string family = "path";
  std::vector<int> sizes;
  bool newton = false;
};

void add_graph_options(CLI::App* cmd, GraphOptions& g) {
  cmd->add_option("--graph", g.kind, "Graph family or 'file'")
      ->check(CLI::IsMember({"path", "grid", "barbell", "random", "scale-free", "scale_free",
                             "complete", "file"}));
  cmd->add_option("--file", g.file, "Edge list used with --graph file");
  cmd->add_option("--n", g.n, "Node count");
  cmd->add_option("--rows", g.rows, "Grid rows");
  cmd->add_option("--cols", g.cols, "Grid columns");
  cmd->add_option("--clique", g.clique, "Barbell clique size");
  cmd->add_option("--path-len", g.path_len, "Barbell path length");
  cmd->add_option("--edges", g.edges, "Random graph edge count");
  cmd->add_option("--seed", g.seed, "Random seed");
  cmd->add_option("--weight-lo", g.weight_lo, "Lower bound for random edge weights");
  cmd->add_option("--weight-hi", g.weight_hi, "Upper bound for random edge weights");
}

std::string graph_config(const GraphOptions& g) {
  std::ostringstream s;
  s << "graph=" << g.kind;
  if (g.kind == "file") s << " file=" << g.file;
  s << " n=" << g.n << " rows=" << g.rows << " cols=" << g.cols << " clique=" << g.clique
    << " path_len=" << g.path_len << " edges=" << g.edges << " seed=" << g.seed
    << " weight_lo=" << g.weight_lo << " weight_hi=" << g.weight_hi;
  return s.str();
}

GraphPtr make_graph(const GraphOptions& o) {
  lf_graph* g = nullptr;
  if (o.kind == "file") {
    if (o.file.empty()) throw Failure{kExitUsage, "--graph file needs --file <path>"};
    check(lf_graph_load(o.file.c_str(), &g), "loading graph");
  } else {
    lf_graph_params p;
    lf_graph_params_default(&p);
    p.kind = o.kind.c_str();
    p.n = o.n;
    p.rows = o.rows;
    p.cols = o.cols;
    p.clique = o.clique;
    p.path_len = o.path_len;
    p.edges = o.edges;
    p.seed = o.seed;
    p.weight_lo = o.weight_lo;
    p.weight_hi = o.weight_hi;
    check(lf_graph_generate(&p, &g), "generating graph");
  }
  spdlog::info("graph: {} nodes, {} edges", lf_graph_node_count(g), lf_graph_edge_count(g));
  return GraphPtr(g);
}

int floor_power_of_two(int r) {
  int p = 1;
  while (p * 2 <= r) p *= 2;
  return p;
}

void resolve_rhop(Options& o) {
  if (o.rhop < 1) throw Failure{kExitUsage, "--rhop must be at least 1"};
  const int p = floor_power_of_two(o.rhop);
  if (p != o.rhop) {
    spdlog::warn("R = {} is not a power of two; using {}", o.rhop, p);
    o.rhop = p;
  }
}

void check_eps(double eps) {
  if (!(eps > 0.0) || eps > 0.5) {
    throw Failure{kExitUsage, "--eps must lie in (0, 1/2]"};
  }
}

std::vector<double> random_rhs(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> b(static_cast<size_t>(n));
  for (double& v : b) v = dist(rng);
  return b;
}

lf_solver parse_solver(const std::string& s) {
  if (s == "direct") return LF_SOLVER_DIRECT;
  if (s == "parallel") return LF_SOLVER_PARALLEL;
  if (s == "full") return LF_SOLVER_DISTRIBUTED_FULL;
  return LF_SOLVER_DISTRIBUTED_RHOP;
}

lf_kappa_source parse_kappa(const std::string& s) {
  return s == "bound" ? LF_KAPPA_BOUND : LF_KAPPA_ESTIMATE;
}

int cmd_solve(Options o) {
  if (o.kappa.empty()) o.kappa = "bound";
  check_eps(o.eps);
  resolve_rhop(o);
  GraphPtr g = make_graph(o.graph);
  lf_system* sys_raw = nullptr;
  check(lf_system_from_graph(g.get(), o.ground, &sys_raw), "building system");
  SystemPtr sys(sys_raw);
  const int n = lf_system_size(sys.get());
  const std::vector<double> b = random_rhs(n, o.graph.seed);

  lf_solve_options so;
  lf_solve_options_default(&so);
  so.solver = parse_solver(o.solver);
  so.eps = o.eps;
  so.rhop = o.rhop;
  so.kappa_source = parse_kappa(o.kappa);
  lf_solve_result* res_raw = nullptr;
  check(lf_solve(sys.get(), b.data(), n, &so, &res_raw), "solving");
  ResultPtr res(res_raw);
  lf_solve_report rep;
  check(lf_result_report(res.get(), &rep), "reading report");

  std::ostringstream header;
  header << "command=solve " << graph_config(o.graph) << " ground=" << o.ground
         << " solver=" << o.solver << " eps=" << o.eps << " rhop=" << o.rhop
         << " kappa_source=" << o.kappa << " rhs=uniform[-1,1] rhs_seed=" << o.graph.seed << '\n';
  header.precision(10);
  header << "kappa=" << rep.kappa << " chain_d=" << rep.chain_d
         << " richardson_iterations=" << rep.richardson_iterations << '\n';
  header << "residual_norm=" << rep.residual_norm << " energy_rel_error=";
  if (std::isnan(rep.energy_error)) {
    header << "skipped";
  } else {
    header << rep.energy_error;
  }
  header << '\n';
  header << "rounds=" << rep.rounds << " messages=" << rep.messages << " max_hop=" << rep.max_hop
         << " setup_rounds=" << rep.setup_rounds << " setup_messages=" << rep.setup_messages;

  if (!o.out.empty()) {
    check(lf_result_write_solution_csv(res.get(), o.out.c_str(), header.str().c_str()),
          "writing solution");
  }
  if (!o.transcript.empty()) {
    check(lf_result_write_transcript_csv(res.get(), o.transcript.c_str()), "writing transcript");
  }
  std::printf("residual=%.6e energy_rel_error=%.6e rounds=%d messages=%lld\n", rep.residual_norm,
              rep.energy_error, rep.rounds, rep.messages);
  return kExitOk;
}

ProblemPtr make_problem(const Options& o, const lf_graph* g) {
  lf_flow_problem* p = nullptr;
  if (!o.problem.empty()) {
    check(lf_flow_problem_load(o.problem.c_str(), &p), "loading flow problem");
  } else {
    check(lf_flow_problem_create(g, nullptr, o.magnitude, o.cost.c_str(), &p),
          "building flow problem");
  }
  return ProblemPtr(p);
}

lf_flow_options flow_options(const Options& o, const std::string& method) {
  lf_flow_options fo;
  lf_flow_options_default(&fo);
  fo.method = method.c_str();
  fo.step = o.step.c_str();
  fo.fixed_step = o.fixed_step;
  fo.eps = o.eps;
  fo.rhop = o.rhop;
  fo.solver_mode = o.solver_mode.c_str();
  fo.kappa_source = parse_kappa(o.kappa);
  fo.ground = o.ground;
  fo.neumann_terms = o.neumann_terms;
  fo.max_iters = o.max_iters;
  fo.feas_threshold = o.feas_threshold;
  fo.box = o.box;
  return fo;
}

std::string flow_config(const Options& o, const std::string& command, const std::string& method) {
  std::ostringstream s;
  s << "command=" << command << ' ' << graph_config(o.graph);
  if (!o.problem.empty()) s << " problem=" << o.problem;
  s << " magnitude=" << o.magnitude << " cost=" << o.cost << " method=" << method
    << " step=" << o.step << " fixed_step=" << o.fixed_step << " eps=" << o.eps
    << " rhop=" << o.rhop << " solver_mode=" << o.solver_mode << " kappa_source=" << o.kappa
    << " ground=" << o.ground << " neumann_terms=" << o.neumann_terms
    << " max_iters=" << o.max_iters << " feas_threshold=" << o.feas_threshold
    << " box=" << o.box;
  return s.str();
}

// Runs one optimization; a divergence still yields the partial trace.
TracePtr run_flow(const lf_flow_problem* p, const lf_flow_options& fo, bool* diverged) {
  lf_trace* t = nullptr;
  const lf_status st = lf_flow_optimize(p, &fo, &t);
  *diverged = false;
  if (st == LF_ERR_NUMERICAL && t != nullptr) {
    spdlog::error("{}: {}", fo.method, lf_last_error());
    *diverged = true;
    return TracePtr(t);
  }
  check(st, "optimizing");
  return TracePtr(t);
}

int cmd_flow(Options o) {
  if (o.kappa.empty()) o.kappa = "estimate";
  check_eps(o.eps);
  resolve_rhop(o);
  GraphPtr g;
  if (o.problem.empty()) g = make_graph(o.graph);
  ProblemPtr p = make_problem(o, g.get());
  const lf_flow_options fo = flow_options(o, o.method);
  bool diverged = false;
  TracePtr t = run_flow(p.get(), fo, &diverged);
  if (!o.out.empty()) {
    check(lf_trace_write_csv(t.get(), o.out.c_str(), flow_config(o, "flow", o.method).c_str()),
          "writing trace");
  }
  std::printf("method=%s iterations_to_feasibility=%d total_messages=%lld converged=%d\n",
              o.method.c_str(), lf_trace_iterations_to(t.get(), o.feas_threshold),
              lf_trace_total_messages(t.get()), lf_trace_converged(t.get()));
  return diverged ? kExitNumerical : kExitOk;
}

int cmd_bench(Options o) {
  if (o.kappa.empty()) o.kappa = "estimate";
  check_eps(o.eps);
  resolve_rhop(o);
  GraphPtr g;
  if (o.problem.empty()) g = make_graph(o.graph);
  ProblemPtr p = make_problem(o, g.get());
  const std::vector<std::string> methods = {"sddm-newton", "exact-newton", "subgradient", "add"};
  FILE* out = nullptr;
  if (!o.out.empty()) {
    out = std::fopen(o.out.c_str(), "w");
    if (out == nullptr) throw Failure{kExitUsage, "cannot write " + o.out};
    std::fprintf(out, "# %s\n", flow_config(o, "bench", "all").c_str());
    std::fprintf(out, "method,iter,objective,feasibility,grad_lnorm,step,phase,messages\n");
  }
  int status = kExitOk;
  for (const std::string& m : methods) {
    bool diverged = false;
    TracePtr t = run_flow(p.get(), flow_options(o, m), &diverged);
    if (diverged) status = kExitNumerical;
    for (int i = 0; out != nullptr && i < lf_trace_length(t.get()); ++i) {
      lf_trace_row r;
      check(lf_trace_row_at(t.get(), i, &r), "reading trace");
      std::fprintf(out, "%s,%d,%.17g,%.17g,%.17g,%.17g,%s,%lld\n", m.c_str(), r.iter,
                   r.objective, r.feasibility, r.grad_lnorm, r.step, r.phase, r.messages);
    }
    std::printf("method=%s iterations_to_feasibility=%d total_messages=%lld converged=%d\n",
                m.c_str(), lf_trace_iterations_to(t.get(), o.feas_threshold),
                lf_trace_total_messages(t.get()), lf_trace_converged(t.get()));
  }
  if (out != nullptr) std::fclose(out);
  return status;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const size_t n = x.size();
  if (n < 2) return std::nan("");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < n; ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double den = static_cast<double>(n) * sxx - sx * sx;
  return den == 0.0 ? std::nan("") : (static_cast<double>(n) * sxy - sx * sy) / den;
}

int cmd_scale(Options o) {
  if (o.kappa.empty()) o.kappa = "bound";
  check_eps(o.eps);
  resolve_rhop(o);
  if (o.sizes.empty()) throw Failure{kExitUsage, "--sizes needs at least one size"};
  for (int size : o.sizes) {
    if (size < 2) throw Failure{kExitUsage, "--sizes entries must be at least 2"};
  }
  std::string family = o.family == "scale_free" ? "scale-free" : o.family;

  FILE* out = o.out.empty() ? stdout : std::fopen(o.out.c_str(), "w");
  if (out == nullptr) throw Failure{kExitUsage, "cannot write " + o.out};
  std::fprintf(out,
               "# command=scale family=%s sizes=%zu seed=%llu eps=%g rhop=%d kappa_source=%s "
               "ground=%d newton=%d feas_threshold=%g\n",
               family.c_str(), o.sizes.size(), static_cast<unsigned long long>(o.graph.seed),
               o.eps, o.rhop, o.kappa.c_str(), o.ground, o.newton ? 1 : 0, o.feas_threshold);
  std::fprintf(out, "family,n,kappa,chain_d,rounds,messages,iterations%s\n",
               o.newton ? ",newton_iterations,newton_messages" : "");
  std::vector<double> ns, msgs, rounds, newton_iters;
  for (int size : o.sizes) {
    GraphOptions go = o.graph;
    go.kind = family;
    if (family == "grid") {
      go.rows = std::max(1, static_cast<int>(std::lround(std::sqrt(static_cast<double>(size)))));
      go.cols = std::max(1, size / go.rows);
    } else {
      go.n = size;
    }
    GraphPtr g = make_graph(go);
    const int n = lf_graph_node_count(g.get());
    lf_system* sys_raw = nullptr;
    check(lf_system_from_graph(g.get(), o.ground, &sys_raw), "building system");
    SystemPtr sys(sys_raw);
    const std::vector<double> b = random_rhs(lf_system_size(sys.get()), o.graph.seed);
    lf_solve_options so;
    lf_solve_options_default(&so);
    so.eps = o.eps;
    so.rhop = o.rhop;
    so.kappa_source = parse_kappa(o.kappa);
  so.oracle_limit = 0;
    lf_solve_result* res_raw = nullptr;
    check(lf_solve(sys.get(), b.data(), static_cast<int>(b.size()), &so, &res_raw), "solving");
    ResultPtr res(res_raw);
    lf_solve_report rep;
    check(lf_result_report(res.get(), &rep), "reading report");
    std::fprintf(out, "%s,%d,%.10g,%d,%d,%lld,%d", family.c_str(), n, rep.kappa, rep.chain_d,
                 rep.rounds, rep.messages, rep.richardson_iterations);
    ns.push_back(n);
    msgs.push_back(static_cast<double>(std::max(1LL, rep.messages)));
    rounds.push_back(std::max(1, rep.rounds));
    if (o.newton) {
      ProblemPtr p = make_problem(o, g.get());
      bool diverged = false;
      TracePtr t = run_flow(p.get(), flow_options(o, "sddm-newton"), &diverged);
      const int it = lf_trace_iterations_to(t.get(), o.feas_threshold);
      std::fprintf(out, ",%d,%lld", it, lf_trace_total_messages(t.get()));
      newton_iters.push_back(it > 0 ? it : std::nan(""));
    }
    std::fprintf(out, "\n");
    spdlog::info("n={} rounds={} messages={}", n, rep.rounds, rep.messages);
  }
  std::fprintf(out, "# slope_messages_vs_n=%.4f slope_rounds_vs_n=%.4f", loglog_slope(ns, msgs),
               loglog_slope(ns, rounds));
  if (o.newton) std::fprintf(out, " slope_newton_iterations_vs_n=%.4f", loglog_slope(ns, newton_iters));
  std::fprintf(out, "\n");
  if (out != stdout) {
    std::fclose(out);
    std::printf("slope_messages_vs_n=%.4f slope_rounds_vs_n=%.4f\n", loglog_slope(ns, msgs),
                loglog_slope(ns, rounds));
  }
  return kExitOk;
}

void setup_logging() {
  auto logger = spdlog::stderr_logger_mt("lapflow");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("LF_LOG")) {
    spdlog::set_level(spdlog::level::from_str(env));
  }
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"lapflow: distributed SDDM solvers and Newton min-cost flow"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* cmd) {
    add_graph_options(cmd, o.graph);
    cmd->add_option("--eps", o.eps, "Solver precision in (0, 1/2]");
    cmd->add_option("--rhop", o.rhop, "Communication radius R (power of two)");
    cmd->add_option("--ground", o.ground, "Grounded node");
    cmd->add_option("--out", o.out, "Output CSV path");
    cmd->add_option("--kappa", o.kappa, "Condition number source")
        ->check(CLI::IsMember({"estimate", "bound"}));
  };
  auto flow_flags = [&](CLI::App* cmd) {
    cmd->add_option("--step", o.step, "Step policy")
        ->check(CLI::IsMember({"fixed", "alpha-star", "backtracking"}));
    cmd->add_option("--fixed-step", o.fixed_step, "Step size for --step fixed");
    cmd->add_option("--max-iters", o.max_iters, "Iteration cap");
    cmd->add_option("--feas-threshold", o.feas_threshold, "Feasibility threshold");
    cmd->add_option("--magnitude", o.magnitude, "Source/sink magnitude");
    cmd->add_option("--cost", o.cost, "Edge cost")->check(CLI::IsMember({"exp", "quadratic"}));
    cmd->add_option("--solver-mode", o.solver_mode, "Newton direction solver")
        ->check(CLI::IsMember({"rhop", "full", "exact"}));
    cmd->add_option("--problem", o.problem, "Flow problem file");
    cmd->add_option("--neumann-terms", o.neumann_terms, "Series terms for the add method");
    cmd->add_option("--box", o.box, "Box bound for the cost curvature");
  };

  CLI::App* solve = app.add_subcommand("solve", "Solve a grounded Laplacian system");
  common(solve);
  solve->add_option("--solver", o.solver, "Solver")
      ->check(CLI::IsMember({"rhop", "full", "parallel", "direct"}));
  solve->add_option("--transcript", o.transcript, "Per-round transcript CSV");

  CLI::App* flow = app.add_subcommand("flow", "Run one min-cost flow optimization");
  common(flow);
  flow_flags(flow);
  flow->add_option("--method", o.method, "Optimizer")
      ->check(CLI::IsMember({"sddm-newton", "exact-newton", "subgradient", "add"}));

  CLI::App* bench = app.add_subcommand("bench", "Compare all flow methods on one problem");
  common(bench);
  flow_flags(bench);

  CLI::App* scale = app.add_subcommand("scale", "Solver scaling study over graph sizes");
  common(scale);
  scale->add_option("--family", o.family, "Graph family")
      ->check(CLI::IsMember({"path", "grid", "scale-free", "scale_free"}));
  scale->add_option("--sizes", o.sizes, "Comma-separated node counts")->delimiter(',');
  scale->add_flag("--newton", o.newton, "Also run the Newton flow solver");
  scale->add_option("--feas-threshold", o.feas_threshold, "Feasibility threshold");
  scale->add_option("--max-iters", o.max_iters, "Newton iteration cap");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }
  try {
    if (*solve) return cmd_solve(o);
    if (*flow) return cmd_flow(o);
    if (*bench) return cmd_bench(o);
    if (*scale) return cmd_scale(o);
  } catch (const Failure& f) {
    std::fprintf(stderr, "error: %s\n", f.message.c_str());
    return f.code;
  }
  return kExitUsage;
}
