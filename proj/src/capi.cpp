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

#include "lapflow/lapflow.h"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include "lapflow/distributed.hpp"
#include "lapflow/errors.hpp"
#include "lapflow/flow.hpp"
#include "lapflow/graph.hpp"
#include "lapflow/reference.hpp"
#include "lapflow/spectral.hpp"

struct lf_graph {
  lapflow::WeightedGraph g;
};

struct lf_system {
  lapflow::StandardSplitting s;
  int ground = -1;
  double kappa_bound = 0.0;
};

struct lf_solve_result {
  Eigen::VectorXd x;
  Eigen::VectorXd x0;
  lf_solve_report report{};
  lapflow::Transcript transcript;
};

struct lf_flow_problem {
  lapflow::FlowProblem p;
};

struct lf_trace {
  lapflow::Trace t;
};

namespace {

thread_local std::string g_last_error;

lf_status fail(lf_status code, const std::string& msg) {
  g_last_error = msg;
  return code;
}

lf_status status_of(lapflow::ErrorKind kind) {
  switch (kind) {
    case lapflow::ErrorKind::kInvalidArgument: return LF_ERR_INVALID_ARGUMENT;
    case lapflow::ErrorKind::kNumerical: return LF_ERR_NUMERICAL;
    case lapflow::ErrorKind::kLocality: return LF_ERR_LOCALITY;
    case lapflow::ErrorKind::kIo: return LF_ERR_IO;
  }
  return LF_ERR_INTERNAL;
}

template <typename F>
lf_status guarded(F&& body) {
  try {
    body();
    return LF_OK;
  } catch (const lapflow::Error& e) {
    return fail(status_of(e.kind()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(LF_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(LF_ERR_INTERNAL, e.what());
  }
}

void require(bool ok, const char* msg) {
  if (!ok) throw lapflow::InvalidArgument(msg);
}

std::ifstream open_in(const char* path) {
  require(path != nullptr, "null path");
  std::ifstream in(path);
  if (!in) throw lapflow::Error(lapflow::ErrorKind::kIo, std::string("cannot open ") + path);
  return in;
}

std::ofstream open_out(const char* path) {
  require(path != nullptr, "null path");
  std::ofstream out(path);
  if (!out) throw lapflow::Error(lapflow::ErrorKind::kIo, std::string("cannot write ") + path);
  return out;
}

void write_comment(std::ostream& out, const char* header) {
  if (header == nullptr) return;
  std::istringstream lines(header);
  std::string line;
  while (std::getline(lines, line)) out << "# " << line << '\n';
}

lapflow::KappaSource kappa_source(lf_kappa_source src) {
  switch (src) {
    case LF_KAPPA_BOUND: return lapflow::KappaSource::kAnalyticBound;
    case LF_KAPPA_ESTIMATE: return lapflow::KappaSource::kEstimated;
    case LF_KAPPA_GIVEN: return lapflow::KappaSource::kGiven;
  }
  throw lapflow::InvalidArgument("unknown kappa source");
}

void fill_transcript(lf_solve_report& rep, const lapflow::Transcript& run,
                     const lapflow::Transcript& setup) {
  rep.rounds = run.rounds;
  rep.messages = run.messages_total;
  rep.max_hop = run.max_hop_used;
  rep.setup_rounds = setup.rounds;
  rep.setup_messages = setup.messages_total;
}

}  // namespace

extern "C" {

const char* lf_last_error(void) { return g_last_error.c_str(); }

const char* lf_version(void) { return "0.1.0"; }

void lf_graph_params_default(lf_graph_params* params) {
  if (params == nullptr) return;
  *params = lf_graph_params{};
  params->kind = "random";
  params->n = 20;
  params->edges = 60;
  params->seed = 1;
}

lf_status lf_graph_generate(const lf_graph_params* params, lf_graph** out) {
  return guarded([&] {
    require(params != nullptr && out != nullptr && params->kind != nullptr,
            "lf_graph_generate: null argument");
    lapflow::GraphParams gp;
    gp.n = params->n;
    gp.rows = params->rows;
    gp.cols = params->cols;
    gp.clique = params->clique;
    gp.path_len = params->path_len;
    gp.edges = params->edges;
    gp.seed = params->seed;
    lapflow::WeightedGraph g = lapflow::generate(lapflow::parse_graph_kind(params->kind), gp);
    if (params->weight_lo != 0.0 || params->weight_hi != 0.0) {
      g = lapflow::with_random_weights(g, params->weight_lo, params->weight_hi,
                                       params->seed ^ 0x9e3779b97f4a7c15ULL);
    }
    *out = new lf_graph{std::move(g)};
  });
}

lf_status lf_graph_load(const char* path, lf_graph** out) {
  return guarded([&] {
    require(out != nullptr, "lf_graph_load: null output");
    std::ifstream in = open_in(path);
    *out = new lf_graph{lapflow::read_edge_list(in)};
  });
}

lf_status lf_graph_save(const lf_graph* g, const char* path) {
  return guarded([&] {
    require(g != nullptr, "lf_graph_save: null graph");
    std::ofstream out = open_out(path);
    lapflow::write_edge_list(g->g, out);
  });
}

int lf_graph_node_count(const lf_graph* g) { return g ? g->g.node_count() : 0; }
int lf_graph_edge_count(const lf_graph* g) { return g ? g->g.edge_count() : 0; }
int lf_graph_max_degree(const lf_graph* g) { return g ? g->g.max_degree() : 0; }
int lf_graph_diameter(const lf_graph* g) {
  if (g == nullptr) return -1;
  try {
    return g->g.diameter();
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return -1;
  }
}
void lf_graph_free(lf_graph* g) { delete g; }

lf_status lf_system_from_graph(const lf_graph* g, int ground_node, lf_system** out) {
  return guarded([&] {
    require(g != nullptr && out != nullptr, "lf_system_from_graph: null argument");
    lapflow::StandardSplitting lap = lapflow::laplacian(g->g);
    const double bound = lapflow::condition_bound(g->g, ground_node >= 0);
    if (ground_node >= 0) {
      *out = new lf_system{lapflow::ground(lap, ground_node), ground_node, bound};
    } else {
      *out = new lf_system{std::move(lap), -1, bound};
    }
  });
}

int lf_system_size(const lf_system* s) { return s ? s->s.size() : 0; }

lf_status lf_system_validate(const lf_system* s, int* is_sddm) {
  return guarded([&] {
    require(s != nullptr && is_sddm != nullptr, "lf_system_validate: null argument");
    *is_sddm = lapflow::validate_sddm(s->s).sddm ? 1 : 0;
  });
}

lf_status lf_system_condition_bound(const lf_graph* g, int grounded, double* kappa) {
  return guarded([&] {
    require(g != nullptr && kappa != nullptr, "lf_system_condition_bound: null argument");
    *kappa = lapflow::condition_bound(g->g, grounded != 0);
  });
}

lf_status lf_system_estimate_condition(const lf_system* s, double* kappa) {
  return guarded([&] {
    require(s != nullptr && kappa != nullptr, "lf_system_estimate_condition: null argument");
    *kappa = lapflow::estimate_condition(s->s).kappa;
  });
}

void lf_system_free(lf_system* s) { delete s; }

void lf_solve_options_default(lf_solve_options* opts) {
  if (opts == nullptr) return;
  *opts = lf_solve_options{};
  opts->solver = LF_SOLVER_DISTRIBUTED_RHOP;
  opts->eps = 1e-4;
  opts->rhop = 1;
  opts->kappa_source = LF_KAPPA_BOUND;
  opts->kappa = 0.0;
  opts->oracle_limit = 500;
}

lf_status lf_solve(const lf_system* sys, const double* b, int n,
                   const lf_solve_options* opts, lf_solve_result** out) {
  return guarded([&] {
    require(sys != nullptr && b != nullptr && opts != nullptr && out != nullptr,
            "lf_solve: null argument");
    const lapflow::StandardSplitting& s = sys->s;
    require(n == s.size(), "lf_solve: right-hand side has the wrong length");
    const Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(b, n);
    auto res = std::make_unique<lf_solve_result>();
    lf_solve_report& rep = res->report;
    rep.energy_error = std::numeric_limits<double>::quiet_NaN();

    if (opts->solver != LF_SOLVER_DIRECT) {
      const lapflow::KappaSource src = kappa_source(opts->kappa_source);
      double kappa = 0.0;
      switch (src) {
        case lapflow::KappaSource::kAnalyticBound:
          kappa = sys->kappa_bound;
          break;
        case lapflow::KappaSource::kEstimated:
          kappa = lapflow::estimate_condition(s).kappa;
          break;
        case lapflow::KappaSource::kGiven:
          kappa = opts->kappa;
          break;
      }
      const lapflow::ChainSpec chain = lapflow::chain_length(kappa, src);
      rep.kappa = chain.kappa;
      rep.chain_d = chain.d;
      rep.eps_d = chain.eps_d;
      rep.richardson_iterations = lapflow::richardson_iterations(opts->eps);
      // The first Richardson iterate equals the crude solution.
      auto keep_first = [&](int t, const Eigen::VectorXd& y) {
        if (t == 1) res->x0 = y;
      };
      if (opts->solver == LF_SOLVER_PARALLEL) {
        require(lapflow::validate_sddm(s).sddm, "lf_solve: system is not SDDM");
        lapflow::InverseChainView view{&s, chain.d};
        res->x = lapflow::parallel_esolve(view, rhs, opts->eps, keep_first);
      } else {
        lapflow::DistributedSolver solver(s, chain);
        lapflow::SolveRun run;
        lapflow::Transcript setup;
        if (opts->solver == LF_SOLVER_DISTRIBUTED_FULL) {
          run = solver.distr_esolve(rhs, opts->eps, keep_first);
          setup = solver.full_setup_transcript();
        } else if (opts->solver == LF_SOLVER_DISTRIBUTED_RHOP) {
          run = solver.edist_rsolve(rhs, opts->rhop, opts->eps, keep_first);
          setup = solver.setup_transcript(opts->rhop);
        } else {
          throw lapflow::InvalidArgument("lf_solve: unknown solver");
        }
        res->x = std::move(run.x);
        res->transcript = std::move(run.transcript);
        fill_transcript(rep, res->transcript, setup);
      }
    } else {
      res->x = lapflow::direct_solve(s, rhs);
      res->x0 = res->x;
    }
    if (res->x0.size() != n) res->x0 = res->x;

    rep.residual_norm = (s.apply(res->x) - rhs).norm();
    if (n <= opts->oracle_limit) {
      const Eigen::VectorXd exact = lapflow::direct_solve(s, rhs);
      const double scale = lapflow::energy_norm(s, exact);
      const double err = lapflow::energy_norm(s, res->x - exact);
      rep.energy_error = scale > 0.0 ? err / scale : err;
    }
    *out = res.release();
  });
}

int lf_result_size(const lf_solve_result* r) { return r ? static_cast<int>(r->x.size()) : 0; }

lf_status lf_result_solution(const lf_solve_result* r, double* x, int n) {
  return guarded([&] {
    require(r != nullptr && x != nullptr, "lf_result_solution: null argument");
    require(n == r->x.size(), "lf_result_solution: wrong length");
    std::memcpy(x, r->x.data(), sizeof(double) * static_cast<size_t>(n));
  });
}

lf_status lf_result_crude(const lf_solve_result* r, double* x, int n) {
  return guarded([&] {
    require(r != nullptr && x != nullptr, "lf_result_crude: null argument");
    require(n == r->x0.size(), "lf_result_crude: wrong length");
    std::memcpy(x, r->x0.data(), sizeof(double) * static_cast<size_t>(n));
  });
}

lf_status lf_result_report(const lf_solve_result* r, lf_solve_report* out) {
  return guarded([&] {
    require(r != nullptr && out != nullptr, "lf_result_report: null argument");
    *out = r->report;
  });
}

lf_status lf_result_write_solution_csv(const lf_solve_result* r, const char* path,
                                       const char* header_comment) {
  return guarded([&] {
    require(r != nullptr, "lf_result_write_solution_csv: null result");
    std::ofstream out = open_out(path);
    write_comment(out, header_comment);
    lapflow::write_solution_csv(r->x0, r->x, out);
  });
}

lf_status lf_result_write_transcript_csv(const lf_solve_result* r, const char* path) {
  return guarded([&] {
    require(r != nullptr, "lf_result_write_transcript_csv: null result");
    std::ofstream out = open_out(path);
    r->transcript.write_csv(out);
  });
}

void lf_result_free(lf_solve_result* r) { delete r; }

lf_status lf_flow_problem_create(const lf_graph* g, const double* b, double magnitude,
                                 const char* cost, lf_flow_problem** out) {
  return guarded([&] {
    require(g != nullptr && out != nullptr, "lf_flow_problem_create: null argument");
    const int n = g->g.node_count();
    Eigen::VectorXd rhs = b != nullptr ? Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(b, n))
                                       : lapflow::diameter_source_sink(g->g, magnitude);
    *out = new lf_flow_problem{
        lapflow::make_flow_problem(g->g, rhs, cost != nullptr ? cost : "exp")};
  });
}

lf_status lf_flow_problem_load(const char* path, lf_flow_problem** out) {
  return guarded([&] {
    require(out != nullptr, "lf_flow_problem_load: null output");
    std::ifstream in = open_in(path);
    *out = new lf_flow_problem{lapflow::read_flow_problem(in)};
  });
}

lf_status lf_flow_problem_save(const lf_flow_problem* p, const char* path) {
  return guarded([&] {
    require(p != nullptr, "lf_flow_problem_save: null problem");
    std::ofstream out = open_out(path);
    lapflow::write_flow_problem(p->p, out);
  });
}

int lf_flow_problem_node_count(const lf_flow_problem* p) { return p ? p->p.node_count() : 0; }

void lf_flow_problem_free(lf_flow_problem* p) { delete p; }

void lf_flow_options_default(lf_flow_options* opts) {
  if (opts == nullptr) return;
  const lapflow::OptimizeConfig cfg;
  *opts = lf_flow_options{};
  opts->method = "sddm-newton";
  opts->step = "backtracking";
  opts->fixed_step = cfg.fixed_step;
  opts->eps = cfg.eps;
  opts->rhop = cfg.R;
  opts->solver_mode = "rhop";
  opts->kappa_source = LF_KAPPA_ESTIMATE;
  opts->ground = cfg.ground;
  opts->neumann_terms = cfg.neumann_terms;
  opts->max_iters = cfg.max_iters;
  opts->feas_threshold = cfg.feas_threshold;
  opts->box = cfg.box;
}

lf_status lf_flow_optimize(const lf_flow_problem* p, const lf_flow_options* opts,
                           lf_trace** out) {
  if (out == nullptr) return fail(LF_ERR_INVALID_ARGUMENT, "lf_flow_optimize: null output");
  *out = nullptr;
  return guarded([&] {
    require(p != nullptr && opts != nullptr, "lf_flow_optimize: null argument");
    lapflow::OptimizeConfig cfg;
    cfg.method = lapflow::parse_method(opts->method ? opts->method : "sddm-newton");
    cfg.step = lapflow::parse_step_policy(opts->step ? opts->step : "backtracking");
    cfg.fixed_step = opts->fixed_step;
    cfg.eps = opts->eps;
    cfg.R = opts->rhop;
    const std::string mode = opts->solver_mode ? opts->solver_mode : "rhop";
    if (mode == "rhop") {
      cfg.solver = lapflow::SolverMode::kRhopDistributed;
    } else if (mode == "full") {
      cfg.solver = lapflow::SolverMode::kFullDistributed;
    } else if (mode == "exact") {
      cfg.solver = lapflow::SolverMode::kExactOracle;
    } else {
      throw lapflow::InvalidArgument("unknown solver mode: " + mode);
    }
    cfg.kappa_source = kappa_source(opts->kappa_source);
    cfg.ground = opts->ground;
    cfg.neumann_terms = opts->neumann_terms;
    cfg.max_iters = opts->max_iters;
    cfg.feas_threshold = opts->feas_threshold;
    cfg.box = opts->box;
    try {
      *out = new lf_trace{lapflow::optimize(p->p, cfg)};
    } catch (const lapflow::DivergenceError& e) {
      *out = new lf_trace{e.trace()};
      throw;
    }
  });
}

int lf_trace_length(const lf_trace* t) { return t ? static_cast<int>(t->t.rows.size()) : 0; }

lf_status lf_trace_row_at(const lf_trace* t, int i, lf_trace_row* out) {
  return guarded([&] {
    require(t != nullptr && out != nullptr, "lf_trace_row_at: null argument");
    require(i >= 0 && i < static_cast<int>(t->t.rows.size()), "lf_trace_row_at: index out of range");
    const lapflow::TraceRow& row = t->t.rows[static_cast<size_t>(i)];
    *out = lf_trace_row{};
    out->iter = row.iter;
    out->objective = row.objective;
    out->feasibility = row.feasibility;
    out->grad_lnorm = row.grad_lnorm;
    out->step = row.step;
    out->messages = row.messages;
    std::strncpy(out->phase, row.phase.c_str(), sizeof(out->phase) - 1);
  });
}

int lf_trace_converged(const lf_trace* t) { return t && t->t.converged ? 1 : 0; }

int lf_trace_iterations_to(const lf_trace* t, double threshold) {
  return t ? t->t.iterations_to(threshold) : -1;
}

long long lf_trace_total_messages(const lf_trace* t) { return t ? t->t.total_messages() : 0; }

lf_status lf_trace_write_csv(const lf_trace* t, const char* path, const char* header_comment) {
  return guarded([&] {
    require(t != nullptr, "lf_trace_write_csv: null trace");
    std::ofstream out = open_out(path);
    write_comment(out, header_comment);
    t->t.write_csv(out);
  });
}

void lf_trace_free(lf_trace* t) { delete t; }

}  // extern "C"
