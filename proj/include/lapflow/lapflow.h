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

/* C interface to the lapflow SDDM solvers and network-flow optimizer.
 *
 * Every object is an opaque handle released with its matching *_free call.
 * Functions return an lf_status; on failure lf_last_error() describes the
 * problem (thread-local, valid until the next failing call).
 */
#ifndef LAPFLOW_LAPFLOW_H_
#define LAPFLOW_LAPFLOW_H_

#include <stdint.h>

#if defined(_WIN32)
#define LF_API __declspec(dllexport)
#else
#define LF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lf_status {
  LF_OK = 0,
  LF_ERR_INVALID_ARGUMENT = 1,
  LF_ERR_NUMERICAL = 2,
  LF_ERR_LOCALITY = 3,
  LF_ERR_IO = 4,
  LF_ERR_INTERNAL = 5
} lf_status;

typedef struct lf_graph lf_graph;
typedef struct lf_system lf_system;
typedef struct lf_solve_result lf_solve_result;
typedef struct lf_flow_problem lf_flow_problem;
typedef struct lf_trace lf_trace;

LF_API const char* lf_last_error(void);
LF_API const char* lf_version(void);

/* ---- graphs ---------------------------------------------------------- */

typedef struct lf_graph_params {
  const char* kind; /* path, grid, barbell, random, scale-free, complete */
  int n;
  int rows;
  int cols;
  int clique;
  int path_len;
  int edges;
  uint64_t seed;
  /* Uniform random weights in [weight_lo, weight_hi]; both 0 keeps 1.0. */
  double weight_lo;
  double weight_hi;
} lf_graph_params;

LF_API void lf_graph_params_default(lf_graph_params* params);
LF_API lf_status lf_graph_generate(const lf_graph_params* params, lf_graph** out);
LF_API lf_status lf_graph_load(const char* path, lf_graph** out);
LF_API lf_status lf_graph_save(const lf_graph* g, const char* path);
LF_API int lf_graph_node_count(const lf_graph* g);
LF_API int lf_graph_edge_count(const lf_graph* g);
LF_API int lf_graph_max_degree(const lf_graph* g);
LF_API int lf_graph_diameter(const lf_graph* g);
LF_API void lf_graph_free(lf_graph* g);

/* ---- SDDM systems ---------------------------------------------------- */

/* Laplacian of g, grounded at ground_node (pass -1 to keep it singular).
 * The handle remembers the analytic condition bound of g. */
LF_API lf_status lf_system_from_graph(const lf_graph* g, int ground_node,
                                      lf_system** out);
LF_API int lf_system_size(const lf_system* s);
/* *is_sddm is set to 1 for a nonsingular SDDM system, else 0. */
LF_API lf_status lf_system_validate(const lf_system* s, int* is_sddm);
LF_API lf_status lf_system_condition_bound(const lf_graph* g, int grounded,
                                           double* kappa);
LF_API lf_status lf_system_estimate_condition(const lf_system* s, double* kappa);
LF_API void lf_system_free(lf_system* s);

typedef enum lf_solver {
  LF_SOLVER_DIRECT = 0,
  LF_SOLVER_PARALLEL = 1,         /* centralized chain + Richardson */
  LF_SOLVER_DISTRIBUTED_FULL = 2, /* full-communication network solver */
  LF_SOLVER_DISTRIBUTED_RHOP = 3  /* R-hop network solver */
} lf_solver;

typedef enum lf_kappa_source {
  LF_KAPPA_BOUND = 0,
  LF_KAPPA_ESTIMATE = 1,
  LF_KAPPA_GIVEN = 2
} lf_kappa_source;

typedef struct lf_solve_options {
  lf_solver solver;
  double eps;
  int rhop;
  lf_kappa_source kappa_source;
  double kappa;     /* used with LF_KAPPA_GIVEN */
  int oracle_limit; /* compare against a direct solve when n <= this */
} lf_solve_options;

LF_API void lf_solve_options_default(lf_solve_options* opts);

typedef struct lf_solve_report {
  double kappa;
  int chain_d;
  double eps_d;
  int richardson_iterations;
  int rounds;
  long long messages;
  int max_hop;
  int setup_rounds;
  long long setup_messages;
  double residual_norm; /* ||M x - b||_2 */
  double energy_error;  /* ||x - x*||_M / ||x*||_M, NaN when not computed */
} lf_solve_report;

LF_API lf_status lf_solve(const lf_system* s, const double* b, int n,
                          const lf_solve_options* opts, lf_solve_result** out);
LF_API int lf_result_size(const lf_solve_result* r);
LF_API lf_status lf_result_solution(const lf_solve_result* r, double* x, int n);
LF_API lf_status lf_result_crude(const lf_solve_result* r, double* x, int n);
LF_API lf_status lf_result_report(const lf_solve_result* r, lf_solve_report* out);
/* CSV "node,x0,xtilde"; header_comment lines are written first with "# ". */
LF_API lf_status lf_result_write_solution_csv(const lf_solve_result* r,
                                              const char* path,
                                              const char* header_comment);
/* CSV "round,messages,max_hop". */
LF_API lf_status lf_result_write_transcript_csv(const lf_solve_result* r,
                                                const char* path);
LF_API void lf_result_free(lf_solve_result* r);

/* ---- network flow ---------------------------------------------------- */

/* b == NULL places +magnitude / -magnitude at a diameter-realizing pair. */
LF_API lf_status lf_flow_problem_create(const lf_graph* g, const double* b,
                                        double magnitude, const char* cost,
                                        lf_flow_problem** out);
LF_API lf_status lf_flow_problem_load(const char* path, lf_flow_problem** out);
LF_API lf_status lf_flow_problem_save(const lf_flow_problem* p, const char* path);
LF_API int lf_flow_problem_node_count(const lf_flow_problem* p);
LF_API void lf_flow_problem_free(lf_flow_problem* p);

typedef struct lf_flow_options {
  const char* method;      /* sddm-newton, exact-newton, subgradient, add */
  const char* step;        /* fixed, alpha-star, backtracking */
  double fixed_step;       /* <= 0 picks a method default */
  double eps;
  int rhop;
  const char* solver_mode; /* rhop, full */
  lf_kappa_source kappa_source;
  int ground;
  int neumann_terms;
  int max_iters;
  double feas_threshold;
  double box;
} lf_flow_options;

LF_API void lf_flow_options_default(lf_flow_options* opts);

/* On divergence returns LF_ERR_NUMERICAL and still hands back the partial
 * trace in *out. */
LF_API lf_status lf_flow_optimize(const lf_flow_problem* p,
                                  const lf_flow_options* opts, lf_trace** out);

typedef struct lf_trace_row {
  int iter;
  double objective;
  double feasibility;
  double grad_lnorm;
  double step;
  long long messages;
  char phase[16];
} lf_trace_row;

LF_API int lf_trace_length(const lf_trace* t);
LF_API lf_status lf_trace_row_at(const lf_trace* t, int i, lf_trace_row* out);
LF_API int lf_trace_converged(const lf_trace* t);
/* First iteration with feasibility <= threshold, or -1. */
LF_API int lf_trace_iterations_to(const lf_trace* t, double threshold);
LF_API long long lf_trace_total_messages(const lf_trace* t);
LF_API lf_status lf_trace_write_csv(const lf_trace* t, const char* path,
                                    const char* header_comment);
LF_API void lf_trace_free(lf_trace* t);

#ifdef __cplusplus
}
#endif

#endif  /* LAPFLOW_LAPFLOW_H_ */
