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

#include "lapflow/distributed.hpp"

#include <algorithm>
#include <ostream>

#include "lapflow/errors.hpp"

namespace lapflow {

namespace {

using RowIter = Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator;

constexpr int kMaxChainLength = 40;

// Row powers exchanged while squaring in full-communication mode.
struct PowerRecord {
  double diag = 0.0;
  SparseRow p;
  SparseRow q;
};

long long payload_size(const PowerRecord& r) {
  return 1 + r.p.nnz() + r.q.nnz();
}

SparseRow compress(const std::vector<double>& dense, const std::vector<int>& cols) {
  SparseRow row;
  for (int j : cols) {
    if (dense[j] != 0.0) {
      row.idx.push_back(j);
      row.val.push_back(dense[j]);
    }
  }
  return row;
}

// Candidate columns: k itself plus everything within the gathered radius.
std::vector<int> ball_columns(const Topology& topo, int k, int radius) {
  std::vector<int> cols{k};
  for (const auto& m : topo.ball(k, radius)) cols.push_back(m.first);
  std::sort(cols.begin(), cols.end());
  return cols;
}

}  // namespace

struct DistributedSolver::Mode {
  bool full = false;
  int R = 1;
  std::unique_ptr<SyncNetwork> net;
  Transcript setup;
  std::vector<SparseRow> p1;  // row k of A D^-1
  std::vector<SparseRow> q1;  // row k of D^-1 A
  std::vector<SparseRow> c0;  // R-hop: (A D^-1)^R
  std::vector<SparseRow> c1;  // R-hop: (D^-1 A)^R
  std::vector<std::vector<SparseRow>> p_levels;  // full: (A D^-1)^(2^i)
  std::vector<std::vector<SparseRow>> q_levels;  // full: (D^-1 A)^(2^i)
};

struct DistributedSolver::Stage {
  const std::vector<SparseRow>* rows = nullptr;
  int radius = 1;
  long long count = 1;
  bool forward = true;
  int i = 0;  // chain index produced by the stage
};

bool is_power_of_two(int r) { return r >= 1 && (r & (r - 1)) == 0; }

DistributedSolver::DistributedSolver(StandardSplitting s, ChainSpec chain)
    : s_(std::move(s)), chain_(chain) {
  s_.check_structure();
  if (chain_.d < 0 || chain_.d > kMaxChainLength) {
    throw InvalidArgument("distributed solver: chain length out of range");
  }
  topo_ = std::make_unique<Topology>(support_graph(s_));
  const int n = s_.size();
  rows_.resize(n);
  for (int k = 0; k < n; ++k) {
    rows_[k].diag = s_.diag[k];
    for (RowIter it(s_.off, k); it; ++it) {
      if (it.value() == 0.0) continue;
      rows_[k].off.idx.push_back(static_cast<int>(it.col()));
      rows_[k].off.val.push_back(it.value());
    }
  }
}

DistributedSolver::~DistributedSolver() = default;

// Every mode starts the same way: nodes publish their own row of M, then
// read their neighbours' rows to form the 1-hop rows of A D^-1 and D^-1 A.
static void exchange_base_rows(SyncNetwork& net, const std::vector<LocalRow>& rows,
                               Field<LocalRow>& field, std::vector<SparseRow>& p1,
                               std::vector<SparseRow>& q1) {
  const int n = net.node_count();
  net.run_round([&](NodeContext& ctx) { ctx.publish(field, rows[ctx.id()]); });
  p1.assign(n, {});
  q1.assign(n, {});
  net.run_round([&](NodeContext& ctx) {
    const int k = ctx.id();
    auto nb = ctx.gather(field, 1);
    const LocalRow& mine = rows[k];
    for (int t = 0; t < mine.off.nnz(); ++t) {
      const int j = mine.off.idx[t];
      const double a = mine.off.val[t];
      p1[k].idx.push_back(j);
      p1[k].val.push_back(a / nb[j].diag);
      q1[k].idx.push_back(j);
      q1[k].val.push_back(a / mine.diag);
    }
  });
}

DistributedSolver::Mode& DistributedSolver::rhop_mode(int R) {
  if (!is_power_of_two(R)) {
    throw InvalidArgument("R-hop solver: R = " + std::to_string(R) +
                          " is not a power of two");
  }
  auto found = rhop_.find(R);
  if (found != rhop_.end()) return *found->second;

  auto mode = std::make_unique<Mode>();
  mode->R = R;
  mode->net = std::make_unique<SyncNetwork>(*topo_, R, /*strict=*/true);
  SyncNetwork& net = *mode->net;
  const int n = s_.size();
  Field<LocalRow> base(n);
  exchange_base_rows(net, rows_, base, mode->p1, mode->q1);

  // f0 / f1: extend the powers one step per round. Column j of the next
  // power only needs row j of M, which lives l+1 hops away at most:
  //   [P^(l+1)]_kj = sum_r P^l_kr (D_r / D_j) P_jr = sum_r P^l_kr A_jr / D_j
  //   [Q^(l+1)]_kj = sum_r Q^l_kr (D_j / D_r) Q_jr = sum_r Q^l_kr A_jr / D_r
  std::vector<SparseRow> p = mode->p1;
  std::vector<SparseRow> q = mode->q1;
  std::vector<double> pk(n, 0.0);
  std::vector<double> qk(n, 0.0);
  std::vector<double> next_p(n, 0.0);
  std::vector<double> next_q(n, 0.0);
  for (int l = 1; l < R; ++l) {
    std::vector<SparseRow> p_next(n);
    std::vector<SparseRow> q_next(n);
    net.run_round([&](NodeContext& ctx) {
      const int k = ctx.id();
      auto view = ctx.gather(base, l + 1);
      auto row_of = [&](int j) -> const LocalRow& {
        return j == k ? ctx.own(base) : view[j];
      };
      for (int t = 0; t < p[k].nnz(); ++t) pk[p[k].idx[t]] = p[k].val[t];
      for (int t = 0; t < q[k].nnz(); ++t) {
        const int r = q[k].idx[t];
        qk[r] = q[k].val[t] / row_of(r).diag;
      }
      const std::vector<int> cols = ball_columns(*topo_, k, l + 1);
      for (int j : cols) {
        const LocalRow& rj = row_of(j);
        double sp = 0.0;
        double sq = 0.0;
        for (int t = 0; t < rj.off.nnz(); ++t) {
          const int r = rj.off.idx[t];
          sp += pk[r] * rj.off.val[t];
          sq += qk[r] * rj.off.val[t];
        }
        next_p[j] = sp / rj.diag;
        next_q[j] = sq;
      }
      p_next[k] = compress(next_p, cols);
      q_next[k] = compress(next_q, cols);
      for (int j : cols) next_p[j] = next_q[j] = 0.0;
      for (int r : p[k].idx) pk[r] = 0.0;
      for (int r : q[k].idx) qk[r] = 0.0;
    });
    p = std::move(p_next);
    q = std::move(q_next);
  }
  mode->c0 = std::move(p);
  mode->c1 = std::move(q);
  mode->setup = net.take_transcript();
  return *rhop_.emplace(R, std::move(mode)).first->second;
}

DistributedSolver::Mode& DistributedSolver::full_mode() {
  if (full_) return *full_;
  auto mode = std::make_unique<Mode>();
  mode->full = true;
  const int diam = std::max(1, topo_->diameter());
  mode->R = diam;
  mode->net = std::make_unique<SyncNetwork>(*topo_, diam, /*strict=*/false);
  SyncNetwork& net = *mode->net;
  const int n = s_.size();
  const int d = chain_.d;
  Field<LocalRow> base(n);
  exchange_base_rows(net, rows_, base, mode->p1, mode->q1);

  // Squaring with the D-ratio symmetry; rows of the half power come from
  // every node within twice its exponent:
  //   [P^2h]_kj = sum_r P^h_kr (D_r / D_j) P^h_jr
  //   [Q^2h]_kj = sum_r Q^h_kr (D_j / D_r) Q^h_jr
  if (d >= 1) {
    mode->p_levels.push_back(mode->p1);
    mode->q_levels.push_back(mode->q1);
  }
  Field<PowerRecord> records(n);
  std::vector<double> pk(n, 0.0);
  std::vector<double> qk(n, 0.0);
  std::vector<double> next_p(n, 0.0);
  std::vector<double> next_q(n, 0.0);
  for (int level = 1; level < d; ++level) {
    const auto& p = mode->p_levels.back();
    const auto& q = mode->q_levels.back();
    const long long h = 1LL << (level - 1);
    const int radius = static_cast<int>(std::min<long long>(2 * h, diam));
    if (level == 1) {
      net.run_round([&](NodeContext& ctx) {
        const int k = ctx.id();
        ctx.publish(records, PowerRecord{rows_[k].diag, p[k], q[k]});
      });
    }
    std::vector<SparseRow> p_next(n);
    std::vector<SparseRow> q_next(n);
    net.run_round([&](NodeContext& ctx) {
      const int k = ctx.id();
      auto view = ctx.gather(records, radius);
      auto rec = [&](int j) -> const PowerRecord& {
        return j == k ? ctx.own(records) : view[j];
      };
      for (int t = 0; t < p[k].nnz(); ++t) {
        const int r = p[k].idx[t];
        pk[r] = p[k].val[t] * rec(r).diag;
      }
      for (int t = 0; t < q[k].nnz(); ++t) {
        const int r = q[k].idx[t];
        qk[r] = q[k].val[t] / rec(r).diag;
      }
      const std::vector<int> cols = ball_columns(*topo_, k, radius);
      for (int j : cols) {
        const PowerRecord& rj = rec(j);
        double sp = 0.0;
        for (int t = 0; t < rj.p.nnz(); ++t) sp += pk[rj.p.idx[t]] * rj.p.val[t];
        double sq = 0.0;
        for (int t = 0; t < rj.q.nnz(); ++t) sq += qk[rj.q.idx[t]] * rj.q.val[t];
        next_p[j] = sp / rj.diag;
        next_q[j] = sq * rj.diag;
      }
      p_next[k] = compress(next_p, cols);
      q_next[k] = compress(next_q, cols);
      for (int j : cols) next_p[j] = next_q[j] = 0.0;
      for (int r : p[k].idx) pk[r] = 0.0;
      for (int r : q[k].idx) qk[r] = 0.0;
      ctx.publish(records, PowerRecord{rows_[k].diag, p_next[k], q_next[k]});
    });
    mode->p_levels.push_back(std::move(p_next));
    mode->q_levels.push_back(std::move(q_next));
  }
  mode->setup = net.take_transcript();
  full_ = std::move(mode);
  return *full_;
}

std::vector<DistributedSolver::Stage> DistributedSolver::schedule(const Mode& mode) const {
  std::vector<Stage> out;
  const int d = chain_.d;
  const int diam = std::max(1, topo_->diameter());
  auto stage = [&](bool forward, int i, long long exponent) {
    Stage st;
    st.forward = forward;
    st.i = i;
    const int level = forward ? i - 1 : i;
    if (mode.full) {
      st.rows = forward ? &mode.p_levels[level] : &mode.q_levels[level];
      st.radius = static_cast<int>(std::min<long long>(exponent, diam));
      st.count = 1;
    } else if (exponent < mode.R) {
      st.rows = forward ? &mode.p1 : &mode.q1;
      st.radius = 1;
      st.count = exponent;
    } else {
      st.rows = forward ? &mode.c0 : &mode.c1;
      st.radius = mode.R;
      st.count = exponent / mode.R;
    }
    return st;
  };
  for (int i = 1; i <= d; ++i) out.push_back(stage(true, i, 1LL << (i - 1)));
  for (int i = d - 1; i >= 0; --i) out.push_back(stage(false, i, 1LL << i));
  return out;
}

SolveRun DistributedSolver::run(Mode& mode, const Eigen::VectorXd& b0, int q,
                                const IterateObserver& observer) {
  const int n = s_.size();
  if (b0.size() != n) throw InvalidArgument("distributed solve: size mismatch");
  SyncNetwork& net = *mode.net;
  net.take_transcript();  // drop anything left from earlier runs
  const int d = chain_.d;
  const std::vector<Stage> stages = schedule(mode);

  Field<double> wire(n);
  std::vector<double> input(n);
  std::vector<double> carry(n);  // b_{i-1} forward, x_{i+1} backward
  std::vector<std::vector<double>> bhist(d + 1, std::vector<double>(n, 0.0));
  std::vector<std::vector<double>> xhist(d + 1, std::vector<double>(n, 0.0));
  std::vector<double> chi(n, 0.0);
  std::vector<double> y(n, 0.0);
  bool refining = false;

  // After x_0 is known: the first crude solve yields chi, later ones update y.
  auto finish = [&](NodeContext& ctx, double x0) {
    const int k = ctx.id();
    if (!refining) {
      chi[k] = x0;
      y[k] = 0.0;
    } else {
      y[k] = y[k] - x0 + chi[k];
    }
    ctx.publish(wire, q > 0 ? y[k] : x0);
  };

  auto crude = [&]() {
    for (int k = 0; k < n; ++k) {
      carry[k] = input[k];
      bhist[0][k] = input[k];
    }
    if (d == 0) {
      net.run_round([&](NodeContext& ctx) {
        const int k = ctx.id();
        const double x0 = input[k] / rows_[k].diag;
        xhist[0][k] = x0;
        finish(ctx, x0);
      });
      return;
    }
    for (const Stage& st : stages) {
      const std::vector<SparseRow>& rows = *st.rows;
      for (long long step = 0; step < st.count; ++step) {
        const bool last = step + 1 == st.count;
        net.run_round([&](NodeContext& ctx) {
          const int k = ctx.id();
          auto view = ctx.gather(wire, st.radius);
          const SparseRow& row = rows[k];
          double acc = 0.0;
          for (int t = 0; t < row.nnz(); ++t) {
            const int j = row.idx[t];
            acc += row.val[t] * (j == k ? ctx.own(wire) : view[j]);
          }
          if (!last) {
            ctx.publish(wire, acc);
            return;
          }
          const double dk = rows_[k].diag;
          if (st.forward) {
            const double bi = carry[k] + acc;
            bhist[st.i][k] = bi;
            if (st.i < d) {
              carry[k] = bi;
              ctx.publish(wire, bi);
            } else {
              carry[k] = bi / dk;
              xhist[d][k] = carry[k];
              ctx.publish(wire, carry[k]);
            }
          } else {
            const double xi = 0.5 * (bhist[st.i][k] / dk + carry[k] + acc);
            carry[k] = xi;
            xhist[st.i][k] = xi;
            if (st.i > 0) {
              ctx.publish(wire, xi);
            } else {
              finish(ctx, xi);
            }
          }
        });
      }
    }
  };

  SolveRun result;
  for (int k = 0; k < n; ++k) {
    wire.seed(k, b0[k]);
    input[k] = b0[k];
  }
  crude();
  result.crude_solves = 1;
  refining = true;
  for (int t = 1; t <= q; ++t) {
    // u1 = M y from 1-hop neighbours; it is the next crude input.
    net.run_round([&](NodeContext& ctx) {
      const int k = ctx.id();
      auto view = ctx.gather(wire, 1);
      const LocalRow& row = rows_[k];
      double u1 = row.diag * ctx.own(wire);
      for (int s = 0; s < row.off.nnz(); ++s) u1 -= row.off.val[s] * view[row.off.idx[s]];
      input[k] = u1;
      ctx.publish(wire, u1);
    });
    crude();
    ++result.crude_solves;
    if (observer) observer(t, Eigen::Map<const Eigen::VectorXd>(y.data(), n));
  }

  result.x = Eigen::VectorXd(n);
  for (int k = 0; k < n; ++k) result.x[k] = q > 0 ? y[k] : xhist[0][k];
  result.richardson_iterations = q;
  result.transcript = net.take_transcript();
  last_mode_ = &mode;
  last_b_ = std::move(bhist);
  last_x_ = std::move(xhist);
  return result;
}

SolveRun DistributedSolver::distr_rsolve(const Eigen::VectorXd& b0) {
  return run(full_mode(), b0, 0, {});
}

SolveRun DistributedSolver::distr_esolve(const Eigen::VectorXd& b0, double eps,
                                         const IterateObserver& observer) {
  if (!(eps > 0.0) || eps > 0.5) {
    throw InvalidArgument("distr_esolve: eps must lie in (0, 1/2]");
  }
  return run(full_mode(), b0, richardson_iterations(eps), observer);
}

SolveRun DistributedSolver::rdist_rsolve(const Eigen::VectorXd& b0, int R) {
  return run(rhop_mode(R), b0, 0, {});
}

SolveRun DistributedSolver::edist_rsolve(const Eigen::VectorXd& b0, int R, double eps,
                                         const IterateObserver& observer) {
  if (!(eps > 0.0) || eps > 0.5) {
    throw InvalidArgument("edist_rsolve: eps must lie in (0, 1/2]");
  }
  return run(rhop_mode(R), b0, richardson_iterations(eps), observer);
}

const std::vector<SparseRow>& DistributedSolver::f0_rows(int R) {
  return rhop_mode(R).c0;
}

const std::vector<SparseRow>& DistributedSolver::f1_rows(int R) {
  return rhop_mode(R).c1;
}

Transcript DistributedSolver::setup_transcript(int R) const {
  auto found = rhop_.find(R);
  return found == rhop_.end() ? Transcript{} : found->second->setup;
}

Transcript DistributedSolver::full_setup_transcript() const {
  return full_ ? full_->setup : Transcript{};
}

NodeSolverState DistributedSolver::node_state(int k) const {
  if (k < 0 || k >= s_.size()) throw InvalidArgument("node_state: node out of range");
  NodeSolverState st;
  st.k = k;
  st.row_m = rows_[k];
  if (last_mode_ != nullptr && !last_mode_->full) {
    st.forward_power = last_mode_->c0[k];
    st.backward_power = last_mode_->c1[k];
  }
  for (const auto& b : last_b_) st.b_components.push_back(b[k]);
  for (const auto& x : last_x_) st.x_components.push_back(x[k]);
  return st;
}

void write_solution_csv(const Eigen::VectorXd& crude, const Eigen::VectorXd& refined,
                        std::ostream& out) {
  out << "node,x0,xtilde\n";
  out.precision(17);
  for (Eigen::Index k = 0; k < refined.size(); ++k) {
    out << k << ',' << crude[k] << ',' << refined[k] << '\n';
  }
}

}  // namespace lapflow
