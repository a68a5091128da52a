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

#include "lapflow/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <limits>
#include <random>
#include <sstream>

#include "lapflow/errors.hpp"
#include "lapflow/reference.hpp"

namespace lapflow {

namespace {

using RowIter = Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator;

constexpr double kDominanceTol = 1e-12;

std::vector<int> support_components(const StandardSplitting& s) {
  const int n = s.size();
  std::vector<int> comp(n, -1);
  int next = 0;
  for (int root = 0; root < n; ++root) {
    if (comp[root] >= 0) continue;
    std::queue<int> q;
    q.push(root);
    comp[root] = next;
    while (!q.empty()) {
      int u = q.front();
      q.pop();
      for (RowIter it(s.off, u); it; ++it) {
        int v = static_cast<int>(it.col());
        if (it.value() != 0.0 && comp[v] < 0) {
          comp[v] = next;
          q.push(v);
        }
      }
    }
    ++next;
  }
  return comp;
}

Eigen::VectorXd random_unit(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (int k = 0; k < n; ++k) v[k] = normal(rng);
  return v;
}

void remove_mean(Eigen::VectorXd& v) { v.array() -= v.mean(); }

}  // namespace

std::string SddmReport::summary() const {
  std::ostringstream out;
  out << (sddm ? "SDDM" : sdd ? "SDD (singular)" : "not SDD");
  if (!positive_diagonal) out << "; non-positive diagonal";
  if (!symmetric) out << "; asymmetric";
  if (!nonpositive_offdiagonal) out << "; positive off-diagonal in M";
  if (!diagonally_dominant) {
    out << "; dominance fails in " << dominance_violations.size() << " rows";
  }
  out << "; strict rows " << strict_rows.size();
  return out.str();
}

SddmReport validate_sddm(const StandardSplitting& s) {
  SddmReport r;
  const int n = s.size();
  for (int k = 0; k < n; ++k) {
    if (!(s.diag[k] > 0.0)) r.positive_diagonal = false;
    double row_sum = 0.0;
    for (RowIter it(s.off, k); it; ++it) {
      if (it.value() < 0.0) r.nonpositive_offdiagonal = false;
      if (it.col() == k && it.value() != 0.0) r.nonpositive_offdiagonal = false;
      if (s.off.coeff(it.col(), k) != it.value()) r.symmetric = false;
      row_sum += it.value();
    }
    const double slack = s.diag[k] - row_sum;
    const double tol = kDominanceTol * std::max(std::abs(s.diag[k]), row_sum);
    if (slack < -tol) {
      r.diagonally_dominant = false;
      r.dominance_violations.push_back(k);
    } else if (slack > tol) {
      r.strict_rows.push_back(k);
    }
  }
  auto comp = support_components(s);
  const int ncomp = n == 0 ? 0 : *std::max_element(comp.begin(), comp.end()) + 1;
  std::vector<char> has_strict(ncomp, 0);
  for (int k : r.strict_rows) has_strict[comp[k]] = 1;
  r.strict_in_every_component =
      n > 0 && std::all_of(has_strict.begin(), has_strict.end(),
                           [](char c) { return c != 0; });
  r.sdd = r.positive_diagonal && r.symmetric && r.nonpositive_offdiagonal &&
          r.diagonally_dominant;
  r.sddm = r.sdd && r.strict_in_every_component;
  return r;
}

double condition_bound(const WeightedGraph& g, bool grounded) {
  if (!g.is_connected()) throw InvalidArgument("condition_bound: disconnected graph");
  const double n = g.node_count();
  const double ratio = g.max_weight() / g.min_weight();
  return (grounded ? n * n * n * n : n * n * n) * ratio;
}

ConditionEstimate estimate_condition(const StandardSplitting& s, double tol,
                                     int max_iters) {
  const int n = s.size();
  if (n == 0) throw InvalidArgument("estimate_condition: empty system");
  SddmReport report = validate_sddm(s);
  if (!report.sdd) {
    throw InvalidArgument("estimate_condition: not SDD (" + report.summary() + ")");
  }
  const bool singular = !report.sddm;
  if (singular && n < 2) {
    throw InvalidArgument("estimate_condition: singular 1x1 system");
  }
  DirectSolver solver(s);  // throws for singular systems it cannot handle

  std::mt19937_64 rng(0x5eed);
  ConditionEstimate est;

  Eigen::VectorXd v = random_unit(n, rng);
  if (singular) remove_mean(v);
  v.normalize();
  double top = 0.0;
  double prev = -1.0;
  int it = 0;
  for (; it < max_iters; ++it) {
    Eigen::VectorXd w = s.apply(v);
    if (singular) remove_mean(w);
    top = v.dot(w);
    const double norm = w.norm();
    if (norm == 0.0) break;
    v = w / norm;
    if (std::abs(top - prev) <= tol * std::abs(top)) break;
    prev = top;
  }
  if (it == max_iters) {
    throw ConvergenceError("estimate_condition: power iteration did not converge",
                           {top, prev});
  }
  est.iterations = it + 1;

  v = random_unit(n, rng);
  if (singular) remove_mean(v);
  v.normalize();
  double inv_top = 0.0;
  prev = -1.0;
  for (it = 0; it < max_iters; ++it) {
    Eigen::VectorXd w = solver.solve(v);
    if (singular) remove_mean(w);
    inv_top = v.dot(w);
    v = w / w.norm();
    if (std::abs(inv_top - prev) <= tol * std::abs(inv_top)) break;
    prev = inv_top;
  }
  if (it == max_iters) {
    throw ConvergenceError("estimate_condition: inverse iteration did not converge",
                           {top, 1.0 / inv_top, 1.0 / prev});
  }
  est.iterations += it + 1;
  est.lambda_max = top;
  est.lambda_min = 1.0 / inv_top;
  est.kappa = std::max(1.0, est.lambda_max / est.lambda_min);
  return est;
}

const char* to_string(KappaSource source) {
  switch (source) {
    case KappaSource::kAnalyticBound:
      return "analytic_bound";
    case KappaSource::kEstimated:
      return "estimated";
    case KappaSource::kGiven:
      return "given";
  }
  return "unknown";
}

ChainSpec chain_length(double kappa, KappaSource source) {
  if (!(kappa >= 1.0) || !std::isfinite(kappa)) {
    throw InvalidArgument("chain_length: kappa must be >= 1");
  }
  ChainSpec spec;
  spec.kappa = kappa;
  spec.kappa_source = source;
  const double target = kChainConstant * kappa;
  int d = 0;
  while (std::ldexp(1.0, d) < target) ++d;
  spec.d = d;
  const double ec = std::exp(static_cast<double>(kChainConstant));
  spec.eps_d = std::log(ec / (ec - 1.0));
  return spec;
}

OrderCheck approx_order_check(const LinearOp& x_apply, const LinearOp& y_apply,
                              int n, double alpha, int probes,
                              std::uint64_t seed, bool project_out_ones) {
  OrderCheck out;
  std::mt19937_64 rng(seed);
  const double hi = std::exp(alpha);
  const double lo = std::exp(-alpha);
  for (int p = 0; p < probes; ++p) {
    Eigen::VectorXd v = random_unit(n, rng);
    if (project_out_ones) remove_mean(v);
    v.normalize();
    const double xv = v.dot(x_apply(v));
    const double yv = v.dot(y_apply(v));
    const double log_ratio = (xv > 0.0 && yv > 0.0)
                                 ? std::abs(std::log(yv / xv))
                                 : std::numeric_limits<double>::infinity();
    out.worst_log_ratio = std::max(out.worst_log_ratio, log_ratio);
    const double slack = 1e-12 * std::abs(xv);
    if (yv > hi * xv + slack || yv < lo * xv - slack) {
      if (out.ok) out.violating = v;
      out.ok = false;
    }
  }
  return out;
}

}  // namespace lapflow
