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

#include <doctest.h>

#include <cmath>
#include <sstream>

#include "helpers.hpp"
#include "lapflow/distributed.hpp"
#include "lapflow/errors.hpp"
#include "lapflow/reference.hpp"
#include "lapflow/spectral.hpp"

using namespace lapflow;

namespace {

double rel_dev(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double scale = std::max(a.norm(), 1e-300);
  return (a - b).norm() / scale;
}

ChainSpec estimated_chain(const StandardSplitting& s) {
  return chain_length(estimate_condition(s).kappa, KappaSource::kEstimated);
}

Eigen::MatrixXd dense_power(const Eigen::MatrixXd& m, int e) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Identity(m.rows(), m.cols());
  for (int i = 0; i < e; ++i) out = out * m;
  return out;
}

StandardSplitting diagonal_system() {
  Eigen::VectorXd d(4);
  d << 1.0, 2.0, 4.0, 8.0;
  return make_splitting(d, {});
}

}  // namespace

TEST_CASE("diagonal system") {
  StandardSplitting s = diagonal_system();
  DistributedSolver solver(s, chain_length(1.0));
  Eigen::VectorXd b = lftest::random_vector(4, 1);
  Eigen::VectorXd expect = b.cwiseQuotient(s.diag);
  CHECK(rel_dev(expect, solver.distr_rsolve(b).x) <= 1e-15);
  CHECK(rel_dev(expect, solver.rdist_rsolve(b, 1).x) <= 1e-15);
  CHECK(rel_dev(expect, solver.distr_esolve(b, 0.3).x) <= 1e-15);
  SolveRun run = solver.edist_rsolve(b, 2, 1e-6);
  CHECK(rel_dev(expect, run.x) <= 1e-15);
  CHECK(run.transcript.max_hop_used == 0);
}

TEST_CASE("zero right-hand side") {
  StandardSplitting s = lftest::random_grounded(12, 25, 3);
  DistributedSolver solver(s, estimated_chain(s));
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(s.size());
  CHECK(solver.distr_rsolve(zero).x.norm() == 0.0);
  CHECK(solver.rdist_rsolve(zero, 2).x.norm() == 0.0);
}

TEST_CASE("full-communication crude solve matches the reference") {
  StandardSplitting s = ground(laplacian(path_graph(5)), 0);
  ChainSpec chain = estimated_chain(s);
  DistributedSolver solver(s, chain);
  Eigen::VectorXd b = Eigen::VectorXd::Ones(s.size());
  Eigen::VectorXd ref = parallel_rsolve({&s, chain.d}, b);
  CHECK(rel_dev(ref, solver.distr_rsolve(b).x) <= 1e-9);
}

TEST_CASE("full-communication refined solve accuracy") {
  StandardSplitting s = lftest::random_grounded(20, 60, 11);
  DistributedSolver solver(s, estimated_chain(s));
  Eigen::VectorXd b = lftest::random_vector(s.size(), 2);
  Eigen::MatrixXd m = s.dense();
  Eigen::VectorXd exact = m.fullPivLu().solve(b);
  SolveRun run = solver.distr_esolve(b, 1e-3);
  CHECK(lftest::m_norm(m, run.x - exact) <= 1e-3 * lftest::m_norm(m, exact));
  CHECK(run.richardson_iterations == richardson_iterations(1e-3));
  CHECK(run.crude_solves == run.richardson_iterations + 1);
}

TEST_CASE("halving eps adds iterations per the formula") {
  StandardSplitting s = lftest::random_grounded(10, 20, 5);
  DistributedSolver solver(s, estimated_chain(s));
  Eigen::VectorXd b = lftest::random_vector(s.size(), 5);
  for (double eps : {0.5, 0.1, 1e-3, 1e-6}) {
    CHECK(solver.distr_esolve(b, eps).richardson_iterations == richardson_iterations(eps));
    CHECK(solver.distr_esolve(b, eps / 2).richardson_iterations ==
          richardson_iterations(eps / 2));
  }
}

TEST_CASE("row powers") {
  SUBCASE("R = 1 gives the walk matrices") {
    StandardSplitting s = lftest::random_grounded(10, 20, 2);
    DistributedSolver solver(s, estimated_chain(s));
    Eigen::MatrixXd a = Eigen::MatrixXd(s.off);
    Eigen::MatrixXd p = a * s.diag.cwiseInverse().asDiagonal();
    Eigen::MatrixXd q = s.diag.cwiseInverse().asDiagonal() * a;
    const auto& f0 = solver.f0_rows(1);
    const auto& f1 = solver.f1_rows(1);
    for (int k = 0; k < s.size(); ++k) {
      for (int j = 0; j < s.size(); ++j) {
        CHECK(f0[k].at(j) == doctest::Approx(p(k, j)).epsilon(1e-14));
        CHECK(f1[k].at(j) == doctest::Approx(q(k, j)).epsilon(1e-14));
      }
    }
  }
  SUBCASE("P4, R = 2") {
    StandardSplitting s = ground(laplacian(path_graph(5)), 0);
    DistributedSolver solver(s, estimated_chain(s));
    Eigen::MatrixXd p = Eigen::MatrixXd(s.off) * s.diag.cwiseInverse().asDiagonal();
    Eigen::MatrixXd p2 = p * p;
    const auto& f0 = solver.f0_rows(2);
    for (int k = 0; k < s.size(); ++k)
      for (int j = 0; j < s.size(); ++j) CHECK(std::abs(f0[k].at(j) - p2(k, j)) <= 1e-12);
  }
  SUBCASE("dense oracle and support on random graphs") {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
      const int n = 12 + 3 * static_cast<int>(seed);
      StandardSplitting s = lftest::random_grounded(n, lftest::edges_for(n, seed), seed);
      DistributedSolver solver(s, estimated_chain(s));
      Eigen::MatrixXd dinv = s.diag.cwiseInverse().asDiagonal();
      Eigen::MatrixXd a = Eigen::MatrixXd(s.off);
      const Topology& topo = solver.topology();
      for (int R : {2, 4, 8}) {
        Eigen::MatrixXd pr = dense_power(a * dinv, R);
        Eigen::MatrixXd qr = dense_power(dinv * a, R);
        const auto& f0 = solver.f0_rows(R);
        const auto& f1 = solver.f1_rows(R);
        for (int k = 0; k < s.size(); ++k) {
          for (int j = 0; j < s.size(); ++j) {
            CHECK(std::abs(f0[k].at(j) - pr(k, j)) <= 1e-12 * (1.0 + std::abs(pr(k, j))));
            CHECK(std::abs(f1[k].at(j) - qr(k, j)) <= 1e-12 * (1.0 + std::abs(qr(k, j))));
          }
          for (int j : f0[k].idx) {
            const int h = topo.hop(k, j);
            CHECK((h >= 0 && h <= R));
          }
          for (int j : f1[k].idx) {
            const int h = topo.hop(k, j);
            CHECK((h >= 0 && h <= R));
          }
        }
        Transcript setup = solver.setup_transcript(R);
        CHECK(setup.max_hop_used <= R);
        CHECK(setup.rounds == 2 + (R - 1));
      }
    }
  }
  SUBCASE("non power of two") {
    StandardSplitting s = lftest::random_grounded(8, 12, 1);
    DistributedSolver solver(s, estimated_chain(s));
    CHECK_THROWS_AS(solver.f0_rows(3), Error);
    CHECK_THROWS_AS(solver.rdist_rsolve(Eigen::VectorXd::Ones(s.size()), 6), Error);
    CHECK_FALSE(is_power_of_two(0));
    CHECK(is_power_of_two(16));
  }
}

TEST_CASE("R-hop crude solve") {
  SUBCASE("large radius reduces to full-communication") {
    StandardSplitting s = lftest::random_grounded(10, 18, 4);
    ChainSpec chain = estimated_chain(s);
    DistributedSolver solver(s, chain);
    Eigen::VectorXd b = lftest::random_vector(s.size(), 4);
    const int big = 1 << (chain.d - 1);
    CHECK(rel_dev(solver.distr_rsolve(b).x, solver.rdist_rsolve(b, big).x) <= 1e-12);
  }
  SUBCASE("grounded barbell, R = 1") {
    StandardSplitting s = ground(laplacian(barbell_graph(5, 5)), 0);
    ChainSpec chain = estimated_chain(s);
    DistributedSolver solver(s, chain);
    Eigen::VectorXd b = lftest::random_vector(s.size(), 9);
    SolveRun run = solver.rdist_rsolve(b, 1);
    CHECK(rel_dev(parallel_rsolve({&s, chain.d}, b), run.x) <= 1e-9);
    CHECK(run.transcript.max_hop_used <= 1);
    CHECK(run.transcript.strict);
  }
}

TEST_CASE("R-hop refined solve") {
  StandardSplitting s = lftest::random_grounded(20, 60, 21);
  DistributedSolver solver(s, estimated_chain(s));
  Eigen::VectorXd b = lftest::random_vector(s.size(), 6);
  Eigen::MatrixXd m = s.dense();
  Eigen::VectorXd exact = m.fullPivLu().solve(b);
  SolveRun rhop = solver.edist_rsolve(b, 1, 1e-4);
  CHECK(lftest::m_norm(m, rhop.x - exact) <= 1e-4 * lftest::m_norm(m, exact));
  CHECK(rhop.transcript.max_hop_used <= 1);
  SolveRun full = solver.distr_esolve(b, 1e-4);
  CHECK(rel_dev(full.x, rhop.x) <= 1e-8);
}

TEST_CASE("crude operator sandwich") {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const int n = 10 + 5 * static_cast<int>(seed);
    StandardSplitting s = lftest::random_grounded(n, lftest::edges_for(n, seed), seed);
    ChainSpec chain = estimated_chain(s);
    DistributedSolver solver(s, chain);
    const int m = s.size();
    Eigen::MatrixXd z(m, m);
    for (int j = 0; j < m; ++j) z.col(j) = solver.rdist_rsolve(Eigen::VectorXd::Unit(m, j), 2).x;
    Eigen::MatrixXd inv = lftest::dense_inverse(s);
    LinearOp x = [&](const Eigen::VectorXd& v) { return Eigen::VectorXd(inv * v); };
    LinearOp y = [&](const Eigen::VectorXd& v) { return Eigen::VectorXd(z * v); };
    CHECK(approx_order_check(x, y, m, chain.eps_d, 100, seed).ok);
  }
}

TEST_CASE("implementations agree") {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    std::mt19937_64 rng(seed);
    const int n = std::uniform_int_distribution<int>(5, 40)(rng);
    StandardSplitting s = lftest::random_grounded(n, lftest::edges_for(n, seed), seed);
    ChainSpec chain = estimated_chain(s);
    DistributedSolver solver(s, chain);
    Eigen::VectorXd b = lftest::random_vector(s.size(), seed + 1);
    Eigen::VectorXd ref = parallel_rsolve({&s, chain.d}, b);
    CHECK(rel_dev(ref, solver.distr_rsolve(b).x) <= 1e-9);
    for (int R : {1, 2, 4}) CHECK(rel_dev(ref, solver.rdist_rsolve(b, R).x) <= 1e-9);
  }
}

TEST_CASE("messages grow linearly with Richardson iterations") {
  StandardSplitting s = lftest::random_grounded(15, 35, 2);
  DistributedSolver solver(s, estimated_chain(s));
  Eigen::VectorXd b = lftest::random_vector(s.size(), 2);
  const long long crude = solver.rdist_rsolve(b, 2).transcript.messages_total;
  long long per_iter = -1;
  for (int e = 1; e <= 10; ++e) {
    SolveRun run = solver.edist_rsolve(b, 2, std::ldexp(1.0, -e));
    const int q = run.richardson_iterations;
    const long long extra = run.transcript.messages_total - crude;
    if (per_iter < 0) per_iter = extra / q;
    CHECK(extra == per_iter * q);
  }
}

TEST_CASE("node state and solution export") {
  StandardSplitting s = lftest::random_grounded(9, 15, 3);
  ChainSpec chain = estimated_chain(s);
  DistributedSolver solver(s, chain);
  Eigen::VectorXd b = lftest::random_vector(s.size(), 3);
  SolveRun run = solver.rdist_rsolve(b, 2);
  NodeSolverState st = solver.node_state(4);
  CHECK(st.k == 4);
  CHECK(st.row_m.diag == s.diag[4]);
  CHECK(st.b_components.size() == static_cast<size_t>(chain.d + 1));
  CHECK(st.x_components.size() == static_cast<size_t>(chain.d + 1));
  CHECK(st.b_components[0] == b[4]);
  CHECK(st.x_components[0] == run.x[4]);
  CHECK(st.forward_power.idx == solver.f0_rows(2)[4].idx);
  CHECK_THROWS_AS(solver.node_state(99), Error);

  std::ostringstream csv;
  write_solution_csv(run.x, run.x, csv);
  CHECK(csv.str().rfind("node,x0,xtilde\n0,", 0) == 0);
}

TEST_CASE("full-communication transcripts") {
  StandardSplitting s = lftest::random_grounded(14, 30, 7);
  ChainSpec chain = estimated_chain(s);
  DistributedSolver solver(s, chain);
  Eigen::VectorXd b = lftest::random_vector(s.size(), 7);
  SolveRun run = solver.distr_rsolve(b);
  // One round per forward and backward level.
  CHECK(run.transcript.rounds == 2 * chain.d);
  CHECK_FALSE(run.transcript.strict);
  CHECK(run.transcript.max_hop_used <= solver.topology().diameter());
  CHECK(solver.full_setup_transcript().rounds == 2 + (chain.d >= 2 ? chain.d - 1 + 1 : 0));
}
