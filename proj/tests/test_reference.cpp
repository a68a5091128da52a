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

#include "helpers.hpp"
#include "lapflow/errors.hpp"
#include "lapflow/reference.hpp"
#include "lapflow/spectral.hpp"

using namespace lapflow;

namespace {

// Dense crude operator Z0, assembled column by column.
Eigen::MatrixXd crude_operator(const StandardSplitting& s, int d) {
  const int n = s.size();
  Eigen::MatrixXd z(n, n);
  for (int j = 0; j < n; ++j) z.col(j) = parallel_rsolve({&s, d}, Eigen::VectorXd::Unit(n, j));
  return z;
}

}  // namespace

TEST_CASE("direct solve") {
  SUBCASE("diagonal") {
    Eigen::VectorXd d(2);
    d << 2.0, 2.0;
    Eigen::VectorXd b(2);
    b << 4.0, 6.0;
    Eigen::VectorXd x = direct_solve(make_splitting(d, {}), b);
    CHECK(x[0] == doctest::Approx(2.0));
    CHECK(x[1] == doctest::Approx(3.0));
  }
  SUBCASE("grounded P3") {
    StandardSplitting s = ground(laplacian(path_graph(3)), 2);
    Eigen::VectorXd b(2);
    b << 1.0, 0.0;
    Eigen::VectorXd x = direct_solve(s, b);
    // [[1,-1],[-1,2]] x = [1,0]  =>  x = [2,1]
    CHECK(x[0] == doctest::Approx(2.0));
    CHECK(x[1] == doctest::Approx(1.0));
  }
  SUBCASE("grounded P3 at the other end") {
    StandardSplitting s = ground(laplacian(path_graph(3)), 0);
    Eigen::VectorXd b(2);
    b << 1.0, 0.0;
    Eigen::VectorXd x = direct_solve(s, b);
    // [[2,-1],[-1,1]] x = [1,0]  =>  x = [1,1]
    CHECK(x[0] == doctest::Approx(1.0));
    CHECK(x[1] == doctest::Approx(1.0));
  }
  SUBCASE("Laplacian with b outside the complement of ones") {
    Eigen::VectorXd b = Eigen::VectorXd::Ones(2);
    CHECK_THROWS_AS(direct_solve(laplacian(path_graph(2)), b), Error);
  }
  SUBCASE("Laplacian solution is mean zero") {
    StandardSplitting l = laplacian(barbell_graph(4, 3));
    Eigen::VectorXd b = lftest::random_vector(l.size(), 3);
    b.array() -= b.mean();
    Eigen::VectorXd x = direct_solve(l, b);
    CHECK(std::abs(x.sum()) <= 1e-10);
    CHECK((l.apply(x) - b).norm() <= 1e-10 * b.norm());
  }
  SUBCASE("residual on random systems") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      StandardSplitting s = lftest::random_grounded(60, 200, seed);
      Eigen::VectorXd b = lftest::random_vector(s.size(), seed);
      CHECK((s.apply(direct_solve(s, b)) - b).norm() <= 1e-10 * b.norm());
    }
  }
  SUBCASE("sparse path above the dense limit") {
    StandardSplitting s = ground(laplacian(grid_graph(35, 35)), 0);
    Eigen::VectorXd b = lftest::random_vector(s.size(), 9);
    CHECK((s.apply(direct_solve(s, b)) - b).norm() <= 1e-10 * b.norm());
  }
}

TEST_CASE("Richardson iteration count") {
  const double base = std::log(1.0 / (std::cbrt(2.0) - 1.0));
  for (double eps : {0.5, 0.1, 0.05, 1e-2, 1e-4, 1e-8}) {
    CHECK(richardson_iterations(eps) == static_cast<int>(std::ceil(std::log(1.0 / eps) / base)));
  }
  CHECK(richardson_iterations(0.5) == 1);
  CHECK(richardson_iterations(0.1) == 2);
  CHECK(richardson_iterations(1e-2) == 4);
  CHECK(richardson_iterations(1e-4) == 7);
  CHECK_THROWS_AS(richardson_iterations(0.0), Error);
}

TEST_CASE("crude solve") {
  SUBCASE("diagonal system is exact for any chain length") {
    Eigen::VectorXd d(3);
    d << 1.0, 2.0, 4.0;
    StandardSplitting s = make_splitting(d, {});
    Eigen::VectorXd b(3);
    b << 1.0, 1.0, 1.0;
    for (int depth : {0, 1, 5}) {
      Eigen::VectorXd x = parallel_rsolve({&s, depth}, b);
      CHECK(x[2] == doctest::Approx(0.25));
    }
  }
  SUBCASE("zero right-hand side") {
    StandardSplitting s = lftest::random_grounded(10, 20, 2);
    CHECK(parallel_rsolve({&s, 6}, Eigen::VectorXd::Zero(s.size())).norm() == 0.0);
  }
  SUBCASE("grounded P5 operator sandwich") {
    StandardSplitting s = ground(laplacian(path_graph(5)), 0);
    ChainSpec chain = chain_length(estimate_condition(s).kappa);
    Eigen::MatrixXd z = crude_operator(s, chain.d);
    Eigen::MatrixXd inv = lftest::dense_inverse(s);
    LinearOp x = [&](const Eigen::VectorXd& v) { return Eigen::VectorXd(inv * v); };
    LinearOp y = [&](const Eigen::VectorXd& v) { return Eigen::VectorXd(z * v); };
    CHECK(approx_order_check(x, y, s.size(), chain.eps_d, 100, 5).ok);
  }
}

TEST_CASE("crude solution quality") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const int n = 10 + 4 * static_cast<int>(seed);
    StandardSplitting s = lftest::random_grounded(n, lftest::edges_for(n, seed), seed);
    ChainSpec chain = chain_length(estimate_condition(s).kappa);
    Eigen::VectorXd b = lftest::random_vector(s.size(), seed);
    Eigen::MatrixXd m = s.dense();
    Eigen::VectorXd exact = m.fullPivLu().solve(b);
    Eigen::VectorXd crude = parallel_rsolve({&s, chain.d}, b);
    const double e = chain.eps_d;
    const double bound = 2.0 * (std::exp(e) - 1.0) * std::exp(e);
    const double err2 = std::pow(lftest::m_norm(m, exact - crude), 2);
    CHECK(err2 <= bound * std::pow(lftest::m_norm(m, exact), 2));
  }
}

TEST_CASE("refined solve") {
  SUBCASE("diagonal system exact after one iteration") {
    Eigen::VectorXd d(3);
    d << 3.0, 2.0, 5.0;
    StandardSplitting s = make_splitting(d, {});
    Eigen::VectorXd b = lftest::random_vector(3, 1);
    Eigen::VectorXd x = parallel_esolve({&s, 2}, b, 0.5);
    CHECK((x - b.cwiseQuotient(d)).norm() <= 1e-15);
  }
  SUBCASE("grounded P10") {
    StandardSplitting s = ground(laplacian(path_graph(10)), 0);
    ChainSpec chain = chain_length(estimate_condition(s).kappa);
    Eigen::VectorXd b = lftest::random_vector(s.size(), 4);
    Eigen::MatrixXd m = s.dense();
    Eigen::VectorXd exact = m.fullPivLu().solve(b);
    Eigen::VectorXd x = parallel_esolve({&s, chain.d}, b, 1e-4);
    CHECK(lftest::m_norm(m, x - exact) <= 1e-4 * lftest::m_norm(m, exact));
  }
  SUBCASE("eps outside (0, 1/2]") {
    StandardSplitting s = ground(laplacian(path_graph(4)), 0);
    Eigen::VectorXd b = Eigen::VectorXd::Ones(3);
    CHECK_THROWS_AS(parallel_esolve({&s, 4}, b, 0.6), Error);
    CHECK_THROWS_AS(parallel_esolve({&s, 4}, b, 0.0), Error);
  }
  SUBCASE("per-iteration contraction") {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
      StandardSplitting s = lftest::random_grounded(30, 80, seed);
      ChainSpec chain = chain_length(estimate_condition(s).kappa);
      Eigen::MatrixXd m = s.dense();
      Eigen::VectorXd b = lftest::random_vector(s.size(), seed + 50);
      Eigen::VectorXd exact = m.fullPivLu().solve(b);
      double prev = lftest::m_norm(m, exact);  // y_0 = 0
      parallel_esolve({&s, chain.d}, b, 1e-3, [&](int, const Eigen::VectorXd& y) {
        const double err = lftest::m_norm(m, y - exact);
        if (prev > 1e-12 * lftest::m_norm(m, exact)) CHECK(err <= (0.26 + 1e-6) * prev);
        prev = err;
      });
    }
  }
}

TEST_CASE("inverse identity for the squared system") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const int n = 4 + static_cast<int>(seed);
    StandardSplitting s = lftest::random_grounded(n + 1, lftest::edges_for(n + 1, seed), seed);
    Eigen::MatrixXd d = s.diag.asDiagonal();
    Eigen::MatrixXd dinv = s.diag.cwiseInverse().asDiagonal();
    Eigen::MatrixXd a = Eigen::MatrixXd(s.off);
    Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd lhs = (d - a).inverse();
    Eigen::MatrixXd rhs =
        0.5 * (dinv + (id + dinv * a) * (d - a * dinv * a).inverse() * (id + a * dinv));
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("squared system stays SDDM") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const int n = 6 + static_cast<int>(seed);
    StandardSplitting s = lftest::random_grounded(n + 1, lftest::edges_for(n + 1, seed), seed);
    Eigen::MatrixXd a = Eigen::MatrixXd(s.off);
    Eigen::MatrixXd a2 = a * s.diag.cwiseInverse().asDiagonal() * a;
    // D - A D^-1 A: move the diagonal of A D^-1 A into D.
    Eigen::VectorXd diag = s.diag - a2.diagonal();
    std::vector<Edge> off;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (a2(i, j) != 0.0) off.push_back({i, j, a2(i, j)});
    CHECK(validate_sddm(make_splitting(diag, off)).sddm);
  }
}

TEST_CASE("energy norm") {
  StandardSplitting s = lftest::random_grounded(12, 20, 1);
  Eigen::VectorXd v = lftest::random_vector(s.size(), 2);
  CHECK(energy_norm(s, v) == doctest::Approx(lftest::m_norm(s.dense(), v)));
}
