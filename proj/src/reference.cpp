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

#include "lapflow/reference.hpp"

#include <cmath>
#include <variant>

#include <Eigen/Cholesky>
#include <Eigen/SparseCholesky>

#include "lapflow/errors.hpp"

namespace lapflow {

namespace {

constexpr int kDenseLimit = 1000;
constexpr int kMaxChainLength = 40;

}  // namespace

struct DirectSolver::Impl {
  StandardSplitting system;  // the (possibly grounded) factored system
  StandardSplitting original;
  bool laplacian = false;
  Eigen::LLT<Eigen::MatrixXd> dense;
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> sparse;
  bool use_dense = true;

  Eigen::VectorXd raw_solve(const Eigen::VectorXd& b) const {
    Eigen::VectorXd x = use_dense ? Eigen::VectorXd(dense.solve(b))
                                  : Eigen::VectorXd(sparse.solve(b));
    // One refinement step keeps the residual near machine precision.
    Eigen::VectorXd r = b - system.apply(x);
    x += use_dense ? Eigen::VectorXd(dense.solve(r))
                   : Eigen::VectorXd(sparse.solve(r));
    return x;
  }
};

DirectSolver::DirectSolver(const StandardSplitting& s)
    : impl_(std::make_unique<Impl>()) {
  s.check_structure();
  SddmReport report = validate_sddm(s);
  if (!report.sdd) {
    throw InvalidArgument("direct_solve: system is not SDD (" + report.summary() +
                          ")");
  }
  impl_->original = s;
  if (report.sddm) {
    impl_->system = s;
  } else {
    if (s.size() < 2 || !support_graph(s).is_connected() ||
        !report.strict_rows.empty()) {
      throw NumericalFailure("direct_solve: singular system is not a connected Laplacian");
    }
    impl_->laplacian = true;
    impl_->system = ground(s, 0);
  }
  const int n = impl_->system.size();
  impl_->use_dense = n <= kDenseLimit;
  if (impl_->use_dense) {
    impl_->dense.compute(impl_->system.dense());
    if (impl_->dense.info() != Eigen::Success) {
      throw NumericalFailure("direct_solve: dense Cholesky failed");
    }
  } else {
    impl_->sparse.compute(impl_->system.matrix());
    if (impl_->sparse.info() != Eigen::Success) {
      throw NumericalFailure("direct_solve: sparse Cholesky failed");
    }
  }
}

DirectSolver::~DirectSolver() = default;
DirectSolver::DirectSolver(DirectSolver&&) noexcept = default;
DirectSolver& DirectSolver::operator=(DirectSolver&&) noexcept = default;

bool DirectSolver::laplacian_mode() const { return impl_->laplacian; }

Eigen::VectorXd DirectSolver::solve(const Eigen::VectorXd& b) const {
  const int n = impl_->original.size();
  if (b.size() != n) throw InvalidArgument("direct_solve: size mismatch");
  if (!impl_->laplacian) return impl_->raw_solve(b);
  if (std::abs(b.sum()) > 1e-10 * std::max(1.0, b.lpNorm<1>())) {
    throw NumericalFailure("direct_solve: Laplacian system needs b orthogonal to 1");
  }
  Eigen::VectorXd x(n);
  x[0] = 0.0;
  x.tail(n - 1) = impl_->raw_solve(b.tail(n - 1));
  x.array() -= x.mean();
  return x;
}

Eigen::VectorXd direct_solve(const StandardSplitting& s, const Eigen::VectorXd& b) {
  return DirectSolver(s).solve(b);
}

int richardson_iterations(double eps) {
  if (!(eps > 0.0) || !(eps < 1.0)) {
    throw InvalidArgument("richardson_iterations: eps must lie in (0, 1)");
  }
  const double rate = std::log(1.0 / (std::cbrt(2.0) - 1.0));
  return static_cast<int>(std::ceil(std::log(1.0 / eps) / rate));
}

Eigen::VectorXd parallel_rsolve(const InverseChainView& chain,
                                const Eigen::VectorXd& b0) {
  if (chain.splitting == nullptr) throw InvalidArgument("parallel_rsolve: no system");
  const StandardSplitting& s = *chain.splitting;
  if (b0.size() != s.size()) throw InvalidArgument("parallel_rsolve: size mismatch");
  if (chain.d < 0 || chain.d > kMaxChainLength) {
    throw InvalidArgument("parallel_rsolve: chain length out of range");
  }
  const Eigen::VectorXd dinv = s.diag.cwiseInverse();
  const int d = chain.d;

  // b_i = b_{i-1} + (A D^-1)^(2^(i-1)) b_{i-1}
  std::vector<Eigen::VectorXd> b(d + 1);
  b[0] = b0;
  for (int i = 1; i <= d; ++i) {
    Eigen::VectorXd u = b[i - 1];
    const long long reps = 1LL << (i - 1);
    for (long long t = 0; t < reps; ++t) u = s.off * u.cwiseProduct(dinv);
    b[i] = b[i - 1] + u;
  }
  // x_i = 1/2 [D^-1 b_i + x_{i+1} + (D^-1 A)^(2^i) x_{i+1}]
  Eigen::VectorXd x = b[d].cwiseProduct(dinv);
  for (int i = d - 1; i >= 0; --i) {
    Eigen::VectorXd u = x;
    const long long reps = 1LL << i;
    for (long long t = 0; t < reps; ++t) u = dinv.cwiseProduct(s.off * u);
    x = 0.5 * (b[i].cwiseProduct(dinv) + x + u);
  }
  return x;
}

Eigen::VectorXd parallel_esolve(const InverseChainView& chain,
                                const Eigen::VectorXd& b0, double eps,
                                const IterateObserver& observer) {
  if (!(eps > 0.0) || eps > 0.5) {
    throw InvalidArgument("parallel_esolve: eps must lie in (0, 1/2]");
  }
  const int q = richardson_iterations(eps);
  const StandardSplitting& s = *chain.splitting;
  const Eigen::VectorXd chi = parallel_rsolve(chain, b0);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(s.size());
  for (int t = 1; t <= q; ++t) {
    Eigen::VectorXd u1 = s.apply(y);
    Eigen::VectorXd u2 = parallel_rsolve(chain, u1);
    y = y - u2 + chi;
    if (observer) observer(t, y);
  }
  return y;
}

double energy_norm(const StandardSplitting& s, const Eigen::VectorXd& v) {
  return std::sqrt(std::max(0.0, v.dot(s.apply(v))));
}

}  // namespace lapflow
