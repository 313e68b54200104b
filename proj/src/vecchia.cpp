// Copyright 2026 The vgpc Authors
//
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

#include "vgpc/vecchia.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace vgpc {
namespace {

struct Candidate {
  double sqdist;
  int original;
  int index;
};

bool closer(const Candidate& a, const Candidate& b) {
  if (a.sqdist != b.sqdist) return a.sqdist < b.sqdist;
  return a.original < b.original;
}

// Nearest min(k, p) among plan positions [0, p) measured from `target`.
std::vector<int> nearest_earlier(const Matrix& coords, const std::vector<int>& order, int p,
                                 int k, int target, std::vector<Candidate>& scratch) {
  const int take = std::min(k, p);
  if (take == 0) return {};
  scratch.clear();
  for (int q = 0; q < p; ++q)
    scratch.push_back({squared_distance(coords, target, coords, order[q]), order[q], q});
  std::partial_sort(scratch.begin(), scratch.begin() + take, scratch.end(), closer);
  std::vector<int> out(static_cast<std::size_t>(take));
  for (int j = 0; j < take; ++j) out[j] = scratch[j].index;
  return out;
}

void check_plan_args(const Matrix& x, int m) {
  if (x.rows() < 1) throw InvalidArgument("build_plan: need at least one row");
  if (m < 1) throw InvalidArgument("build_plan: conditioning size m must be >= 1");
  if (!x.allFinite()) throw InvalidArgument("build_plan: non-finite input");
}

}  // namespace

bool ConditioningPlan::saturated() const {
  for (int p = 0; p < size(); ++p)
    if (static_cast<int>(neighbors[p].size()) != p) return false;
  return true;
}

ConditioningPlan build_plan(const Matrix& x, int m, std::uint64_t seed) {
  check_plan_args(x, m);
  const int n = static_cast<int>(x.rows());
  ConditioningPlan plan;
  plan.m = m;
  plan.order.resize(n);
  std::iota(plan.order.begin(), plan.order.end(), 0);
  Rng rng(seed);
  std::shuffle(plan.order.begin(), plan.order.end(), rng);
  plan.position.resize(n);
  for (int p = 0; p < n; ++p) plan.position[plan.order[p]] = p;

  plan.neighbors.resize(n);
  std::vector<Candidate> scratch;
  scratch.reserve(n);
  for (int p = 0; p < n; ++p)
    plan.neighbors[p] = nearest_earlier(x, plan.order, p, m, plan.order[p], scratch);
  return plan;
}

ConditioningPlan build_stacked_plan(const Matrix& x, const Matrix& xstar, int m,
                                    std::uint64_t seed) {
  if (x.cols() != xstar.cols())
    throw InvalidArgument("build_stacked_plan: training and test column dimensions differ");
  ConditioningPlan plan = build_plan(x, m, seed);
  const int n = static_cast<int>(x.rows());
  const int nt = static_cast<int>(xstar.rows());
  Matrix stacked(n + nt, x.cols());
  stacked << x, xstar;
  plan.order.resize(n + nt);
  plan.position.resize(n + nt);
  plan.neighbors.resize(n + nt);
  std::vector<Candidate> scratch;
  scratch.reserve(n + nt);
  for (int k = 0; k < nt; ++k) {
    const int p = n + k;
    plan.order[p] = p;
    plan.position[p] = p;
    plan.neighbors[p] = nearest_earlier(stacked, plan.order, p, m, p, scratch);
  }
  return plan;
}

std::vector<int> nearest_rows(const Matrix& ref, const Eigen::RowVectorXd& query, int k) {
  const int n = static_cast<int>(ref.rows());
  const int take = std::min(k, n);
  std::vector<Candidate> cand;
  cand.reserve(n);
  for (int i = 0; i < n; ++i) cand.push_back({(ref.row(i) - query).squaredNorm(), i, i});
  std::partial_sort(cand.begin(), cand.begin() + take, cand.end(), closer);
  std::vector<int> out(static_cast<std::size_t>(take));
  for (int j = 0; j < take; ++j) out[j] = cand[j].index;
  return out;
}

ConditionalWeights conditional_weights(const Matrix& ref, std::span<const int> rows,
                                       const Eigen::RowVectorXd& target, const KernelConfig& cfg,
                                       bool target_nugget) {
  const Eigen::Index k = static_cast<Eigen::Index>(rows.size());
  ConditionalWeights out;
  double prior_var = cfg.scale + kJitter + (target_nugget ? cfg.nugget : 0.0);
  if (k == 0) {
    out.variance = prior_var;
    return out;
  }
  // Gather the neighbourhood (target last), pack the lower-triangle squared
  // distances and evaluate the kernel in one vectorized pass.
  const Eigen::Index d = ref.cols();
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> pts(k + 1, d);
  for (Eigen::Index a = 0; a < k; ++a) pts.row(a) = ref.row(rows[a]);
  pts.row(k) = target;
  Matrix sq(k * (k + 1) / 2 + k, 1);
  Eigen::Index idx = 0;
  for (Eigen::Index a = 0; a <= k; ++a)
    for (Eigen::Index b = 0; b < std::min(a, k); ++b) {
      double acc = 0.0;
      for (Eigen::Index c = 0; c < d; ++c) {
        const double diff = pts(a, c) - pts(b, c);
        acc += diff * diff;
      }
      sq(idx++, 0) = acc;
    }
  const Matrix kv = kernel_from_sqdist(sq, cfg);
  Matrix kcc(k, k);
  Vector s(k);
  idx = 0;
  for (Eigen::Index a = 0; a <= k; ++a)
    for (Eigen::Index b = 0; b < std::min(a, k); ++b) (a < k ? kcc(a, b) : s(b)) = kv(idx++, 0);
  kcc.diagonal().setConstant(cfg.scale + cfg.nugget + kJitter);
  Eigen::LLT<Matrix, Eigen::Lower> llt(kcc);
  if (llt.info() != Eigen::Success)
    throw NumericalError("conditioning covariance is not positive definite");
  out.weights = llt.solve(s);
  out.variance = prior_var - s.dot(out.weights);
  return out;
}

std::span<const int> SparseU::column_rows(int p) const {
  const auto b = col_start_[static_cast<std::size_t>(p)];
  const auto e = col_start_[static_cast<std::size_t>(p) + 1];
  return {rows_.data() + b, e - b};
}

std::span<const double> SparseU::column_values(int p) const {
  const auto b = col_start_[static_cast<std::size_t>(p)];
  const auto e = col_start_[static_cast<std::size_t>(p) + 1];
  return {values_.data() + b, e - b};
}

Vector SparseU::to_plan_order(const Vector& original) const {
  if (original.size() != size()) throw InvalidArgument("vector length does not match factor size");
  Vector out(size());
  for (int p = 0; p < size(); ++p) out(p) = original(order_[p]);
  return out;
}

Vector SparseU::to_original_order(const Vector& planned) const {
  if (planned.size() != size()) throw InvalidArgument("vector length does not match factor size");
  Vector out(size());
  for (int p = 0; p < size(); ++p) out(order_[p]) = planned(p);
  return out;
}

Vector SparseU::multiply_transpose(const Vector& z) const {
  Vector out(size());
  for (int p = 0; p < size(); ++p) {
    double acc = diag_[p] * z(p);
    for (auto k = col_start_[p]; k < col_start_[p + 1]; ++k) acc += values_[k] * z(rows_[k]);
    out(p) = acc;
  }
  return out;
}

Vector SparseU::solve_transpose(const Vector& a) const {
  Vector z(size());
  for (int p = 0; p < size(); ++p) {
    double acc = a(p);
    for (auto k = col_start_[p]; k < col_start_[p + 1]; ++k) acc -= values_[k] * z(rows_[k]);
    z(p) = acc / diag_[p];
  }
  return z;
}

Matrix SparseU::to_dense() const {
  Matrix u = Matrix::Zero(size(), size());
  for (int p = 0; p < size(); ++p) {
    u(p, p) = diag_[p];
    for (auto k = col_start_[p]; k < col_start_[p + 1]; ++k) u(rows_[k], p) = values_[k];
  }
  return u;
}

void SparseU::check_structure(const ConditioningPlan& plan) const {
  if (plan.size() != size()) throw NumericalError("factor size does not match plan");
  for (int p = 0; p < size(); ++p) {
    if (!(diag_[p] > 0) || !std::isfinite(diag_[p]))
      throw NumericalError("non-positive diagonal in U at position " + std::to_string(p), p);
    const auto rows = column_rows(p);
    if (rows.size() > static_cast<std::size_t>(plan.m))
      throw NumericalError("column " + std::to_string(p) + " exceeds m nonzeros", p);
    for (int r : rows) {
      if (r >= p) throw NumericalError("U is not strictly upper triangular", p);
      if (std::find(plan.neighbors[p].begin(), plan.neighbors[p].end(), r) ==
          plan.neighbors[p].end())
        throw NumericalError("U entry outside conditioning set at column " + std::to_string(p),
                             p);
    }
  }
}

SparseU assemble_sparse_u(std::vector<int> order, std::vector<std::vector<int>> rows,
                          std::vector<std::vector<double>> values, std::vector<double> diag) {
  SparseU u;
  u.order_ = std::move(order);
  u.diag_ = std::move(diag);
  const std::size_t n = u.diag_.size();
  u.col_start_.assign(n + 1, 0);
  for (std::size_t p = 0; p < n; ++p) u.col_start_[p + 1] = u.col_start_[p] + rows[p].size();
  u.rows_.reserve(u.col_start_[n]);
  u.values_.reserve(u.col_start_[n]);
  for (std::size_t p = 0; p < n; ++p) {
    u.rows_.insert(u.rows_.end(), rows[p].begin(), rows[p].end());
    u.values_.insert(u.values_.end(), values[p].begin(), values[p].end());
  }
  return u;
}

namespace {

SparseU build_per_column(const Matrix& inputs, const ConditioningPlan& plan,
                         const KernelConfig& cfg) {
  const int n = plan.size();
  std::vector<std::vector<int>> rows(n);
  std::vector<std::vector<double>> values(n);
  std::vector<double> diag(n);
  long failed = -1;

#pragma omp parallel for schedule(dynamic, 64)
  for (int p = 0; p < n; ++p) {
    const auto& nb = plan.neighbors[p];
    std::vector<int> original(nb.size());
    for (std::size_t j = 0; j < nb.size(); ++j) original[j] = plan.order[nb[j]];
    ConditionalWeights cw;
    bool ok = true;
    try {
      cw = conditional_weights(inputs, original, inputs.row(plan.order[p]), cfg);
      ok = cw.variance > 0 && std::isfinite(cw.variance);
    } catch (const NumericalError&) {
      ok = false;
    }
    if (!ok) {
#pragma omp critical
      if (failed < 0 || plan.order[p] < failed) failed = plan.order[p];
      continue;
    }
    const double sd = std::sqrt(cw.variance);
    diag[p] = 1.0 / sd;
    rows[p] = nb;
    values[p].resize(nb.size());
    for (std::size_t j = 0; j < nb.size(); ++j) values[p][j] = -cw.weights(j) / sd;
  }
  if (failed >= 0)
    throw NumericalError("conditional variance is not positive at observation " +
                             std::to_string(failed),
                         failed);
  return assemble_sparse_u(plan.order, std::move(rows), std::move(values), std::move(diag));
}

SparseU build_dense(const Matrix& inputs, const ConditioningPlan& plan, const KernelConfig& cfg) {
  const int n = plan.size();
  Matrix permuted(n, inputs.cols());
  for (int p = 0; p < n; ++p) permuted.row(p) = inputs.row(plan.order[p]);
  Matrix sigma = cov_matrix(permuted, cfg);
  sigma.diagonal().array() += kJitter;
  Eigen::LLT<Matrix, Eigen::Lower> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw NumericalError("dense covariance is not positive definite");
  // U = L^{-T}: upper triangular with U U^T = Sigma^{-1}.
  Matrix u = Matrix::Identity(n, n);
  llt.matrixU().solveInPlace(u);
  std::vector<std::vector<int>> rows(n);
  std::vector<std::vector<double>> values(n);
  std::vector<double> diag(n);
  for (int p = 0; p < n; ++p) {
    diag[p] = u(p, p);
    if (!(diag[p] > 0) || !std::isfinite(diag[p]))
      throw NumericalError("conditional variance is not positive at observation " +
                               std::to_string(plan.order[p]),
                           plan.order[p]);
    rows[p].resize(p);
    values[p].resize(p);
    for (int r = 0; r < p; ++r) {
      rows[p][r] = r;
      values[p][r] = u(r, p);
    }
  }
  return assemble_sparse_u(plan.order, std::move(rows), std::move(values), std::move(diag));
}

}  // namespace

SparseU build_U(const Matrix& inputs, const ConditioningPlan& plan, const KernelConfig& cfg,
                BuildMethod method) {
  cfg.validate();
  if (inputs.rows() != plan.size())
    throw InvalidArgument("build_U: plan was built for " + std::to_string(plan.size()) +
                          " rows, inputs have " + std::to_string(inputs.rows()));
  if (!inputs.allFinite()) throw InvalidArgument("build_U: non-finite input");
  if (method == BuildMethod::DenseCholesky && !plan.saturated())
    throw InvalidArgument("build_U: dense route needs a saturated plan");
  const bool dense = method == BuildMethod::DenseCholesky ||
                     (method == BuildMethod::Auto && plan.size() > 32 && plan.saturated());
  return dense ? build_dense(inputs, plan, cfg) : build_per_column(inputs, plan, cfg);
}

Vector sample_mvn(const SparseU& u, Rng& rng) {
  std::normal_distribution<double> normal;
  Vector a(u.size());
  for (int p = 0; p < u.size(); ++p) a(p) = normal(rng);
  return u.to_original_order(u.solve_transpose(a));
}

double log_likelihood_mvn(const Vector& z, const SparseU& u) {
  if (z.size() != u.size())
    throw InvalidArgument("log_likelihood_mvn: vector length does not match factor");
  const Vector w = u.multiply_transpose(u.to_plan_order(z));
  double logdet = 0.0;
  for (int p = 0; p < u.size(); ++p) logdet += std::log(u.diag(p));
  return logdet - 0.5 * w.squaredNorm() -
         0.5 * u.size() * std::log(2.0 * std::numbers::pi);
}

Matrix StackedU::train_block() const {
  return factor.to_dense().topLeftCorner(n_train, n_train);
}

Matrix StackedU::cross_block() const {
  return factor.to_dense().topRightCorner(n_train, n_test);
}

Matrix StackedU::test_block() const {
  return factor.to_dense().bottomRightCorner(n_test, n_test);
}

StackedU build_stacked_U(const Matrix& x, const Matrix& xstar, int m, std::uint64_t seed,
                         const KernelConfig& cfg) {
  const ConditioningPlan plan = build_stacked_plan(x, xstar, m, seed);
  Matrix stacked(x.rows() + xstar.rows(), x.cols());
  stacked << x, xstar;
  return build_stacked_U(stacked, plan, static_cast<int>(x.rows()), cfg);
}

StackedU build_stacked_U(const Matrix& stacked_inputs, const ConditioningPlan& stacked_plan,
                         int n_train, const KernelConfig& cfg) {
  StackedU out;
  out.n_train = n_train;
  out.n_test = stacked_plan.size() - n_train;
  out.factor = build_U(stacked_inputs, stacked_plan, cfg, BuildMethod::PerColumn);
  return out;
}

namespace {

// Continues the forward solve U^T z = a through the test columns with the
// training block pinned to z_train.
Vector solve_test_block(const StackedU& s, const Vector& z_train, const Vector* noise) {
  if (z_train.size() != s.n_train)
    throw InvalidArgument("joint prediction: training vector length mismatch");
  const SparseU& u = s.factor;
  Vector z(u.size());
  for (int p = 0; p < s.n_train; ++p) z(p) = z_train(u.order()[p]);
  for (int p = s.n_train; p < u.size(); ++p) {
    double acc = noise ? (*noise)(p - s.n_train) : 0.0;
    const auto rows = u.column_rows(p);
    const auto vals = u.column_values(p);
    for (std::size_t k = 0; k < rows.size(); ++k) acc -= vals[k] * z(rows[k]);
    z(p) = acc / u.diag(p);
  }
  return z.tail(s.n_test);
}

}  // namespace

Vector joint_predictive_mean(const StackedU& stacked, const Vector& z_train) {
  return solve_test_block(stacked, z_train, nullptr);
}

Vector joint_predictive_draw(const StackedU& stacked, const Vector& z_train, Rng& rng) {
  std::normal_distribution<double> normal;
  Vector a(stacked.n_test);
  for (int k = 0; k < stacked.n_test; ++k) a(k) = normal(rng);
  return solve_test_block(stacked, z_train, &a);
}

Matrix joint_predictive_covariance(const StackedU& stacked) {
  const Matrix t = stacked.test_block();
  Matrix tinv = Matrix::Identity(stacked.n_test, stacked.n_test);
  t.triangularView<Eigen::Upper>().solveInPlace(tinv);
  return tinv.transpose() * tinv;
}

}  // namespace vgpc
