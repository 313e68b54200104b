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

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vgpc/common.hpp"
#include "vgpc/kernel.hpp"

namespace vgpc {

/// Random ordering of the observations plus, for every plan position, the
/// nearest earlier positions it conditions on. Positions are 0-based plan
/// indices; `order[p]` maps a position back to its original row.
struct ConditioningPlan {
  int m = 0;
  std::vector<int> order;
  std::vector<int> position;
  /// neighbors[p] lists earlier plan positions, nearest first.
  std::vector<std::vector<int>> neighbors;

  int size() const { return static_cast<int>(order.size()); }
  /// True when every position conditions on all earlier ones.
  bool saturated() const;
};

/// Uniformly random ordering drawn from `seed`, then min(p, m) nearest
/// earlier points per position. Distance ties go to the lower original row.
ConditioningPlan build_plan(const Matrix& x, int m, std::uint64_t seed);

/// Training rows ordered exactly as build_plan(x, m, seed); test rows are
/// appended in their given order and may condition on any earlier row,
/// training or test. Original row ids index the stacked matrix [x; xstar].
ConditioningPlan build_stacked_plan(const Matrix& x, const Matrix& xstar, int m,
                                    std::uint64_t seed);

/// Indices of the (at most) k rows of `ref` nearest to `query`, nearest
/// first, ties to the lower index.
std::vector<int> nearest_rows(const Matrix& ref, const Eigen::RowVectorXd& query, int k);

/// Gaussian conditional of a target point given values at `rows` of `ref`:
/// E[z_target | z_rows] = weights . z_rows, Var = variance.
struct ConditionalWeights {
  Vector weights;
  double variance = 0.0;
};

/// Kriging weights with jitter on every diagonal (including the target's).
/// `target_nugget` controls whether the target's own variance carries the
/// nugget. Throws NumericalError when the conditional variance is not positive.
ConditionalWeights conditional_weights(const Matrix& ref, std::span<const int> rows,
                                       const Eigen::RowVectorXd& target, const KernelConfig& cfg,
                                       bool target_nugget = true);

/// Sparse upper-triangular factor with U U^T ~= Sigma^{-1}, stored by
/// column in plan order. Column p holds the diagonal 1/sigma_p and the
/// off-diagonal entries at rows in the conditioning set of p.
class SparseU {
 public:
  SparseU() = default;

  int size() const { return static_cast<int>(diag_.size()); }
  /// Off-diagonal plus diagonal nonzeros.
  std::size_t nnz() const { return rows_.size() + diag_.size(); }

  double diag(int p) const { return diag_[static_cast<std::size_t>(p)]; }
  std::span<const int> column_rows(int p) const;
  std::span<const double> column_values(int p) const;
  const std::vector<int>& order() const { return order_; }

  /// Permutes an original-order vector into plan order and back.
  Vector to_plan_order(const Vector& original) const;
  Vector to_original_order(const Vector& planned) const;

  /// Returns U^T z for z in plan order.
  Vector multiply_transpose(const Vector& z_plan) const;
  /// Forward substitution: solves U^T z = a for z, both in plan order.
  Vector solve_transpose(const Vector& a_plan) const;

  /// Dense copy in plan order; meant for tests and small problems.
  Matrix to_dense() const;

  /// Throws NumericalError when the sparsity pattern is not contained in
  /// the plan's conditioning sets or a diagonal is not strictly positive.
  void check_structure(const ConditioningPlan& plan) const;

 private:
  friend SparseU assemble_sparse_u(std::vector<int> order, std::vector<std::vector<int>> rows,
                                   std::vector<std::vector<double>> values,
                                   std::vector<double> diag);

  std::vector<int> order_;
  std::vector<std::size_t> col_start_;
  std::vector<int> rows_;
  std::vector<double> values_;
  std::vector<double> diag_;
};

SparseU assemble_sparse_u(std::vector<int> order, std::vector<std::vector<int>> rows,
                          std::vector<std::vector<double>> values, std::vector<double> diag);

enum class BuildMethod {
  Auto,           // dense Cholesky for saturated plans, per column otherwise
  PerColumn,      // one small factorization per column
  DenseCholesky,  // inverse Cholesky factor; requires a saturated plan
};

/// Assembles U for `inputs` (rows indexed by the plan's original ids).
/// Neighbor selection lives in the plan, so kernel inputs may differ from
/// the coordinates the plan was built on.
SparseU build_U(const Matrix& inputs, const ConditioningPlan& plan, const KernelConfig& cfg,
                BuildMethod method = BuildMethod::Auto);

/// Draws Z ~ N(0, (U U^T)^{-1}); returned in original order.
Vector sample_mvn(const SparseU& u, Rng& rng);

/// Log density of N(0, (U U^T)^{-1}) at z (original order), including the
/// -(n/2) log(2 pi) constant.
double log_likelihood_mvn(const Vector& z, const SparseU& u);

/// Stacked training/testing factor partitioned as
///   [ U_X  U_{X,X*} ]
///   [ 0    U_{X*}   ]
struct StackedU {
  SparseU factor;
  int n_train = 0;
  int n_test = 0;

  /// Dense blocks (plan order within each block).
  Matrix train_block() const;
  Matrix cross_block() const;
  Matrix test_block() const;
};

StackedU build_stacked_U(const Matrix& x, const Matrix& xstar, int m, std::uint64_t seed,
                         const KernelConfig& cfg);
StackedU build_stacked_U(const Matrix& stacked_inputs, const ConditioningPlan& stacked_plan,
                         int n_train, const KernelConfig& cfg);

/// mu* = -(U_{X*}^T)^{-1} U_{X,X*}^T z for training values z (original
/// training order); result is in the given test order.
Vector joint_predictive_mean(const StackedU& stacked, const Vector& z_train);

/// One draw from N(mu*, (U_{X*} U_{X*}^T)^{-1}).
Vector joint_predictive_draw(const StackedU& stacked, const Vector& z_train, Rng& rng);

/// Dense Sigma* in test order; O(n'^3), for tests and small n'.
Matrix joint_predictive_covariance(const StackedU& stacked);

}  // namespace vgpc
