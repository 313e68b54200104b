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

#include <string_view>

#include "vgpc/common.hpp"

namespace vgpc {

enum class KernelFamily { SquaredExponential, Matern52 };

KernelFamily parse_kernel_family(std::string_view name);
std::string_view to_string(KernelFamily family);

/// Isotropic stationary kernel. The lengthscale is in squared-distance units
/// for both families: exp(-d^2 / lengthscale) and Matern-5/2 at
/// r = d / sqrt(lengthscale).
struct KernelConfig {
  KernelFamily family = KernelFamily::Matern52;
  double lengthscale = 0.1;
  double scale = 1.0;   // tau^2
  double nugget = 0.0;  // added on the diagonal only

  /// Throws InvalidArgument unless lengthscale > 0, scale > 0, nugget >= 0.
  void validate() const;
};

/// Off-diagonal kernel value as a function of squared distance.
double kernel_from_sqdist(double sqdist, const KernelConfig& cfg);

/// Elementwise kernel over a matrix of squared distances (no nugget).
Matrix kernel_from_sqdist(const Matrix& sqdist, const KernelConfig& cfg);

/// Kernel between two points. `same_observation` marks the diagonal of a
/// covariance matrix, where the nugget is added.
double kernel_eval(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& xp,
                   const KernelConfig& cfg, bool same_observation = false);

/// Symmetric covariance of the rows of A; diagonal is scale + nugget.
Matrix cov_matrix(const Eigen::Ref<const Matrix>& a, const KernelConfig& cfg);

/// Cross covariance between rows of A and rows of B (no nugget).
Matrix cov_matrix(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b,
                  const KernelConfig& cfg);

double squared_distance(const Eigen::Ref<const Matrix>& a, Eigen::Index i,
                        const Eigen::Ref<const Matrix>& b, Eigen::Index j);

}  // namespace vgpc
