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

#include "vgpc/kernel.hpp"

#include <cmath>
#include <string>

namespace vgpc {

KernelFamily parse_kernel_family(std::string_view name) {
  if (name == "matern52" || name == "matern") return KernelFamily::Matern52;
  if (name == "sqexp" || name == "se" || name == "squared_exponential")
    return KernelFamily::SquaredExponential;
  throw InvalidArgument("unknown kernel family '" + std::string(name) + "'");
}

std::string_view to_string(KernelFamily family) {
  return family == KernelFamily::Matern52 ? "matern52" : "sqexp";
}

void KernelConfig::validate() const {
  if (!(lengthscale > 0) || !std::isfinite(lengthscale))
    throw InvalidArgument("kernel lengthscale must be positive and finite");
  if (!(scale > 0) || !std::isfinite(scale))
    throw InvalidArgument("kernel scale must be positive and finite");
  if (!(nugget >= 0) || !std::isfinite(nugget))
    throw InvalidArgument("kernel nugget must be non-negative and finite");
}

double kernel_from_sqdist(double sqdist, const KernelConfig& cfg) {
  if (cfg.family == KernelFamily::SquaredExponential)
    return cfg.scale * std::exp(-sqdist / cfg.lengthscale);
  constexpr double kSqrt5 = 2.23606797749978969640917366873;
  const double r = std::sqrt(sqdist / cfg.lengthscale);
  return cfg.scale * (1.0 + kSqrt5 * r + (5.0 / 3.0) * r * r) * std::exp(-kSqrt5 * r);
}

Matrix kernel_from_sqdist(const Matrix& sqdist, const KernelConfig& cfg) {
  if (cfg.family == KernelFamily::SquaredExponential)
    return (cfg.scale * (-sqdist.array() / cfg.lengthscale).exp()).matrix();
  constexpr double kSqrt5 = 2.23606797749978969640917366873;
  const Eigen::ArrayXXd r = (sqdist.array() / cfg.lengthscale).sqrt();
  return (cfg.scale * (1.0 + kSqrt5 * r + (5.0 / 3.0) * r.square()) * (-kSqrt5 * r).exp())
      .matrix();
}

double squared_distance(const Eigen::Ref<const Matrix>& a, Eigen::Index i,
                        const Eigen::Ref<const Matrix>& b, Eigen::Index j) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < a.cols(); ++k) {
    const double d = a(i, k) - b(j, k);
    s += d * d;
  }
  return s;
}

double kernel_eval(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& xp,
                   const KernelConfig& cfg, bool same_observation) {
  if (x.size() != xp.size()) throw InvalidArgument("kernel_eval: dimension mismatch");
  if (!x.allFinite() || !xp.allFinite()) throw InvalidArgument("kernel_eval: non-finite input");
  const double k = kernel_from_sqdist((x - xp).squaredNorm(), cfg);
  return same_observation ? k + cfg.nugget : k;
}

Matrix cov_matrix(const Eigen::Ref<const Matrix>& a, const KernelConfig& cfg) {
  if (!a.allFinite()) throw InvalidArgument("cov_matrix: non-finite input");
  const Eigen::Index n = a.rows();
  Matrix k(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    k(j, j) = cfg.scale + cfg.nugget;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      k(i, j) = kernel_from_sqdist(squared_distance(a, i, a, j), cfg);
      k(j, i) = k(i, j);
    }
  }
  return k;
}

Matrix cov_matrix(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b,
                  const KernelConfig& cfg) {
  if (a.cols() != b.cols())
    throw InvalidArgument("cov_matrix: column dimensions differ (" + std::to_string(a.cols()) +
                          " vs " + std::to_string(b.cols()) + ")");
  if (!a.allFinite() || !b.allFinite()) throw InvalidArgument("cov_matrix: non-finite input");
  Matrix k(a.rows(), b.rows());
  for (Eigen::Index j = 0; j < b.rows(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      k(i, j) = kernel_from_sqdist(squared_distance(a, i, b, j), cfg);
  return k;
}

}  // namespace vgpc
