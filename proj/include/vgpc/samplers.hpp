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

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "vgpc/common.hpp"
#include "vgpc/kernel.hpp"
#include "vgpc/vecchia.hpp"

namespace vgpc {

inline constexpr int kEssMaxInnerIterations = 10000;

using LogLikelihood = std::function<double(const Vector&)>;
using PriorDraw = std::function<Vector(Rng&)>;

struct EssResult {
  Vector state;
  int inner_iterations = 0;
  double log_lik = 0.0;  // log likelihood at `state`
};

/// One bracket as seen at an inner iteration; filled only when requested.
struct EssBracket {
  double angle;
  double lower;
  double upper;
};

/// Elliptical slice sampling step. Draws Z' from the prior, a log-uniform
/// threshold below the current log likelihood and an initial angle, then
/// shrinks the angle bracket toward zero until a proposal on the ellipse
/// clears the threshold. `current_log_lik` may be passed to skip one
/// likelihood evaluation.
EssResult ess_step(const Vector& current, const PriorDraw& prior_draw,
                   const LogLikelihood& log_lik, Rng& rng,
                   std::optional<double> current_log_lik = std::nullopt,
                   std::vector<EssBracket>* trace = nullptr);

/// Gamma(shape, rate) prior and Unif[u*theta, theta/u] proposal for a
/// positive hyperparameter, with hard bounds.
struct MhSpec {
  double shape = 1.5;
  double rate = 2.6;
  double ratio = 2.0 / 3.0;
  double lower = 1e-4;
  double upper = 10.0;

  void validate() const;
  double log_prior(double value) const;
};

double gamma_log_density(double x, double shape, double rate);

struct MhOutcome {
  double value = 0.0;
  bool accepted = false;
  double log_lik = 0.0;  // log likelihood at `value`
};

/// Metropolis-Hastings for a positive scalar with the uniform-ratio
/// proposal. The Hastings correction for that proposal is prev/proposed.
/// Out-of-bounds proposals are rejected without evaluating the likelihood.
MhOutcome mh_ratio_step(double prev, double prev_log_lik,
                        const std::function<double(double)>& log_lik,
                        const std::function<double(double)>& log_prior, double ratio,
                        double lower, double upper, Rng& rng);

struct LengthscaleStep {
  double lengthscale = 0.0;
  bool accepted = false;
  std::shared_ptr<const SparseU> factor;
  double log_lik = 0.0;  // Vecchia MVN log likelihood of z under `factor`
};

/// MH update of the lengthscale through the Vecchia likelihood of z.
/// `cfg` carries every other kernel setting; `cached` is the factor at
/// `prev`. On rejection the cached factor is returned untouched.
LengthscaleStep mh_lengthscale_step(double prev, const Vector& z, const Matrix& inputs,
                                    const ConditioningPlan& plan, const KernelConfig& cfg,
                                    std::shared_ptr<const SparseU> cached, const MhSpec& spec,
                                    Rng& rng);

/// Burn-in nugget: Gamma(1, 10 t) prior, same ratio proposal.
struct NuggetSpec {
  double initial = 0.01;
  double ratio = 2.0 / 3.0;
  double lower = 1e-10;
  double upper = 10.0;

  double log_prior(double nugget, int iteration) const;
};

struct NuggetStep {
  double nugget = 0.0;
  bool accepted = false;
  std::shared_ptr<const SparseU> factor;
  double log_lik = 0.0;
};

NuggetStep mh_nugget_step(double prev, const Vector& z, const Matrix& inputs,
                          const ConditioningPlan& plan, const KernelConfig& cfg,
                          std::shared_ptr<const SparseU> cached, int iteration,
                          const NuggetSpec& spec, Rng& rng);

}  // namespace vgpc
