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
#include <optional>
#include <string_view>
#include <vector>

#include "vgpc/common.hpp"
#include "vgpc/kernel.hpp"
#include "vgpc/samplers.hpp"
#include "vgpc/vecchia.hpp"

namespace vgpc {

using Labels = std::vector<int>;

enum class PredictMode { Pointwise, Joint };
PredictMode parse_predict_mode(std::string_view name);

struct GpcFitConfig {
  int conditioning_size = 25;
  int total_iters = 10000;
  int burn_in = 1000;
  int thin = 10;
  double epsilon = 1e-3;
  KernelFamily family = KernelFamily::Matern52;
  std::uint64_t seed = 0;

  double initial_lengthscale = 0.1;
  /// When set, the lengthscale is held fixed and never sampled.
  std::optional<double> fixed_lengthscale;
  /// When set, replaces the insulation-based choice of tau^2.
  std::optional<double> fixed_scale;
  /// Sample a nugget during burn-in; pinned to zero afterwards.
  bool burn_in_nugget = true;
  /// Condition every point on all earlier points (m = n - 1).
  bool saturate = false;

  MhSpec lengthscale_prior;
  NuggetSpec nugget;

  void validate() const;
  /// Retained sample count (total_iters - burn_in) / thin.
  int retained() const { return (total_iters - burn_in) / thin; }
};

struct ChainDiagnostics {
  int lengthscale_proposals = 0;
  int lengthscale_accepts = 0;
  int nugget_proposals = 0;
  int nugget_accepts = 0;
  long ess_steps = 0;
  long ess_inner_total = 0;
  int ess_inner_max = 0;
  int omega_max = 0;

  double lengthscale_acceptance() const;
  double nugget_acceptance() const;
  double mean_ess_iterations() const;
};

struct PosteriorChain {
  Matrix z_samples;            // T x n, rows are retained samples
  Vector lengthscale_samples;  // T
  double scale = 1.0;          // fixed tau^2
  KernelFamily family = KernelFamily::Matern52;
  int conditioning_size = 0;   // effective m of the plan
  std::uint64_t plan_seed = 0;
  GpcFitConfig config;
  ChainDiagnostics diagnostics;

  int retained() const { return static_cast<int>(z_samples.rows()); }
  int n() const { return static_cast<int>(z_samples.cols()); }
};

/// Posterior predictive summary of p_y at test inputs. variance is the sum
/// of the two non-negative terms: spread of sigma(z) across samples and the
/// mean Bernoulli variance sigma(z)(1 - sigma(z)).
struct PredictionSummary {
  Vector mean;
  Vector variance;
  Vector model_variance;
  Vector bernoulli_variance;
  Labels labels;  // 1 iff mean >= 0.5
};

/// Summarises a T x n' matrix of sigma(z) samples.
PredictionSummary summarize_probabilities(const Matrix& probabilities);

/// Streaming form of summarize_probabilities for one test point.
class ProbabilityAccumulator {
 public:
  void add(double p);
  int count() const { return count_; }
  double mean() const { return mean_; }
  double model_variance() const { return count_ > 1 ? m2_ / (count_ - 1) : 0.0; }
  double bernoulli_variance() const { return count_ > 0 ? bern_ / count_ : 0.0; }

 private:
  int count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
  double bern_ = 0.0;
};

/// sum_i y_i log sigma(z_i) + (1 - y_i) log(1 - sigma(z_i)), stable in z.
double bernoulli_log_lik(const Labels& y, const Vector& z);

/// omega_i: number of other points strictly nearer to x_i than its nearest
/// opposite-label point. Throws DataError if only one class is present.
std::vector<int> insulation(const Matrix& x, const Labels& y);

/// tau^2 from the most insulated point: p = w/(w + eps), z = logit(p),
/// tau^2 = (z / 2)^2.
double tau2_from_omega_max(int omega_max, double epsilon);
double choose_tau2(const Matrix& x, const Labels& y, double epsilon);

/// Validates X/Y shapes, binary labels and both classes present.
void check_training_data(const Matrix& x, const Labels& y);

/// Metropolis-within-Gibbs: MH on the lengthscale via the Vecchia MVN
/// likelihood of Z, then ESS on Z with the Bernoulli likelihood.
PosteriorChain fit(const Matrix& x, const Labels& y, const GpcFitConfig& cfg);

/// Draws z* per retained sample (pointwise: nearest-m univariate kriging,
/// joint: stacked Vecchia factor) and summarises sigma(z*).
PredictionSummary predict(const PosteriorChain& chain, const Matrix& x, const Matrix& xstar,
                          PredictMode mode = PredictMode::Pointwise, std::uint64_t seed = 0);

}  // namespace vgpc
