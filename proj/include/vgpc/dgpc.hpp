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
#include <vector>

#include "vgpc/gpc.hpp"

namespace vgpc {

/// Two-layer classifier: X -> W (one GP per input coordinate, unit scale)
/// -> Z (scale tau^2) -> Bernoulli(sigmoid(Z)).
struct DgpcFitConfig {
  GpcFitConfig outer;
  /// Prior/proposal for the warp lengthscales; defaults match the outer layer.
  MhSpec warp_prior;
  double initial_warp_lengthscale = 0.1;
  /// With false, W stays at X and only the outer layer is sampled.
  bool sample_warp = true;

  void validate() const;
};

struct DgpcDiagnostics {
  ChainDiagnostics outer;
  int warp_lengthscale_proposals = 0;
  int warp_lengthscale_accepts = 0;
  long warp_ess_steps = 0;
  long warp_ess_inner_total = 0;

  double warp_lengthscale_acceptance() const;
  double mean_warp_ess_iterations() const;
};

struct DgpcChain {
  Matrix z_samples;               // T x n
  std::vector<Matrix> w_samples;  // T entries of n x d
  Vector theta_z;                 // T
  Matrix theta_w;                 // T x d
  double scale = 1.0;
  KernelFamily family = KernelFamily::Matern52;
  int conditioning_size = 0;
  std::uint64_t outer_plan_seed = 0;
  std::vector<std::uint64_t> warp_plan_seeds;  // one per coordinate
  DgpcFitConfig config;
  DgpcDiagnostics diagnostics;

  int retained() const { return static_cast<int>(z_samples.rows()); }
  int n() const { return static_cast<int>(z_samples.cols()); }
  int dim() const { return static_cast<int>(theta_w.cols()); }
};

/// Gibbs sweep per iteration: for every coordinate j, MH on its warp
/// lengthscale and ESS on W_j (accepting on the outer-layer MVN likelihood
/// of Z); then MH on the outer lengthscale and ESS on Z. Conditioning sets
/// of every layer are chosen in X and stay fixed.
DgpcChain fit_deep(const Matrix& x, const Labels& y, const DgpcFitConfig& cfg);

/// Cascaded kriging: W* | X, W per coordinate, then Z* | W, Z at W*.
/// `draw_warp` replaces the W* predictive mean with a draw.
PredictionSummary predict_deep(const DgpcChain& chain, const Matrix& x, const Matrix& xstar,
                               PredictMode mode = PredictMode::Pointwise, std::uint64_t seed = 0,
                               bool draw_warp = false);

}  // namespace vgpc
