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

#include "vgpc/dgpc.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

namespace vgpc {

void DgpcFitConfig::validate() const {
  outer.validate();
  warp_prior.validate();
  if (initial_warp_lengthscale < warp_prior.lower || initial_warp_lengthscale > warp_prior.upper)
    throw InvalidArgument("initial warp lengthscale outside prior bounds");
}

double DgpcDiagnostics::warp_lengthscale_acceptance() const {
  return warp_lengthscale_proposals
             ? double(warp_lengthscale_accepts) / warp_lengthscale_proposals
             : 0.0;
}

double DgpcDiagnostics::mean_warp_ess_iterations() const {
  return warp_ess_steps ? double(warp_ess_inner_total) / double(warp_ess_steps) : 0.0;
}

namespace {

KernelConfig warp_kernel(KernelFamily family, double lengthscale) {
  KernelConfig k;
  k.family = family;
  k.scale = 1.0;
  k.nugget = 0.0;
  k.lengthscale = lengthscale;
  return k;
}

NumericalError with_context(int t, const std::string& layer, const NumericalError& e) {
  return NumericalError("iteration " + std::to_string(t) + ", " + layer + ": " + e.what(),
                        e.index());
}

}  // namespace

DgpcChain fit_deep(const Matrix& x, const Labels& y, const DgpcFitConfig& cfg) {
  cfg.validate();
  check_training_data(x, y);
  const GpcFitConfig& oc = cfg.outer;
  const int n = static_cast<int>(x.rows());
  const int d = static_cast<int>(x.cols());

  DgpcChain chain;
  chain.config = cfg;
  chain.family = oc.family;
  {
    const auto omega = insulation(x, y);
    chain.diagnostics.outer.omega_max = *std::max_element(omega.begin(), omega.end());
  }
  chain.scale = oc.fixed_scale ? *oc.fixed_scale
                               : tau2_from_omega_max(chain.diagnostics.outer.omega_max, oc.epsilon);
  chain.conditioning_size = oc.saturate ? n - 1 : std::min(oc.conditioning_size, n - 1);
  const int m = chain.conditioning_size;

  // Stream ids mirror gpc::fit so a pinned warp reproduces the shallow chain.
  chain.outer_plan_seed = derive_seed(oc.seed, 1);
  const ConditioningPlan outer_plan = build_plan(x, m, chain.outer_plan_seed);
  std::vector<ConditioningPlan> warp_plans;
  for (int j = 0; j < d; ++j) {
    chain.warp_plan_seeds.push_back(derive_seed(oc.seed, 2 + static_cast<std::uint64_t>(j)));
    warp_plans.push_back(build_plan(x, m, chain.warp_plan_seeds.back()));
  }

  Rng rng(derive_seed(oc.seed, 0));
  KernelConfig zcfg;
  zcfg.family = oc.family;
  zcfg.scale = chain.scale;
  zcfg.lengthscale = oc.fixed_lengthscale.value_or(oc.initial_lengthscale);
  zcfg.nugget = (oc.burn_in_nugget && oc.burn_in > 0) ? oc.nugget.initial : 0.0;

  Matrix w = x;
  std::vector<double> theta_w(d, cfg.initial_warp_lengthscale);
  std::vector<std::shared_ptr<const SparseU>> warp_factors(d);
  if (cfg.sample_warp)
    for (int j = 0; j < d; ++j)
      warp_factors[j] = std::make_shared<const SparseU>(
          build_U(x, warp_plans[j], warp_kernel(oc.family, theta_w[j])));

  const double two_tau = 2.0 * std::sqrt(chain.scale);
  Vector z(n);
  for (int i = 0; i < n; ++i) z(i) = y[i] ? two_tau : -two_tau;

  const int retained = oc.retained();
  chain.z_samples.resize(retained, n);
  chain.w_samples.reserve(retained);
  chain.theta_z.resize(retained);
  chain.theta_w.resize(retained, d);
  int stored = 0;
  const auto store = [&](int t) {
    if (t > oc.burn_in && (t - oc.burn_in) % oc.thin == 0 && stored < retained) {
      chain.z_samples.row(stored) = z.transpose();
      chain.w_samples.push_back(w);
      chain.theta_z(stored) = zcfg.lengthscale;
      for (int j = 0; j < d; ++j) chain.theta_w(stored, j) = theta_w[j];
      ++stored;
    }
  };

  std::shared_ptr<const SparseU> zfactor;
  try {
    zfactor = std::make_shared<const SparseU>(build_U(w, outer_plan, zcfg));
  } catch (const NumericalError& e) {
    throw with_context(1, "outer layer", e);
  }
  store(1);

  DgpcDiagnostics& diag = chain.diagnostics;
  double z_log_lik = bernoulli_log_lik(y, z);
  for (int t = 2; t <= oc.total_iters; ++t) {
    if (t > oc.burn_in && zcfg.nugget != 0.0) {
      zcfg.nugget = 0.0;
      try {
        zfactor = std::make_shared<const SparseU>(build_U(w, outer_plan, zcfg));
      } catch (const NumericalError& e) {
        throw with_context(t, "outer layer", e);
      }
    }
    if (cfg.sample_warp) {
      for (int j = 0; j < d; ++j) {
        const std::string layer = "warp coordinate " + std::to_string(j + 1);
        try {
          const Vector wj = w.col(j);
          LengthscaleStep ls = mh_lengthscale_step(theta_w[j], wj, x, warp_plans[j],
                                                   warp_kernel(oc.family, theta_w[j]),
                                                   warp_factors[j], cfg.warp_prior, rng);
          ++diag.warp_lengthscale_proposals;
          if (ls.accepted) ++diag.warp_lengthscale_accepts;
          theta_w[j] = ls.lengthscale;
          warp_factors[j] = std::move(ls.factor);

          const SparseU& uw = *warp_factors[j];
          std::shared_ptr<const SparseU> last_built;
          Matrix candidate_w = w;
          auto outer_log_lik = [&](const Vector& col) {
            candidate_w.col(j) = col;
            last_built = std::make_shared<const SparseU>(build_U(candidate_w, outer_plan, zcfg));
            return log_likelihood_mvn(z, *last_built);
          };
          EssResult ess =
              ess_step(wj, [&uw](Rng& r) { return sample_mvn(uw, r); }, outer_log_lik, rng,
                       log_likelihood_mvn(z, *zfactor));
          w.col(j) = ess.state;
          zfactor = std::move(last_built);
          ++diag.warp_ess_steps;
          diag.warp_ess_inner_total += ess.inner_iterations;
        } catch (const NumericalError& e) {
          throw with_context(t, layer, e);
        }
      }
    }
    try {
      if (!oc.fixed_lengthscale) {
        LengthscaleStep ls = mh_lengthscale_step(zcfg.lengthscale, z, w, outer_plan, zcfg, zfactor,
                                                 oc.lengthscale_prior, rng);
        ++diag.outer.lengthscale_proposals;
        if (ls.accepted) ++diag.outer.lengthscale_accepts;
        zcfg.lengthscale = ls.lengthscale;
        zfactor = std::move(ls.factor);
      }
      if (zcfg.nugget > 0.0) {
        NuggetStep ns = mh_nugget_step(zcfg.nugget, z, w, outer_plan, zcfg, zfactor, t, oc.nugget, rng);
        ++diag.outer.nugget_proposals;
        if (ns.accepted) ++diag.outer.nugget_accepts;
        zcfg.nugget = ns.nugget;
        zfactor = std::move(ns.factor);
      }
      const SparseU& uz = *zfactor;
      EssResult ess = ess_step(
          z, [&uz](Rng& r) { return sample_mvn(uz, r); },
          [&y](const Vector& v) { return bernoulli_log_lik(y, v); }, rng, z_log_lik);
      z = std::move(ess.state);
      z_log_lik = ess.log_lik;
      ++diag.outer.ess_steps;
      diag.outer.ess_inner_total += ess.inner_iterations;
      diag.outer.ess_inner_max = std::max(diag.outer.ess_inner_max, ess.inner_iterations);
    } catch (const NumericalError& e) {
      throw with_context(t, "outer layer", e);
    }
    store(t);
  }
  return chain;
}

namespace {

KernelConfig outer_kernel(const DgpcChain& chain, int t) {
  KernelConfig k;
  k.family = chain.family;
  k.scale = chain.scale;
  k.lengthscale = chain.theta_z(t);
  k.nugget = 0.0;
  return k;
}

}  // namespace

PredictionSummary predict_deep(const DgpcChain& chain, const Matrix& x, const Matrix& xstar,
                               PredictMode mode, std::uint64_t seed, bool draw_warp) {
  if (x.rows() != chain.n() || x.cols() != chain.dim())
    throw InvalidArgument("deep chain was fit on " + std::to_string(chain.n()) + " x " +
                          std::to_string(chain.dim()) + " inputs, got " +
                          std::to_string(x.rows()) + " x " + std::to_string(x.cols()));
  if (xstar.cols() != x.cols())
    throw InvalidArgument("test inputs have " + std::to_string(xstar.cols()) +
                          " columns, training inputs have " + std::to_string(x.cols()));
  const int nt = static_cast<int>(xstar.rows());
  const int d = chain.dim();
  const int T = chain.retained();
  Matrix probs(T, nt);

  const bool saturated = chain.config.outer.saturate;
  if (mode == PredictMode::Pointwise) {
    const int m = saturated ? chain.n() : std::max(chain.conditioning_size, 1);
    ExceptionCollector errors;
#pragma omp parallel for schedule(dynamic, 16)
    for (int j = 0; j < nt; ++j) errors.run([&, j] {
      const Eigen::RowVectorXd target = xstar.row(j);
      const std::vector<int> nb = nearest_rows(x, target, m);
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(j)));
      std::normal_distribution<double> normal;
      Vector vals(static_cast<Eigen::Index>(nb.size()));
      Eigen::RowVectorXd wstar(d);
      std::vector<ConditionalWeights> warp_weights(d);
      std::vector<double> warp_theta(d, -1.0);
      for (int t = 0; t < T; ++t) {
        const Matrix& w = chain.w_samples[t];
        for (int c = 0; c < d; ++c) {
          if (chain.theta_w(t, c) != warp_theta[c]) {
            warp_weights[c] =
                conditional_weights(x, nb, target, warp_kernel(chain.family, chain.theta_w(t, c)));
            warp_theta[c] = chain.theta_w(t, c);
          }
          const ConditionalWeights& cw = warp_weights[c];
          for (std::size_t a = 0; a < nb.size(); ++a) vals(a) = w(nb[a], c);
          wstar(c) = cw.weights.dot(vals);
          if (draw_warp) wstar(c) += std::sqrt(std::max(cw.variance, 0.0)) * normal(rng);
        }
        const ConditionalWeights cz = conditional_weights(w, nb, wstar, outer_kernel(chain, t));
        for (std::size_t a = 0; a < nb.size(); ++a) vals(a) = chain.z_samples(t, nb[a]);
        const double zstar =
            cz.weights.dot(vals) + std::sqrt(std::max(cz.variance, 0.0)) * normal(rng);
        probs(t, j) = sigmoid(zstar);
      }
    });
    errors.rethrow();
  } else {
    const int n = static_cast<int>(x.rows());
    Matrix stacked_x(n + nt, d);
    stacked_x << x, xstar;
    const int m = saturated ? n + nt - 1 : chain.conditioning_size;
    const ConditioningPlan outer_plan = build_stacked_plan(x, xstar, m, chain.outer_plan_seed);
    std::vector<ConditioningPlan> warp_plans;
    for (int c = 0; c < d; ++c)
      warp_plans.push_back(build_stacked_plan(x, xstar, m, chain.warp_plan_seeds[c]));
    ExceptionCollector errors;
#pragma omp parallel for schedule(dynamic, 1)
    for (int t = 0; t < T; ++t) errors.run([&, t] {
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
      const Matrix& w = chain.w_samples[t];
      Matrix stacked_w(n + nt, d);
      stacked_w.topRows(n) = w;
      for (int c = 0; c < d; ++c) {
        const StackedU su = build_stacked_U(stacked_x, warp_plans[c], n,
                                            warp_kernel(chain.family, chain.theta_w(t, c)));
        stacked_w.bottomRows(nt).col(c) = draw_warp ? joint_predictive_draw(su, w.col(c), rng)
                                                    : joint_predictive_mean(su, w.col(c));
      }
      const StackedU sz = build_stacked_U(stacked_w, outer_plan, n, outer_kernel(chain, t));
      const Vector zstar = joint_predictive_draw(sz, chain.z_samples.row(t).transpose(), rng);
      for (int j = 0; j < nt; ++j) probs(t, j) = sigmoid(zstar(j));
    });
    errors.rethrow();
  }
  return summarize_probabilities(probs);
}

}  // namespace vgpc
