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

#include "vgpc/samplers.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace vgpc {

EssResult ess_step(const Vector& current, const PriorDraw& prior_draw,
                   const LogLikelihood& log_lik, Rng& rng, std::optional<double> current_log_lik,
                   std::vector<EssBracket>* trace) {
  const double two_pi = 2.0 * std::numbers::pi;
  const Vector proposal_dir = prior_draw(rng);
  if (proposal_dir.size() != current.size())
    throw InvalidArgument("ess_step: prior draw has the wrong length");
  const double base = current_log_lik ? *current_log_lik : log_lik(current);
  if (!std::isfinite(base)) throw InvalidArgument("ess_step: current log likelihood not finite");

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double threshold = base + std::log(unif(rng));
  double angle = two_pi * unif(rng);
  double lower = angle - two_pi;
  double upper = angle;

  for (int it = 1; it <= kEssMaxInnerIterations; ++it) {
    if (trace) trace->push_back({angle, lower, upper});
    Vector candidate = current * std::cos(angle) + proposal_dir * std::sin(angle);
    const double ll = log_lik(candidate);
    if (ll > threshold) return {std::move(candidate), it, ll};
    if (angle < 0)
      lower = angle;
    else
      upper = angle;
    angle = lower + (upper - lower) * unif(rng);
  }
  throw SamplerStuck("elliptical slice sampler exceeded " +
                     std::to_string(kEssMaxInnerIterations) + " inner iterations");
}

double gamma_log_density(double x, double shape, double rate) {
  if (!(x > 0)) return -std::numeric_limits<double>::infinity();
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

void MhSpec::validate() const {
  if (!(ratio > 0 && ratio < 1)) throw InvalidArgument("MH proposal ratio must lie in (0, 1)");
  if (!(lower > 0 && upper > lower)) throw InvalidArgument("MH bounds must be positive and ordered");
  if (!(shape > 0 && rate > 0)) throw InvalidArgument("MH Gamma prior needs positive parameters");
}

double MhSpec::log_prior(double value) const { return gamma_log_density(value, shape, rate); }

MhOutcome mh_ratio_step(double prev, double prev_log_lik,
                        const std::function<double(double)>& log_lik,
                        const std::function<double(double)>& log_prior, double ratio,
                        double lower, double upper, Rng& rng) {
  std::uniform_real_distribution<double> propose(ratio * prev, prev / ratio);
  const double proposed = propose(rng);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double log_u = std::log(unif(rng));
  if (proposed < lower || proposed > upper) return {prev, false, prev_log_lik};

  const double ll = log_lik(proposed);
  const double log_accept = ll + log_prior(proposed) - prev_log_lik - log_prior(prev) +
                            std::log(prev) - std::log(proposed);
  if (std::isfinite(ll) && log_u < log_accept) return {proposed, true, ll};
  return {prev, false, prev_log_lik};
}

LengthscaleStep mh_lengthscale_step(double prev, const Vector& z, const Matrix& inputs,
                                    const ConditioningPlan& plan, const KernelConfig& cfg,
                                    std::shared_ptr<const SparseU> cached, const MhSpec& spec,
                                    Rng& rng) {
  if (prev < spec.lower || prev > spec.upper)
    throw InvalidArgument("mh_lengthscale_step: current lengthscale outside bounds");
  if (!cached) {
    KernelConfig c = cfg;
    c.lengthscale = prev;
    cached = std::make_shared<const SparseU>(build_U(inputs, plan, c));
  }
  std::shared_ptr<const SparseU> built;
  auto log_lik = [&](double theta) {
    KernelConfig c = cfg;
    c.lengthscale = theta;
    built = std::make_shared<const SparseU>(build_U(inputs, plan, c));
    return log_likelihood_mvn(z, *built);
  };
  const double prev_ll = log_likelihood_mvn(z, *cached);
  const MhOutcome out =
      mh_ratio_step(prev, prev_ll, log_lik, [&](double v) { return spec.log_prior(v); },
                    spec.ratio, spec.lower, spec.upper, rng);
  if (out.accepted) return {out.value, true, std::move(built), out.log_lik};
  return {prev, false, std::move(cached), prev_ll};
}

double NuggetSpec::log_prior(double nugget, int iteration) const {
  return gamma_log_density(nugget, 1.0, 10.0 * iteration);
}

NuggetStep mh_nugget_step(double prev, const Vector& z, const Matrix& inputs,
                          const ConditioningPlan& plan, const KernelConfig& cfg,
                          std::shared_ptr<const SparseU> cached, int iteration,
                          const NuggetSpec& spec, Rng& rng) {
  if (iteration < 1) throw InvalidArgument("mh_nugget_step: iteration must be >= 1");
  if (!(prev > 0)) throw InvalidArgument("mh_nugget_step: nugget must be positive during burn-in");
  if (!cached) {
    KernelConfig c = cfg;
    c.nugget = prev;
    cached = std::make_shared<const SparseU>(build_U(inputs, plan, c));
  }
  std::shared_ptr<const SparseU> built;
  auto log_lik = [&](double g) {
    KernelConfig c = cfg;
    c.nugget = g;
    built = std::make_shared<const SparseU>(build_U(inputs, plan, c));
    return log_likelihood_mvn(z, *built);
  };
  const double prev_ll = log_likelihood_mvn(z, *cached);
  const MhOutcome out = mh_ratio_step(
      prev, prev_ll, log_lik, [&](double g) { return spec.log_prior(g, iteration); }, spec.ratio,
      spec.lower, spec.upper, rng);
  if (out.accepted) return {out.value, true, std::move(built), out.log_lik};
  return {prev, false, std::move(cached), prev_ll};
}

}  // namespace vgpc
