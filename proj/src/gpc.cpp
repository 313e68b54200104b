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

#include "vgpc/gpc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

namespace vgpc {
namespace {

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

}  // namespace

PredictMode parse_predict_mode(std::string_view name) {
  if (name == "pointwise") return PredictMode::Pointwise;
  if (name == "joint") return PredictMode::Joint;
  throw InvalidArgument("unknown prediction mode '" + std::string(name) + "'");
}

void GpcFitConfig::validate() const {
  if (conditioning_size < 1) throw InvalidArgument("conditioning size m must be >= 1");
  if (thin < 1) throw InvalidArgument("thin must be >= 1");
  if (burn_in < 0 || burn_in >= total_iters)
    throw InvalidArgument("burn_in must be in [0, total_iters)");
  if (!(epsilon > 0)) throw InvalidArgument("epsilon must be positive");
  if (fixed_lengthscale && !(*fixed_lengthscale > 0))
    throw InvalidArgument("fixed lengthscale must be positive");
  if (fixed_scale && !(*fixed_scale > 0)) throw InvalidArgument("fixed scale must be positive");
  lengthscale_prior.validate();
  if (!fixed_lengthscale &&
      (initial_lengthscale < lengthscale_prior.lower || initial_lengthscale > lengthscale_prior.upper))
    throw InvalidArgument("initial lengthscale outside prior bounds");
}

double ChainDiagnostics::lengthscale_acceptance() const {
  return lengthscale_proposals ? double(lengthscale_accepts) / lengthscale_proposals : 0.0;
}
double ChainDiagnostics::nugget_acceptance() const {
  return nugget_proposals ? double(nugget_accepts) / nugget_proposals : 0.0;
}
double ChainDiagnostics::mean_ess_iterations() const {
  return ess_steps ? double(ess_inner_total) / double(ess_steps) : 0.0;
}

void ProbabilityAccumulator::add(double p) {
  ++count_;
  const double delta = p - mean_;
  mean_ += delta / count_;
  m2_ += delta * (p - mean_);
  bern_ += p * (1.0 - p);
}

PredictionSummary summarize_probabilities(const Matrix& probabilities) {
  const Eigen::Index nt = probabilities.cols();
  PredictionSummary s;
  s.mean.resize(nt);
  s.variance.resize(nt);
  s.model_variance.resize(nt);
  s.bernoulli_variance.resize(nt);
  s.labels.resize(nt);
  for (Eigen::Index j = 0; j < nt; ++j) {
    ProbabilityAccumulator acc;
    for (Eigen::Index t = 0; t < probabilities.rows(); ++t) acc.add(probabilities(t, j));
    s.mean(j) = acc.mean();
    s.model_variance(j) = acc.model_variance();
    s.bernoulli_variance(j) = acc.bernoulli_variance();
    s.variance(j) = s.model_variance(j) + s.bernoulli_variance(j);
    s.labels[j] = s.mean(j) >= 0.5 ? 1 : 0;
  }
  return s;
}

double bernoulli_log_lik(const Labels& y, const Vector& z) {
  if (static_cast<Eigen::Index>(y.size()) != z.size())
    throw InvalidArgument("bernoulli_log_lik: label and latent lengths differ");
  double ll = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i)
    ll -= y[i] ? softplus(-z(i)) : softplus(z(i));
  return ll;
}

void check_training_data(const Matrix& x, const Labels& y) {
  if (x.rows() != static_cast<Eigen::Index>(y.size()))
    throw InvalidArgument("inputs have " + std::to_string(x.rows()) + " rows but " +
                          std::to_string(y.size()) + " labels");
  if (x.rows() < 2) throw DataError("need at least two training points");
  if (!x.allFinite()) throw DataError("training inputs contain non-finite values");
  bool has0 = false, has1 = false;
  for (int v : y) {
    if (v != 0 && v != 1) throw DataError("labels must be 0 or 1");
    (v ? has1 : has0) = true;
  }
  if (!has0 || !has1)
    throw DataError(std::string("insulation is undefined: every label is ") + (has1 ? "1" : "0") +
                    "; supply training data containing both classes");
}

std::vector<int> insulation(const Matrix& x, const Labels& y) {
  check_training_data(x, y);
  const Eigen::Index n = x.rows();
  std::vector<int> omega(n, 0);
  Vector d2(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double nearest_opposite = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) {
      d2(j) = squared_distance(x, i, x, j);
      if (y[j] != y[i]) nearest_opposite = std::min(nearest_opposite, d2(j));
    }
    int count = 0;
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i && d2(j) < nearest_opposite) ++count;
    omega[i] = count;
  }
  return omega;
}

double tau2_from_omega_max(int omega_max, double epsilon) {
  if (omega_max < 1)
    throw DataError("no insulated training point (omega_max = 0); tau^2 cannot be anchored");
  if (!(epsilon > 0)) throw InvalidArgument("epsilon must be positive");
  // logit(w / (w + eps)) = log(w / eps)
  const double z = std::log(static_cast<double>(omega_max) / epsilon);
  return 0.25 * z * z;
}

double choose_tau2(const Matrix& x, const Labels& y, double epsilon) {
  const auto omega = insulation(x, y);
  return tau2_from_omega_max(*std::max_element(omega.begin(), omega.end()), epsilon);
}

PosteriorChain fit(const Matrix& x, const Labels& y, const GpcFitConfig& cfg) {
  cfg.validate();
  check_training_data(x, y);
  const int n = static_cast<int>(x.rows());

  PosteriorChain chain;
  chain.config = cfg;
  chain.family = cfg.family;
  {
    const auto omega = insulation(x, y);
    chain.diagnostics.omega_max = *std::max_element(omega.begin(), omega.end());
  }
  chain.scale = cfg.fixed_scale ? *cfg.fixed_scale
                                : tau2_from_omega_max(chain.diagnostics.omega_max, cfg.epsilon);
  chain.conditioning_size = cfg.saturate ? n - 1 : std::min(cfg.conditioning_size, n - 1);
  chain.plan_seed = derive_seed(cfg.seed, 1);
  const ConditioningPlan plan = build_plan(x, chain.conditioning_size, chain.plan_seed);

  Rng rng(derive_seed(cfg.seed, 0));
  const bool sample_lengthscale = !cfg.fixed_lengthscale.has_value();
  KernelConfig kcfg;
  kcfg.family = cfg.family;
  kcfg.scale = chain.scale;
  kcfg.lengthscale = cfg.fixed_lengthscale.value_or(cfg.initial_lengthscale);
  kcfg.nugget = (cfg.burn_in_nugget && cfg.burn_in > 0) ? cfg.nugget.initial : 0.0;

  const double two_tau = 2.0 * std::sqrt(chain.scale);
  Vector z(n);
  for (int i = 0; i < n; ++i) z(i) = y[i] ? two_tau : -two_tau;

  const int retained = cfg.retained();
  chain.z_samples.resize(retained, n);
  chain.lengthscale_samples.resize(retained);
  int stored = 0;
  ChainDiagnostics& diag = chain.diagnostics;

  auto with_context = [](int t, const NumericalError& e) {
    return NumericalError("iteration " + std::to_string(t) + ": " + e.what(), e.index());
  };

  std::shared_ptr<const SparseU> factor;
  try {
    factor = std::make_shared<const SparseU>(build_U(x, plan, kcfg));
  } catch (const NumericalError& e) {
    throw with_context(1, e);
  }
  const auto store = [&](int t) {
    if (t > cfg.burn_in && (t - cfg.burn_in) % cfg.thin == 0 && stored < retained) {
      chain.z_samples.row(stored) = z.transpose();
      chain.lengthscale_samples(stored) = kcfg.lengthscale;
      ++stored;
    }
  };
  store(1);

  double z_log_lik = bernoulli_log_lik(y, z);
  for (int t = 2; t <= cfg.total_iters; ++t) {
    try {
      if (t > cfg.burn_in && kcfg.nugget != 0.0) {
        kcfg.nugget = 0.0;
        factor = std::make_shared<const SparseU>(build_U(x, plan, kcfg));
      }
      if (sample_lengthscale) {
        LengthscaleStep step = mh_lengthscale_step(kcfg.lengthscale, z, x, plan, kcfg, factor,
                                                   cfg.lengthscale_prior, rng);
        ++diag.lengthscale_proposals;
        if (step.accepted) ++diag.lengthscale_accepts;
        kcfg.lengthscale = step.lengthscale;
        factor = std::move(step.factor);
      }
      if (kcfg.nugget > 0.0) {
        NuggetStep step = mh_nugget_step(kcfg.nugget, z, x, plan, kcfg, factor, t, cfg.nugget, rng);
        ++diag.nugget_proposals;
        if (step.accepted) ++diag.nugget_accepts;
        kcfg.nugget = step.nugget;
        factor = std::move(step.factor);
      }
      const SparseU& u = *factor;
      EssResult ess = ess_step(
          z, [&u](Rng& r) { return sample_mvn(u, r); },
          [&y](const Vector& v) { return bernoulli_log_lik(y, v); }, rng, z_log_lik);
      z = std::move(ess.state);
      z_log_lik = ess.log_lik;
      ++diag.ess_steps;
      diag.ess_inner_total += ess.inner_iterations;
      diag.ess_inner_max = std::max(diag.ess_inner_max, ess.inner_iterations);
    } catch (const NumericalError& e) {
      throw with_context(t, e);
    }
    store(t);
  }
  return chain;
}

namespace {

KernelConfig sample_kernel(const PosteriorChain& chain, int t) {
  KernelConfig k;
  k.family = chain.family;
  k.scale = chain.scale;
  k.lengthscale = chain.lengthscale_samples(t);
  k.nugget = 0.0;
  return k;
}

}  // namespace

PredictionSummary predict(const PosteriorChain& chain, const Matrix& x, const Matrix& xstar,
                          PredictMode mode, std::uint64_t seed) {
  if (x.rows() != chain.n())
    throw InvalidArgument("chain was fit on " + std::to_string(chain.n()) +
                          " training rows, got " + std::to_string(x.rows()));
  if (xstar.cols() != x.cols())
    throw InvalidArgument("test inputs have " + std::to_string(xstar.cols()) +
                          " columns, training inputs have " + std::to_string(x.cols()));
  const int nt = static_cast<int>(xstar.rows());
  const int T = chain.retained();
  Matrix probs(T, nt);

  // A saturated chain predicts from every training point (and, jointly,
  // every earlier test point) so it stays exact.
  const bool saturated = chain.config.saturate;
  if (mode == PredictMode::Pointwise && saturated) {
    // Dense kriging: one factorization per sample serves every test point.
    std::vector<Rng> rngs;
    rngs.reserve(nt);
    for (int j = 0; j < nt; ++j) rngs.emplace_back(derive_seed(seed, static_cast<std::uint64_t>(j)));
    std::vector<std::normal_distribution<double>> normals(nt);
    Matrix weights;
    Vector variance;
    double last_theta = -1.0;
    for (int t = 0; t < T; ++t) {
      const KernelConfig k = sample_kernel(chain, t);
      if (k.lengthscale != last_theta) {
        Matrix kxx = cov_matrix(x, k);
        kxx.diagonal().array() += kJitter;
        Eigen::LLT<Matrix> llt(kxx);
        if (llt.info() != Eigen::Success)
          throw NumericalError("training covariance is not positive definite");
        const Matrix kxs = cov_matrix(x, xstar, k);
        weights = llt.solve(kxs);
        variance = (Vector::Constant(nt, k.scale + kJitter).array() -
                    (kxs.array() * weights.array()).colwise().sum().transpose())
                       .max(0.0);
        last_theta = k.lengthscale;
      }
      const Vector mu = weights.transpose() * chain.z_samples.row(t).transpose();
      for (int j = 0; j < nt; ++j)
        probs(t, j) = sigmoid(mu(j) + std::sqrt(variance(j)) * normals[j](rngs[j]));
    }
  } else if (mode == PredictMode::Pointwise) {
    const int m = std::max(chain.conditioning_size, 1);
    ExceptionCollector errors;
#pragma omp parallel for schedule(dynamic, 16)
    for (int j = 0; j < nt; ++j) errors.run([&, j] {
      const Eigen::RowVectorXd target = xstar.row(j);
      const std::vector<int> nb = nearest_rows(x, target, m);
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(j)));
      std::normal_distribution<double> normal;
      Vector zc(static_cast<Eigen::Index>(nb.size()));
      ConditionalWeights cw;
      double last_theta = -1.0;
      for (int t = 0; t < T; ++t) {
        const KernelConfig k = sample_kernel(chain, t);
        if (k.lengthscale != last_theta) {
          cw = conditional_weights(x, nb, target, k);
          last_theta = k.lengthscale;
        }
        for (std::size_t a = 0; a < nb.size(); ++a) zc(a) = chain.z_samples(t, nb[a]);
        const double mu = nb.empty() ? 0.0 : cw.weights.dot(zc);
        const double zstar = mu + std::sqrt(std::max(cw.variance, 0.0)) * normal(rng);
        probs(t, j) = sigmoid(zstar);
      }
    });
    errors.rethrow();
  } else {
    const int m = saturated ? chain.n() + nt - 1 : chain.conditioning_size;
    const ConditioningPlan plan = build_stacked_plan(x, xstar, m, chain.plan_seed);
    Matrix stacked(x.rows() + nt, x.cols());
    stacked << x, xstar;
    ExceptionCollector errors;
#pragma omp parallel for schedule(dynamic, 1)
    for (int t = 0; t < T; ++t) errors.run([&, t] {
      const StackedU su =
          build_stacked_U(stacked, plan, static_cast<int>(x.rows()), sample_kernel(chain, t));
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
      const Vector zstar = joint_predictive_draw(su, chain.z_samples.row(t).transpose(), rng);
      for (int j = 0; j < nt; ++j) probs(t, j) = sigmoid(zstar(j));
    });
    errors.rethrow();
  }
  return summarize_probabilities(probs);
}

}  // namespace vgpc
