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
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vgpc/dgpc.hpp"
#include "vgpc/gpc.hpp"

namespace vgpc {

/// Deterministic binary labeler on the unit cube.
struct TestProblem {
  std::string name;
  int dim = 0;
  std::function<int(const Eigen::RowVectorXd&)> labeler;

  int label(const Eigen::RowVectorXd& x) const { return labeler(x); }
};

/// Known problems: tophat (1d), sine (1d), box (2d), schaffer (2d), g (any
/// d, default 6). `dim` is only consulted for g.
TestProblem make_problem(std::string_view name, int dim = 0);
std::vector<std::string> problem_names();

Labels label_all(const TestProblem& problem, const Matrix& x);

/// Schaffer no. 4 on [-2, 2]^2 and its analytic x1-partial.
double schaffer4(double x1, double x2);
double schaffer4_dx1(double x1, double x2);

/// prod_j (|4 x_j - 2| + a_j) / (1 + a_j), a_j = (j - 2) / 2 for 1-based j.
double g_function(const Eigen::RowVectorXd& x);

/// Latin hypercube: one point per 1/n stratum in every column, uniform
/// jitter inside each stratum, independent column permutations.
Matrix lhs_design(int n, int d, std::uint64_t seed);

inline constexpr double kProbabilityClamp = 1e-12;

struct MetricReport {
  double cr = 0.0;  // correct classification rate
  double ls = 0.0;  // mean log predictive likelihood, higher is better
};

/// Probabilities are clamped to [1e-12, 1 - 1e-12]; labels use p >= 0.5.
MetricReport metrics(const Labels& y_true, const Vector& p_hat);

enum class Method { GpcVecchia, GpcFull, DgpcVecchia };
Method parse_method(std::string_view name);
std::string_view to_string(Method method);

struct ExperimentConfig {
  std::string problem = "box";
  int dim = 0;
  std::vector<Method> methods{Method::GpcVecchia};
  std::vector<int> n_grid{200};
  int n_test = 1000;
  int repetitions = 10;
  std::uint64_t seed = 0;
  GpcFitConfig fit;
  PredictMode mode = PredictMode::Pointwise;
  /// Dense comparator guard.
  int dense_limit = 2000;
};

struct RunRecord {
  std::string problem;
  std::string method;
  int n = 0;
  int repetition = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double cr = 0.0;
  double ls = 0.0;
  double seconds = 0.0;
};

/// Runs every (repetition, n, method) cell. Each repetition owns an RNG
/// stream derived from the master seed; method failures are recorded, not
/// thrown.
std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg);

/// Long-format CSV: problem,method,n,rep,seed,status,CR,LS,seconds. The
/// seconds column is NA unless `with_timing`.
std::string records_to_csv(const std::vector<RunRecord>& records, bool with_timing);

/// Median and quartiles of CR and LS per (problem, method, n, metric).
nlohmann::json summarize_records(const std::vector<RunRecord>& records);

/// Type-7 sample quantile.
double quantile(std::vector<double> values, double q);

}  // namespace vgpc
