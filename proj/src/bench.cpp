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

#include "vgpc/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>
#include <tuple>

#include "vgpc/io.hpp"

namespace vgpc {

double schaffer4(double x1, double x2) {
  const double s = std::abs(x1 * x1 - x2 * x2);
  const double c = std::cos(std::sin(s));
  const double h = 1.0 + 0.001 * (x1 * x1 + x2 * x2);
  return 0.5 + (c * c - 0.5) / (h * h);
}

double schaffer4_dx1(double x1, double x2) {
  const double diff = x1 * x1 - x2 * x2;
  const double s = std::abs(diff);
  const double c = std::cos(std::sin(s));
  const double h = 1.0 + 0.001 * (x1 * x1 + x2 * x2);
  const double sign = diff > 0 ? 1.0 : (diff < 0 ? -1.0 : 0.0);
  // d/ds cos^2(sin s) = -sin(2 sin s) cos s
  const double dnum = -std::sin(2.0 * std::sin(s)) * std::cos(s) * sign * 2.0 * x1;
  const double dh = 0.002 * x1;
  return dnum / (h * h) - 2.0 * (c * c - 0.5) * dh / (h * h * h);
}

double g_function(const Eigen::RowVectorXd& x) {
  double prod = 1.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double a = (static_cast<double>(j + 1) - 2.0) / 2.0;
    prod *= (std::abs(4.0 * x(j) - 2.0) + a) / (1.0 + a);
  }
  return prod;
}

std::vector<std::string> problem_names() { return {"tophat", "sine", "box", "schaffer", "g"}; }

TestProblem make_problem(std::string_view name, int dim) {
  auto fixed = [&](int expected) {
    if (dim != 0 && dim != expected)
      throw InvalidArgument("problem '" + std::string(name) + "' is " + std::to_string(expected) +
                            "-dimensional");
    return expected;
  };
  if (name == "tophat")
    return {"tophat", fixed(1),
            [](const Eigen::RowVectorXd& x) { return x(0) >= 1.0 / 3.0 && x(0) <= 2.0 / 3.0; }};
  if (name == "sine")
    return {"sine", fixed(1), [](const Eigen::RowVectorXd& x) {
              return std::sin(4.0 * std::numbers::pi * x(0)) > 0.0 ? 1 : 0;
            }};
  if (name == "box")
    return {"box", fixed(2), [](const Eigen::RowVectorXd& x) {
              return x(0) >= 0.25 && x(0) <= 0.75 && x(1) >= 0.25 && x(1) <= 0.75 ? 1 : 0;
            }};
  if (name == "schaffer")
    return {"schaffer", fixed(2), [](const Eigen::RowVectorXd& x) {
              return schaffer4_dx1(4.0 * x(0) - 2.0, 4.0 * x(1) - 2.0) > 0.0 ? 1 : 0;
            }};
  if (name == "g" || name == "g6") {
    const int d = dim == 0 ? 6 : dim;
    if (name == "g6" && d != 6) throw InvalidArgument("problem 'g6' is 6-dimensional");
    if (d < 1) throw InvalidArgument("g function needs d >= 1");
    return {"g", d, [](const Eigen::RowVectorXd& x) { return g_function(x) > 1.0 ? 1 : 0; }};
  }
  throw InvalidArgument("unknown problem '" + std::string(name) + "'");
}

Labels label_all(const TestProblem& problem, const Matrix& x) {
  if (x.cols() != problem.dim)
    throw InvalidArgument("problem '" + problem.name + "' expects " +
                          std::to_string(problem.dim) + " columns");
  Labels y(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) y[i] = problem.label(x.row(i));
  return y;
}

Matrix lhs_design(int n, int d, std::uint64_t seed) {
  if (n < 1 || d < 1) throw InvalidArgument("lhs_design: n and d must be >= 1");
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Matrix x(n, d);
  std::vector<int> perm(n);
  for (int j = 0; j < d; ++j) {
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (int i = 0; i < n; ++i) x(i, j) = (perm[i] + unif(rng)) / n;
  }
  return x;
}

MetricReport metrics(const Labels& y_true, const Vector& p_hat) {
  if (static_cast<Eigen::Index>(y_true.size()) != p_hat.size())
    throw InvalidArgument("metrics: " + std::to_string(y_true.size()) + " labels vs " +
                          std::to_string(p_hat.size()) + " probabilities");
  if (y_true.empty()) throw InvalidArgument("metrics: empty input");
  MetricReport r;
  double correct = 0.0, ls = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const double p = std::clamp(p_hat(i), kProbabilityClamp, 1.0 - kProbabilityClamp);
    const int yhat = p_hat(i) >= 0.5 ? 1 : 0;
    if (yhat == y_true[i]) correct += 1.0;
    ls += y_true[i] ? std::log(p) : std::log1p(-p);
  }
  r.cr = correct / y_true.size();
  r.ls = ls / y_true.size();
  return r;
}

Method parse_method(std::string_view name) {
  if (name == "gpc" || name == "gpc-vecchia") return Method::GpcVecchia;
  if (name == "gpc-full" || name == "full") return Method::GpcFull;
  if (name == "dgpc" || name == "dgpc-vecchia") return Method::DgpcVecchia;
  throw InvalidArgument("unknown method '" + std::string(name) + "'");
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::GpcVecchia: return "gpc";
    case Method::GpcFull: return "gpc-full";
    case Method::DgpcVecchia: return "dgpc";
  }
  return "?";
}

std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg) {
  const TestProblem problem = make_problem(cfg.problem, cfg.dim);
  if (cfg.repetitions < 1) throw InvalidArgument("repetitions must be >= 1");
  if (cfg.n_test < 1) throw InvalidArgument("n_test must be >= 1");
  if (cfg.methods.empty() || cfg.n_grid.empty())
    throw InvalidArgument("need at least one method and one training size");
  cfg.fit.validate();

  struct Task {
    int rep;
    int n;
    Method method;
  };
  std::vector<Task> tasks;
  for (int r = 0; r < cfg.repetitions; ++r)
    for (int n : cfg.n_grid)
      for (Method m : cfg.methods) tasks.push_back({r, n, m});
  std::vector<RunRecord> records(tasks.size());

#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    const Task& task = tasks[k];
    RunRecord& rec = records[k];
    const std::uint64_t rep_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(task.rep));
    rec.problem = problem.name;
    rec.method = std::string(to_string(task.method));
    rec.n = task.n;
    rec.repetition = task.rep + 1;
    rec.seed = derive_seed(rep_seed, 2000 + static_cast<std::uint64_t>(task.n));
    const auto start = std::chrono::steady_clock::now();
    try {
      const Matrix xtest = lhs_design(cfg.n_test, problem.dim, derive_seed(rep_seed, 1));
      const Labels ytest = label_all(problem, xtest);
      const Matrix xtrain =
          lhs_design(task.n, problem.dim, derive_seed(rep_seed, 1000 + static_cast<std::uint64_t>(task.n)));
      const Labels ytrain = label_all(problem, xtrain);
      GpcFitConfig fc = cfg.fit;
      fc.seed = rec.seed;
      const std::uint64_t pred_seed = derive_seed(rec.seed, 7);
      PredictionSummary summary;
      if (task.method == Method::DgpcVecchia) {
        DgpcFitConfig dc;
        dc.outer = fc;
        const DgpcChain chain = fit_deep(xtrain, ytrain, dc);
        summary = predict_deep(chain, xtrain, xtest, cfg.mode, pred_seed);
      } else {
        if (task.method == Method::GpcFull) {
          if (task.n > cfg.dense_limit)
            throw InvalidArgument("dense comparator limited to n <= " +
                                  std::to_string(cfg.dense_limit));
          fc.saturate = true;
        }
        const PosteriorChain chain = fit(xtrain, ytrain, fc);
        summary = predict(chain, xtrain, xtest, cfg.mode, pred_seed);
      }
      const MetricReport mr = metrics(ytest, summary.mean);
      rec.cr = mr.cr;
      rec.ls = mr.ls;
      rec.ok = true;
    } catch (const std::exception& e) {
      rec.ok = false;
      rec.error = e.what();
    }
    rec.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  return records;
}

std::string records_to_csv(const std::vector<RunRecord>& records, bool with_timing) {
  std::ostringstream os;
  os << "problem,method,n,rep,seed,status,CR,LS,seconds\n";
  for (const RunRecord& r : records) {
    os << r.problem << ',' << r.method << ',' << r.n << ',' << r.repetition << ',' << r.seed << ','
       << (r.ok ? "ok" : "error") << ',';
    if (r.ok)
      os << format_double(r.cr) << ',' << format_double(r.ls);
    else
      os << "NA,NA";
    os << ',' << (with_timing ? format_double(r.seconds) : std::string("NA")) << '\n';
  }
  return os.str();
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) return std::nan("");
  std::sort(values.begin(), values.end());
  const double h = (values.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - lo) * (values[hi] - values[lo]);
}

nlohmann::json summarize_records(const std::vector<RunRecord>& records) {
  using Key = std::tuple<std::string, std::string, int>;
  std::map<Key, std::pair<std::vector<double>, std::vector<double>>> cells;
  std::map<Key, int> failures;
  std::vector<Key> key_order;
  for (const RunRecord& r : records) {
    const Key key{r.problem, r.method, r.n};
    if (!cells.count(key)) key_order.push_back(key);
    auto& cell = cells[key];
    if (r.ok) {
      cell.first.push_back(r.cr);
      cell.second.push_back(r.ls);
    } else {
      ++failures[key];
    }
  }
  nlohmann::json out;
  out["cells"] = nlohmann::json::array();
  for (const Key& key : key_order) {
    const auto& [cr, ls] = cells[key];
    for (const auto& [metric, values] :
         {std::pair<std::string, const std::vector<double>*>{"CR", &cr}, {"LS", &ls}}) {
      nlohmann::json cell;
      cell["problem"] = std::get<0>(key);
      cell["method"] = std::get<1>(key);
      cell["n"] = std::get<2>(key);
      cell["metric"] = metric;
      cell["count"] = values->size();
      cell["failures"] = failures[key];
      if (!values->empty()) {
        cell["median"] = quantile(*values, 0.5);
        cell["q1"] = quantile(*values, 0.25);
        cell["q3"] = quantile(*values, 0.75);
      } else {
        cell["median"] = nullptr;
        cell["q1"] = nullptr;
        cell["q3"] = nullptr;
      }
      out["cells"].push_back(cell);
    }
  }
  return out;
}

}  // namespace vgpc
