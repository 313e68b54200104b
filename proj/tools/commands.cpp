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

#include "commands.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "vgpc/bench.hpp"
#include "vgpc/dgpc.hpp"
#include "vgpc/gpc.hpp"
#include "vgpc/io.hpp"

namespace vgpc::cli {

namespace {

using Clock = std::chrono::steady_clock;
using nlohmann::json;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void set_threads(int threads) {
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#else
  (void)threads;
#endif
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

struct FitOptions {
  std::string train;
  std::string method = "gpc";
  std::string chain_out;
  std::string manifest;
  std::string kernel = "matern52";
  std::uint64_t seed = 0;
  int m = 25;
  int iters = 10000;
  int burn_in = 1000;
  int thin = 10;
  double epsilon = 1e-3;
  std::optional<double> lengthscale;
  std::optional<double> scale;
  bool no_nugget = false;
  bool dense = false;
  bool record_timing = false;
  int threads = 0;
};

GpcFitConfig make_fit_config(const FitOptions& o) {
  GpcFitConfig c;
  c.conditioning_size = o.m;
  c.total_iters = o.iters;
  c.burn_in = o.burn_in;
  c.thin = o.thin;
  c.epsilon = o.epsilon;
  c.family = parse_kernel_family(o.kernel);
  c.seed = o.seed;
  c.fixed_lengthscale = o.lengthscale;
  c.fixed_scale = o.scale;
  c.burn_in_nugget = !o.no_nugget;
  c.saturate = o.dense;
  return c;
}

json chain_manifest(const ChainDiagnostics& d) {
  json j;
  j["omega_max"] = d.omega_max;
  j["lengthscale_proposals"] = d.lengthscale_proposals;
  j["lengthscale_acceptance"] = d.lengthscale_acceptance();
  j["nugget_proposals"] = d.nugget_proposals;
  j["nugget_acceptance"] = d.nugget_acceptance();
  j["ess_steps"] = d.ess_steps;
  j["mean_ess_iterations"] = d.mean_ess_iterations();
  j["max_ess_iterations"] = d.ess_inner_max;
  return j;
}

void cmd_fit(const FitOptions& o) {
  set_threads(o.threads);
  const Dataset data = read_dataset_file(o.train);
  if (!data.y) throw DataError(o.train + ": training data needs a y column", 1);
  const GpcFitConfig cfg = make_fit_config(o);

  json manifest;
  manifest["method"] = o.method;
  manifest["train"] = o.train;
  manifest["n"] = data.n();
  manifest["d"] = data.dim();
  manifest["seed"] = o.seed;
  manifest["kernel"] = std::string(to_string(cfg.family));
  manifest["iters"] = cfg.total_iters;
  manifest["burn_in"] = cfg.burn_in;
  manifest["thin"] = cfg.thin;
  manifest["epsilon"] = cfg.epsilon;

  std::ostringstream chain_text;
  const auto start = Clock::now();
  if (o.method == "gpc") {
    const PosteriorChain chain = fit(data.x, *data.y, cfg);
    const double elapsed = seconds_since(start);
    write_chain(chain_text, chain);
    manifest["tau2"] = chain.scale;
    manifest["m"] = chain.conditioning_size;
    manifest["retained"] = chain.retained();
    manifest["diagnostics"] = chain_manifest(chain.diagnostics);
    if (o.record_timing) manifest["timings"] = {{"fit_seconds", elapsed}};
  } else if (o.method == "dgpc") {
    DgpcFitConfig dc;
    dc.outer = cfg;
    const DgpcChain chain = fit_deep(data.x, *data.y, dc);
    const double elapsed = seconds_since(start);
    write_chain(chain_text, chain);
    manifest["tau2"] = chain.scale;
    manifest["m"] = chain.conditioning_size;
    manifest["retained"] = chain.retained();
    json diag = chain_manifest(chain.diagnostics.outer);
    diag["warp_lengthscale_proposals"] = chain.diagnostics.warp_lengthscale_proposals;
    diag["warp_lengthscale_acceptance"] = chain.diagnostics.warp_lengthscale_acceptance();
    diag["mean_warp_ess_iterations"] = chain.diagnostics.mean_warp_ess_iterations();
    manifest["diagnostics"] = diag;
    if (o.record_timing) manifest["timings"] = {{"fit_seconds", elapsed}};
  } else {
    throw InvalidArgument("unknown method '" + o.method + "' (expected gpc or dgpc)");
  }
  manifest["omega_max"] = manifest["diagnostics"]["omega_max"];
  write_text_file(o.chain_out, chain_text.str());
  write_text_file(o.manifest, dump(manifest));
}

struct PredictOptions {
  std::string chain;
  std::string train;
  std::string test;
  std::string mode = "pointwise";
  std::string out;
  std::string metrics_out;
  std::uint64_t seed = 0;
  bool draw_warp = false;
  int threads = 0;
};

void cmd_predict(const PredictOptions& o) {
  set_threads(o.threads);
  const Dataset train = read_dataset_file(o.train);
  const Dataset test = read_dataset_file(o.test);
  if (test.dim() != train.dim())
    throw DataError("test inputs have " + std::to_string(test.dim()) +
                        " columns but training inputs have " + std::to_string(train.dim()),
                    1);
  const PredictMode mode = parse_predict_mode(o.mode);
  std::ifstream in(o.chain);
  if (!in) throw DataError("cannot open '" + o.chain + "'", 0);

  PredictionSummary summary;
  if (peek_chain_kind(o.chain) == ChainKind::Gpc) {
    const PosteriorChain chain = read_gpc_chain(in);
    if (chain.n() != train.n())
      throw DataError("chain was fit on n = " + std::to_string(chain.n()) +
                          " points but the training file has n = " + std::to_string(train.n()),
                      0);
    summary = predict(chain, train.x, test.x, mode, o.seed);
  } else {
    const DgpcChain chain = read_dgpc_chain(in);
    if (chain.n() != train.n() || chain.dim() != train.dim())
      throw DataError("chain was fit on " + std::to_string(chain.n()) + " x " +
                          std::to_string(chain.dim()) + " inputs but the training file is " +
                          std::to_string(train.n()) + " x " + std::to_string(train.dim()),
                      0);
    summary = predict_deep(chain, train.x, test.x, mode, o.seed, o.draw_warp);
  }

  std::ostringstream os;
  write_predictions(os, test.x, summary);
  write_text_file(o.out, os.str());

  if (test.y) {
    const MetricReport r = metrics(*test.y, summary.mean);
    json j;
    j["n_test"] = test.n();
    j["CR"] = r.cr;
    j["LS"] = r.ls;
    write_text_file(o.metrics_out.empty() ? o.out + ".metrics.json" : o.metrics_out, dump(j));
  }
}

struct GenOptions {
  std::string problem;
  int n = 0;
  int d = 0;
  std::uint64_t seed = 0;
  std::string out;
};

void cmd_gen(const GenOptions& o) {
  const TestProblem problem = make_problem(o.problem, o.d);
  Dataset data;
  data.x = lhs_design(o.n, problem.dim, o.seed);
  data.y = label_all(problem, data.x);
  write_dataset_file(o.out, data);
}

struct InspectOptions {
  std::string data;
  double epsilon = 1e-3;
};

void cmd_inspect(const InspectOptions& o, std::ostream& out) {
  const Dataset data = read_dataset_file(o.data);
  if (!data.y) throw DataError(o.data + ": inspect needs a y column", 1);
  const std::vector<int> omega = insulation(data.x, *data.y);
  const int omega_max = *std::max_element(omega.begin(), omega.end());
  out << "omega";
  for (int w : omega) out << ' ' << w;
  out << "\nomega_max " << omega_max << "\ntau2 " << format_double(tau2_from_omega_max(omega_max, o.epsilon))
      << '\n';
}

struct BenchOptions {
  std::string problem;
  int dim = 0;
  std::vector<std::string> methods{"gpc"};
  std::vector<int> n_grid{200};
  int n_test = 1000;
  int reps = 10;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string mode = "pointwise";
  int m = 25;
  int iters = 10000;
  int burn_in = 1000;
  int thin = 10;
  double epsilon = 1e-3;
  bool record_timing = false;
  int threads = 0;
};

bool cmd_bench(const BenchOptions& o, std::ostream& err) {
  set_threads(o.threads);
  ExperimentConfig cfg;
  cfg.problem = o.problem;
  cfg.dim = o.dim;
  cfg.methods.clear();
  for (const std::string& m : o.methods) cfg.methods.push_back(parse_method(m));
  cfg.n_grid = o.n_grid;
  cfg.n_test = o.n_test;
  cfg.repetitions = o.reps;
  cfg.seed = o.seed;
  cfg.mode = parse_predict_mode(o.mode);
  cfg.fit.conditioning_size = o.m;
  cfg.fit.total_iters = o.iters;
  cfg.fit.burn_in = o.burn_in;
  cfg.fit.thin = o.thin;
  cfg.fit.epsilon = o.epsilon;

  const std::vector<RunRecord> records = run_experiment(cfg);
  std::filesystem::create_directories(o.out_dir);
  const std::filesystem::path dir(o.out_dir);
  write_text_file((dir / "runs.csv").string(), records_to_csv(records, o.record_timing));
  write_text_file((dir / "summary.json").string(), dump(summarize_records(records)));

  bool ok = true;
  for (const RunRecord& r : records) {
    if (r.ok) continue;
    ok = false;
    err << "bench: " << r.problem << '/' << r.method << " n=" << r.n << " rep=" << r.repetition
        << ": " << r.error << '\n';
  }
  return ok;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bayesian GP classification with Vecchia approximation"};
  app.require_subcommand(1);

  FitOptions fit_opt;
  auto* fit_cmd = app.add_subcommand("fit", "Sample the posterior and write a chain file");
  fit_cmd->add_option("--train", fit_opt.train, "training CSV (x1..xd,y)")->required();
  fit_cmd->add_option("--method", fit_opt.method, "gpc or dgpc")->capture_default_str();
  fit_cmd->add_option("--seed", fit_opt.seed, "master seed")->required();
  fit_cmd->add_option("--chain-out", fit_opt.chain_out, "chain file to write")->required();
  fit_cmd->add_option("--manifest", fit_opt.manifest, "JSON run manifest to write")->required();
  fit_cmd->add_option("--m", fit_opt.m, "conditioning set size")->capture_default_str();
  fit_cmd->add_option("--iters", fit_opt.iters, "total MCMC iterations")->capture_default_str();
  fit_cmd->add_option("--burn-in", fit_opt.burn_in, "burn-in iterations")->capture_default_str();
  fit_cmd->add_option("--thin", fit_opt.thin, "thinning interval")->capture_default_str();
  fit_cmd->add_option("--epsilon", fit_opt.epsilon, "tail probability for tau^2")
      ->capture_default_str();
  fit_cmd->add_option("--kernel", fit_opt.kernel, "matern52 or sqexp")->capture_default_str();
  fit_cmd->add_option("--lengthscale", fit_opt.lengthscale, "hold the lengthscale fixed");
  fit_cmd->add_option("--scale", fit_opt.scale, "use this tau^2 instead of the heuristic");
  fit_cmd->add_flag("--no-nugget", fit_opt.no_nugget, "skip the burn-in nugget");
  fit_cmd->add_flag("--dense", fit_opt.dense, "condition on all earlier points (m = n - 1)");
  fit_cmd->add_flag("--record-timing", fit_opt.record_timing, "add wall times to the manifest");
  fit_cmd->add_option("--threads", fit_opt.threads, "OpenMP threads (0 = default)");

  PredictOptions pred_opt;
  auto* pred_cmd = app.add_subcommand("predict", "Posterior predictive summaries at test inputs");
  pred_cmd->add_option("--chain", pred_opt.chain, "chain file from fit")->required();
  pred_cmd->add_option("--train", pred_opt.train, "training CSV used for the fit")->required();
  pred_cmd->add_option("--test", pred_opt.test, "test CSV (x1..xd[,y])")->required();
  pred_cmd->add_option("--mode", pred_opt.mode, "pointwise or joint")->capture_default_str();
  pred_cmd->add_option("--seed", pred_opt.seed, "master seed")->required();
  pred_cmd->add_option("--out", pred_opt.out, "predictions CSV to write")->required();
  pred_cmd->add_option("--metrics-out", pred_opt.metrics_out,
                       "metrics JSON (default <out>.metrics.json; needs test labels)");
  pred_cmd->add_flag("--draw-warp", pred_opt.draw_warp, "draw warped test inputs (dgpc)");
  pred_cmd->add_option("--threads", pred_opt.threads, "OpenMP threads (0 = default)");

  GenOptions gen_opt;
  auto* gen_cmd = app.add_subcommand("gen", "Write a labelled Latin hypercube design");
  gen_cmd->add_option("--problem", gen_opt.problem, "tophat, sine, box, schaffer, g, g6")
      ->required();
  gen_cmd->add_option("--n", gen_opt.n, "number of points")->required();
  gen_cmd->add_option("--d", gen_opt.d, "input dimension (g only)");
  gen_cmd->add_option("--seed", gen_opt.seed, "master seed")->required();
  gen_cmd->add_option("--out", gen_opt.out, "CSV to write")->required();

  InspectOptions insp_opt;
  std::uint64_t insp_seed = 0;
  auto* insp_cmd = app.add_subcommand("inspect", "Print insulation and the implied tau^2");
  insp_cmd->add_option("--data", insp_opt.data, "labelled CSV")->required();
  insp_cmd->add_option("--epsilon", insp_opt.epsilon, "tail probability")->capture_default_str();
  insp_cmd->add_option("--seed", insp_seed, "accepted for uniformity; unused");

  BenchOptions bench_opt;
  auto* bench_cmd = app.add_subcommand("bench", "Repeated fit/predict experiments");
  bench_cmd->add_option("--problem", bench_opt.problem, "test problem")->required();
  bench_cmd->add_option("--d", bench_opt.dim, "input dimension (g only)");
  bench_cmd->add_option("--methods", bench_opt.methods, "gpc, gpc-full, dgpc")
      ->delimiter(',')
      ->capture_default_str();
  bench_cmd->add_option("--n", bench_opt.n_grid, "training sizes")
      ->delimiter(',')
      ->capture_default_str();
  bench_cmd->add_option("--n-test", bench_opt.n_test, "test points")->capture_default_str();
  bench_cmd->add_option("--reps", bench_opt.reps, "repetitions")->capture_default_str();
  bench_cmd->add_option("--seed", bench_opt.seed, "master seed")->required();
  bench_cmd->add_option("--out-dir", bench_opt.out_dir, "output directory")->required();
  bench_cmd->add_option("--mode", bench_opt.mode, "pointwise or joint")->capture_default_str();
  bench_cmd->add_option("--m", bench_opt.m, "conditioning set size")->capture_default_str();
  bench_cmd->add_option("--iters", bench_opt.iters, "total MCMC iterations")
      ->capture_default_str();
  bench_cmd->add_option("--burn-in", bench_opt.burn_in, "burn-in iterations")
      ->capture_default_str();
  bench_cmd->add_option("--thin", bench_opt.thin, "thinning interval")->capture_default_str();
  bench_cmd->add_option("--epsilon", bench_opt.epsilon, "tail probability for tau^2")
      ->capture_default_str();
  bench_cmd->add_flag("--record-timing", bench_opt.record_timing, "fill the seconds column");
  bench_cmd->add_option("--threads", bench_opt.threads, "OpenMP threads (0 = default)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();  // program name
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*fit_cmd) cmd_fit(fit_opt);
    if (*pred_cmd) cmd_predict(pred_opt);
    if (*gen_cmd) cmd_gen(gen_opt);
    if (*insp_cmd) cmd_inspect(insp_opt, out);
    if (*bench_cmd && !cmd_bench(bench_opt, err)) return kExitNumerical;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const SamplerStuck& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitOk;
}

}  // namespace vgpc::cli
