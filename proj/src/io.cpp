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

#include "vgpc/io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string_view>
#include <vector>

namespace vgpc {

namespace {

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.emplace_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool parse_double(const std::string& field, double& value) {
  const std::string s = trim(field);
  if (s.empty()) return false;
  char* end = nullptr;
  errno = 0;
  value = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && errno != ERANGE && std::isfinite(value);
}

double parse_or_throw(const std::string& field, long line, const std::string& what) {
  double v = 0.0;
  if (!parse_double(field, v))
    throw DataError("line " + std::to_string(line) + ": cannot parse " + what + " '" +
                        trim(field) + "'",
                    line);
  return v;
}

std::uint64_t parse_u64(const std::string& s, const std::string& key) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::exception&) {
    throw DataError("chain metadata '" + key + "' is not an unsigned integer: " + s, 0);
  }
}

int parse_int(const std::string& s, const std::string& key) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::exception&) {
    throw DataError("chain metadata '" + key + "' is not an integer: " + s, 0);
  }
}

void write_row(std::ostream& out, const std::vector<double>& values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out << ',';
    out << format_double(values[i]);
  }
  out << '\n';
}

void write_config(std::ostream& out, const GpcFitConfig& c) {
  out << "# seed=" << c.seed << " iters=" << c.total_iters << " burn_in=" << c.burn_in
      << " thin=" << c.thin << " epsilon=" << format_double(c.epsilon)
      << " requested_m=" << c.conditioning_size << " saturate=" << (c.saturate ? 1 : 0)
      << " burn_in_nugget=" << (c.burn_in_nugget ? 1 : 0) << '\n';
}

struct ChainText {
  std::string kind;
  std::map<std::string, std::string> meta;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  const std::string& get(const std::string& key) const {
    const auto it = meta.find(key);
    if (it == meta.end()) throw DataError("chain file is missing metadata '" + key + "'", 0);
    return it->second;
  }
};

ChainText read_chain_text(std::istream& in) {
  ChainText ct;
  std::string line;
  long lineno = 0;
  if (!std::getline(in, line)) throw DataError("chain file is empty", 0);
  ++lineno;
  line = trim(line);
  const std::string magic = "# vgpc-chain ";
  if (line.rfind(magic, 0) != 0) throw DataError("not a vgpc chain file (bad magic line)", 1);
  for (const std::string& tok : split(line.substr(magic.size()), ' ')) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = tok.substr(0, eq), value = tok.substr(eq + 1);
    if (key == "version" && value != std::to_string(kChainVersion))
      throw DataError("unsupported chain version " + value, 1);
    if (key == "kind") ct.kind = value;
  }
  if (ct.kind.empty()) throw DataError("chain file does not name its kind", 1);
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    if (line[0] == '#') {
      for (const std::string& tok : split(line.substr(1), ' ')) {
        const auto eq = tok.find('=');
        if (eq != std::string::npos) ct.meta[tok.substr(0, eq)] = tok.substr(eq + 1);
      }
      continue;
    }
    const std::vector<std::string> fields = split(line, ',');
    if (!have_header) {
      ct.header = fields;
      have_header = true;
      continue;
    }
    if (fields.size() != ct.header.size())
      throw DataError("line " + std::to_string(lineno) + ": expected " +
                          std::to_string(ct.header.size()) + " fields, found " +
                          std::to_string(fields.size()),
                      lineno);
    std::vector<double> row(fields.size());
    for (std::size_t k = 0; k < fields.size(); ++k)
      row[k] = parse_or_throw(fields[k], lineno, "chain value");
    ct.rows.push_back(std::move(row));
  }
  if (!have_header) throw DataError("chain file has no column header", lineno);
  return ct;
}

void read_config(const ChainText& ct, GpcFitConfig& c) {
  auto opt = [&](const char* key) -> const std::string* {
    const auto it = ct.meta.find(key);
    return it == ct.meta.end() ? nullptr : &it->second;
  };
  if (auto* s = opt("seed")) c.seed = parse_u64(*s, "seed");
  if (auto* s = opt("iters")) c.total_iters = parse_int(*s, "iters");
  if (auto* s = opt("burn_in")) c.burn_in = parse_int(*s, "burn_in");
  if (auto* s = opt("thin")) c.thin = parse_int(*s, "thin");
  if (auto* s = opt("epsilon")) c.epsilon = std::strtod(s->c_str(), nullptr);
  if (auto* s = opt("requested_m")) c.conditioning_size = parse_int(*s, "requested_m");
  if (auto* s = opt("saturate")) c.saturate = *s == "1";
  if (auto* s = opt("burn_in_nugget")) c.burn_in_nugget = *s == "1";
}

double meta_double(const ChainText& ct, const std::string& key) {
  double v = 0.0;
  if (!parse_double(ct.get(key), v)) throw DataError("chain metadata '" + key + "' is not a number", 0);
  return v;
}

}  // namespace

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

Dataset read_dataset(std::istream& in) {
  std::string line;
  long lineno = 0;
  if (!std::getline(in, line)) throw DataError("dataset is empty", 0);
  ++lineno;
  const std::vector<std::string> header = split(trim(line), ',');
  int d = 0;
  bool has_y = false;
  for (std::size_t k = 0; k < header.size(); ++k) {
    const std::string name = trim(header[k]);
    if (name == "y" && k + 1 == header.size() && k > 0) {
      has_y = true;
    } else if (name == "x" + std::to_string(k + 1)) {
      ++d;
    } else {
      throw DataError("line 1: expected column 'x" + std::to_string(k + 1) +
                          "' (or a final 'y'), found '" + name + "'",
                      1);
    }
  }
  if (d == 0) throw DataError("line 1: no input columns", 1);
  const std::size_t width = static_cast<std::size_t>(d) + (has_y ? 1 : 0);

  std::vector<double> values;
  Labels labels;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split(line, ',');
    if (fields.size() != width)
      throw DataError("line " + std::to_string(lineno) + ": expected " + std::to_string(width) +
                          " fields, found " + std::to_string(fields.size()),
                      lineno);
    for (int j = 0; j < d; ++j) values.push_back(parse_or_throw(fields[j], lineno, "input"));
    if (has_y) {
      const std::string y = trim(fields[d]);
      if (y != "0" && y != "1")
        throw DataError("line " + std::to_string(lineno) + ": label must be 0 or 1, found '" +
                            y + "'",
                        lineno);
      labels.push_back(y == "1" ? 1 : 0);
    }
  }
  const Eigen::Index n = static_cast<Eigen::Index>(values.size()) / d;
  if (n == 0) throw DataError("dataset has no rows", lineno);
  Dataset data;
  data.x = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), n, d);
  if (has_y) data.y = std::move(labels);
  return data;
}

Dataset read_dataset_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'", 0);
  try {
    return read_dataset(in);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what(), e.line());
  }
}

void write_dataset(std::ostream& out, const Dataset& data) {
  for (int j = 0; j < data.dim(); ++j) out << (j ? ",x" : "x") << j + 1;
  if (data.y) out << ",y";
  out << '\n';
  for (int i = 0; i < data.n(); ++i) {
    for (int j = 0; j < data.dim(); ++j) out << (j ? "," : "") << format_double(data.x(i, j));
    if (data.y) out << ',' << (*data.y)[i];
    out << '\n';
  }
}

void write_text_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path + "' for writing", 0);
  out << contents;
  out.flush();
  if (!out) throw DataError("failed writing '" + path + "'", 0);
}

void write_dataset_file(const std::string& path, const Dataset& data) {
  std::ostringstream os;
  write_dataset(os, data);
  write_text_file(path, os.str());
}

void write_chain(std::ostream& out, const PosteriorChain& chain) {
  out << "# vgpc-chain version=" << kChainVersion << " kind=gpc\n";
  out << "# n=" << chain.n() << " retained=" << chain.retained()
      << " scale=" << format_double(chain.scale) << " family=" << to_string(chain.family)
      << " m=" << chain.conditioning_size << " plan_seed=" << chain.plan_seed << '\n';
  write_config(out, chain.config);
  out << "theta";
  for (int i = 0; i < chain.n(); ++i) out << ",z" << i + 1;
  out << '\n';
  std::vector<double> row(1 + chain.n());
  for (int t = 0; t < chain.retained(); ++t) {
    row[0] = chain.lengthscale_samples(t);
    for (int i = 0; i < chain.n(); ++i) row[1 + i] = chain.z_samples(t, i);
    write_row(out, row);
  }
}

void write_chain(std::ostream& out, const DgpcChain& chain) {
  const int n = chain.n(), d = chain.dim();
  out << "# vgpc-chain version=" << kChainVersion << " kind=dgpc\n";
  out << "# n=" << n << " d=" << d << " retained=" << chain.retained()
      << " scale=" << format_double(chain.scale) << " family=" << to_string(chain.family)
      << " m=" << chain.conditioning_size << " plan_seed=" << chain.outer_plan_seed
      << " warp_plan_seeds=";
  for (int j = 0; j < d; ++j) out << (j ? ";" : "") << chain.warp_plan_seeds[j];
  out << " sample_warp=" << (chain.config.sample_warp ? 1 : 0) << '\n';
  write_config(out, chain.config.outer);
  out << "theta_z";
  for (int j = 0; j < d; ++j) out << ",theta_w" << j + 1;
  for (int i = 0; i < n; ++i) out << ",z" << i + 1;
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < n; ++i) out << ",w" << j + 1 << '_' << i + 1;
  out << '\n';
  std::vector<double> row(1 + d + n + static_cast<std::size_t>(n) * d);
  for (int t = 0; t < chain.retained(); ++t) {
    std::size_t k = 0;
    row[k++] = chain.theta_z(t);
    for (int j = 0; j < d; ++j) row[k++] = chain.theta_w(t, j);
    for (int i = 0; i < n; ++i) row[k++] = chain.z_samples(t, i);
    for (int j = 0; j < d; ++j)
      for (int i = 0; i < n; ++i) row[k++] = chain.w_samples[t](i, j);
    write_row(out, row);
  }
}

ChainKind peek_chain_kind(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'", 0);
  std::string line;
  std::getline(in, line);
  if (line.rfind("# vgpc-chain ", 0) != 0)
    throw DataError(path + ": not a vgpc chain file (bad magic line)", 1);
  if (line.find("kind=gpc") != std::string::npos) return ChainKind::Gpc;
  if (line.find("kind=dgpc") != std::string::npos) return ChainKind::Dgpc;
  throw DataError(path + ": unknown chain kind", 1);
}

PosteriorChain read_gpc_chain(std::istream& in) {
  const ChainText ct = read_chain_text(in);
  if (ct.kind != "gpc") throw DataError("expected a gpc chain, found kind=" + ct.kind, 1);
  PosteriorChain chain;
  const int n = parse_int(ct.get("n"), "n");
  const int retained = parse_int(ct.get("retained"), "retained");
  if (static_cast<int>(ct.header.size()) != 1 + n)
    throw DataError("chain header has " + std::to_string(ct.header.size()) +
                        " columns, expected " + std::to_string(1 + n),
                    0);
  if (static_cast<int>(ct.rows.size()) != retained)
    throw DataError("chain has " + std::to_string(ct.rows.size()) + " samples, metadata says " +
                        std::to_string(retained),
                    0);
  chain.scale = meta_double(ct, "scale");
  chain.family = parse_kernel_family(ct.get("family"));
  chain.conditioning_size = parse_int(ct.get("m"), "m");
  chain.plan_seed = parse_u64(ct.get("plan_seed"), "plan_seed");
  read_config(ct, chain.config);
  chain.config.family = chain.family;
  chain.z_samples.resize(retained, n);
  chain.lengthscale_samples.resize(retained);
  for (int t = 0; t < retained; ++t) {
    chain.lengthscale_samples(t) = ct.rows[t][0];
    for (int i = 0; i < n; ++i) chain.z_samples(t, i) = ct.rows[t][1 + i];
  }
  return chain;
}

DgpcChain read_dgpc_chain(std::istream& in) {
  const ChainText ct = read_chain_text(in);
  if (ct.kind != "dgpc") throw DataError("expected a dgpc chain, found kind=" + ct.kind, 1);
  DgpcChain chain;
  const int n = parse_int(ct.get("n"), "n");
  const int d = parse_int(ct.get("d"), "d");
  const int retained = parse_int(ct.get("retained"), "retained");
  const std::size_t width = 1 + d + n + static_cast<std::size_t>(n) * d;
  if (ct.header.size() != width)
    throw DataError("chain header has " + std::to_string(ct.header.size()) +
                        " columns, expected " + std::to_string(width),
                    0);
  if (static_cast<int>(ct.rows.size()) != retained)
    throw DataError("chain has " + std::to_string(ct.rows.size()) + " samples, metadata says " +
                        std::to_string(retained),
                    0);
  chain.scale = meta_double(ct, "scale");
  chain.family = parse_kernel_family(ct.get("family"));
  chain.conditioning_size = parse_int(ct.get("m"), "m");
  chain.outer_plan_seed = parse_u64(ct.get("plan_seed"), "plan_seed");
  for (const std::string& s : split(ct.get("warp_plan_seeds"), ';'))
    chain.warp_plan_seeds.push_back(parse_u64(s, "warp_plan_seeds"));
  if (static_cast<int>(chain.warp_plan_seeds.size()) != d)
    throw DataError("chain lists " + std::to_string(chain.warp_plan_seeds.size()) +
                        " warp plan seeds for d = " + std::to_string(d),
                    0);
  read_config(ct, chain.config.outer);
  chain.config.outer.family = chain.family;
  if (const auto it = ct.meta.find("sample_warp"); it != ct.meta.end())
    chain.config.sample_warp = it->second == "1";
  chain.z_samples.resize(retained, n);
  chain.theta_z.resize(retained);
  chain.theta_w.resize(retained, d);
  chain.w_samples.assign(retained, Matrix(n, d));
  for (int t = 0; t < retained; ++t) {
    const std::vector<double>& row = ct.rows[t];
    std::size_t k = 0;
    chain.theta_z(t) = row[k++];
    for (int j = 0; j < d; ++j) chain.theta_w(t, j) = row[k++];
    for (int i = 0; i < n; ++i) chain.z_samples(t, i) = row[k++];
    for (int j = 0; j < d; ++j)
      for (int i = 0; i < n; ++i) chain.w_samples[t](i, j) = row[k++];
  }
  return chain;
}

void write_predictions(std::ostream& out, const Matrix& xstar, const PredictionSummary& summary) {
  for (Eigen::Index j = 0; j < xstar.cols(); ++j) out << 'x' << j + 1 << ',';
  out << "mean,variance,label\n";
  for (Eigen::Index i = 0; i < xstar.rows(); ++i) {
    for (Eigen::Index j = 0; j < xstar.cols(); ++j) out << format_double(xstar(i, j)) << ',';
    out << format_double(summary.mean(i)) << ',' << format_double(summary.variance(i)) << ','
        << summary.labels[i] << '\n';
  }
}

}  // namespace vgpc
