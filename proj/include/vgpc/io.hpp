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

#include <iosfwd>
#include <optional>
#include <string>

#include "vgpc/dgpc.hpp"
#include "vgpc/gpc.hpp"

namespace vgpc {

/// Inputs plus optional binary labels read from a headed CSV.
struct Dataset {
  Matrix x;
  std::optional<Labels> y;

  int n() const { return static_cast<int>(x.rows()); }
  int dim() const { return static_cast<int>(x.cols()); }
};

/// 17 significant digits, so every double round-trips exactly.
std::string format_double(double value);

/// Header is x1..xd with an optional trailing y column. Malformed rows throw
/// DataError with the 1-based file line.
Dataset read_dataset(std::istream& in);
Dataset read_dataset_file(const std::string& path);
void write_dataset(std::ostream& out, const Dataset& data);
void write_dataset_file(const std::string& path, const Dataset& data);

/// Chain files start with "# vgpc-chain version=1 kind=gpc|dgpc", followed
/// by "# key=value ..." metadata lines, a column header and one row per
/// retained sample.
inline constexpr int kChainVersion = 1;

void write_chain(std::ostream& out, const PosteriorChain& chain);
void write_chain(std::ostream& out, const DgpcChain& chain);

enum class ChainKind { Gpc, Dgpc };

/// Reads the kind from the magic line without consuming the file.
ChainKind peek_chain_kind(const std::string& path);
PosteriorChain read_gpc_chain(std::istream& in);
DgpcChain read_dgpc_chain(std::istream& in);

/// x..., mean, variance, label.
void write_predictions(std::ostream& out, const Matrix& xstar, const PredictionSummary& summary);

/// Writes `contents` to `path`, throwing DataError when the file cannot be
/// opened or written.
void write_text_file(const std::string& path, const std::string& contents);

}  // namespace vgpc
