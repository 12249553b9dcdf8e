// Copyright 2026 The HistoSynth Authors. All Rights Reserved.
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
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "histosynth/gan/config.h"
#include "histosynth/mask/air_cells.h"
#include "histosynth/seg/train.h"

namespace histosynth::config {

/// Scalar or flat array value of the key-value format.
using Value = std::variant<bool, std::int64_t, double, std::string, std::vector<double>, std::vector<std::string>>;

struct Entry {
  Value value;
  int line = 0;
};

/// "section.key" -> entry. Top-level keys have no section prefix.
using Document = std::map<std::string, Entry>;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses the subset used by run configs: "# comments", "[section]" headers,
/// and key = value lines where value is true/false, an integer, a float, a
/// double-quoted string, or a one-line array of numbers or strings.
/// Throws ConfigError with the line number on any syntax error or duplicate key.
Document ParseDocument(const std::string& text);

struct DataSection {
  std::string manifest;  // empty: use the bundled procedural corpus
  int corpus_size = 200;
  int width = 128;
  int height = 64;
  double split_fraction = 0.8;
};

struct MaskSection {
  double mean_distance = 15.0;
  std::string resolution = "polygons_noise";
  mask::ThresholdSpec thresholds;
};

struct EvalSection {
  std::vector<std::string> embedders = {"toy"};
  std::vector<double> frequencies = {4, 16, 64};
  std::int64_t steps_per_model = 1000;
  int n_eval = 100;
};

struct TuringSection {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string sessions_dir = "sessions";
};

struct RunConfig {
  std::uint64_t seed = 0;
  DataSection data;
  MaskSection mask;
  gan::GeneratorConfig generator;
  gan::DiscriminatorConfig discriminator;
  gan::TrainConfig train;
  std::int64_t train_max_steps = 0;  // 0: full schedule
  EvalSection eval;
  seg::SegTrainConfig seg;
  TuringSection turing;
};

/// Binds a document onto the defaults. Unknown sections or keys and
/// mistyped values are rejected.
RunConfig BindRunConfig(const Document& doc);
RunConfig ParseRunConfig(const std::string& text);
RunConfig LoadRunConfig(const std::filesystem::path& path);

/// Canonical text form; ParseRunConfig(FormatRunConfig(c)) reproduces c.
std::string FormatRunConfig(const RunConfig& config);

/// Writes <dir>/configs/run_config.toml.
void EchoRunConfig(const RunConfig& config, const std::filesystem::path& dir);

}  // namespace histosynth::config
