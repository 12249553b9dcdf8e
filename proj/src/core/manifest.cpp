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
#include "histosynth/core/manifest.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "histosynth/core/png_io.h"
#include "histosynth/core/tps.h"

namespace histosynth::core {
namespace fs = std::filesystem;

std::string_view SplitName(Split s) { return s == Split::kTrain ? "train" : "test"; }

std::optional<Split> ParseSplit(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "test") return Split::kTest;
  return std::nullopt;
}

std::vector<ManifestEntry> DatasetManifest::WithSplit(Split s) const {
  std::vector<ManifestEntry> out;
  std::copy_if(entries.begin(), entries.end(), std::back_inserter(out),
               [s](const ManifestEntry& e) { return e.split == s; });
  return out;
}

DatasetManifest LoadManifest(const fs::path& path, bool check_files) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest " + path.string());
  const fs::path base = path.parent_path();
  DatasetManifest manifest;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw std::runtime_error(where + ": " + e.what());
    }
    for (const char* key : {"image", "mask", "split", "tps"}) {
      if (!j.contains(key)) throw std::runtime_error(where + ": missing field '" + key + "'");
    }
    ManifestEntry e;
    e.image = j.at("image").get<std::string>();
    e.mask = j.at("mask").get<std::string>();
    if (e.image.is_relative()) e.image = base / e.image;
    if (e.mask.is_relative()) e.mask = base / e.mask;
    const auto split = ParseSplit(j.at("split").get<std::string>());
    if (!split) throw std::runtime_error(where + ": split must be 'train' or 'test'");
    e.split = *split;
    e.tps = j.at("tps").get<double>();
    if (!(e.tps >= 0.0 && e.tps <= 1.0)) {
      throw std::runtime_error(where + ": tps must lie in [0, 1]");
    }
    if (check_files) {
      for (const fs::path& p : {e.image, e.mask}) {
        if (!fs::exists(p)) throw std::runtime_error(where + ": missing file " + p.string());
      }
    }
    manifest.entries.push_back(std::move(e));
  }
  return manifest;
}

void SaveManifest(const fs::path& path, const DatasetManifest& manifest) {
  const fs::path base = fs::absolute(path).parent_path();
  const auto rel = [&](const fs::path& p) {
    const fs::path candidate = fs::absolute(p).lexically_relative(base);
    if (candidate.empty() || *candidate.begin() == "..") return p.generic_string();
    return candidate.generic_string();
  };
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest " + path.string());
  for (const ManifestEntry& e : manifest.entries) {
    nlohmann::ordered_json j;
    j["image"] = rel(e.image);
    j["mask"] = rel(e.mask);
    j["split"] = SplitName(e.split);
    j["tps"] = e.tps;
    out << j.dump() << '\n';
  }
}

std::pair<DatasetManifest, DatasetManifest> split_dataset(const DatasetManifest& manifest,
                                                          double train_fraction,
                                                          bool stratify_by_tps_class,
                                                          std::uint64_t seed) {
  if (manifest.entries.empty()) throw std::invalid_argument("cannot split an empty manifest");
  if (manifest.entries.size() < 2) {
    throw std::invalid_argument("splitting needs at least two entries");
  }
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("train_fraction must lie strictly between 0 and 1");
  }

  // Strata keep manifest order before shuffling so the result depends only on
  // (manifest, seed).
  std::map<int, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    const int key =
        stratify_by_tps_class ? static_cast<int>(tps_class(manifest.entries[i].tps)) : 0;
    strata[key].push_back(i);
  }

  std::mt19937_64 rng(seed);
  std::vector<bool> is_train(manifest.entries.size(), false);
  for (auto& [key, members] : strata) {
    std::shuffle(members.begin(), members.end(), rng);
    const auto n_train = static_cast<std::size_t>(
        std::lround(train_fraction * static_cast<double>(members.size())));
    for (std::size_t k = 0; k < std::min(n_train, members.size()); ++k) {
      is_train[members[k]] = true;
    }
  }

  // Guarantee two non-empty halves.
  const auto n_train_total = static_cast<std::size_t>(
      std::count(is_train.begin(), is_train.end(), true));
  if (n_train_total == 0 || n_train_total == is_train.size()) {
    std::vector<std::size_t> order(manifest.entries.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    is_train[order.front()] = n_train_total == 0;
  }

  DatasetManifest train;
  DatasetManifest test;
  train.seed = test.seed = seed;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    ManifestEntry e = manifest.entries[i];
    e.split = is_train[i] ? Split::kTrain : Split::kTest;
    (is_train[i] ? train : test).entries.push_back(std::move(e));
  }
  return {std::move(train), std::move(test)};
}

std::vector<PairedSample> LoadPairs(const DatasetManifest& manifest, std::optional<Split> only) {
  std::vector<PairedSample> out;
  for (const ManifestEntry& e : manifest.entries) {
    if (only && e.split != *only) continue;
    PairedSample s;
    s.id = e.image.generic_string();
    s.mask = ReadMaskPng(e.mask);
    s.image = ReadRgbPng(e.image);
    if (s.mask.width() != s.image.width() || s.mask.height() != s.image.height()) {
      throw std::runtime_error("image/mask size mismatch for " + s.id);
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace histosynth::core
