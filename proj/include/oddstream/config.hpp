/*
 * Copyright 2026 The oddstream Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "oddstream/detector.hpp"
#include "oddstream/metrics.hpp"
#include "oddstream/protocols.hpp"

namespace oddstream {

using Json = nlohmann::ordered_json;

/// Key-value run configuration as read from a JSON object. Every field is
/// optional; each subcommand resolves the ones it uses against its own
/// defaults. Unknown keys are rejected.
struct RunConfig {
  // Detector.
  std::optional<std::string> preset;  // "cifar" | "imagenet"
  std::optional<std::size_t> k;
  std::optional<double> lambda;
  std::optional<double> gamma;  // ignored when gamma_infinite
  bool gamma_infinite = false;
  std::optional<double> kappa;
  std::optional<std::string> combinator;
  std::optional<std::string> score_variant;
  std::optional<bool> normalize;
  std::optional<bool> adapt;
  std::optional<double> tpr_target;

  // Run plumbing.
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::string> train;
  std::optional<std::string> val;

  // Synthetic experiments.
  std::optional<std::size_t> repeats;
  std::optional<std::vector<std::size_t>> accessible;
  std::optional<std::size_t> dim;
  std::optional<std::size_t> id_count;
  std::optional<std::size_t> val_count;
  std::optional<std::size_t> ood_count;
  std::optional<double> id_mean;
  std::optional<double> id_std;
  std::optional<double> ood_mean;
  std::optional<double> ood_std;
};

RunConfig ParseRunConfig(const Json& j);
RunConfig LoadRunConfig(const std::filesystem::path& path);

/// Preset (default "cifar") with the config's overrides applied.
DetectorConfig ResolveDetector(const RunConfig& c);

Json ToJson(const DetectorConfig& c);
Json ToJson(const EvalReport& r);
Json ToJson(const SeededKnnSetup& s);
Json ToJson(const ClusterSetup& s);

/// FNV-1a 64 of the compact dump, as 16 lowercase hex digits.
std::string ConfigHash(const Json& resolved);

/// One decision-log line (no trailing newline). Field order is fixed.
std::string DecisionLine(const DecisionRecord& r, const std::string& config_hash,
                         const std::string* dataset = nullptr);

}  // namespace oddstream
