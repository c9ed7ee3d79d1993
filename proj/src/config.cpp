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

#include "oddstream/config.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <map>

#include "oddstream/error.hpp"

namespace oddstream {

namespace {

[[noreturn]] void Bad(const std::string& key, const std::string& what) {
  throw Error(ErrorCode::kInvalidConfig, "config key '" + key + "': " + what);
}

double Number(const std::string& key, const Json& v) {
  if (!v.is_number()) Bad(key, "expected a number");
  return v.get<double>();
}

std::uint64_t Unsigned(const std::string& key, const Json& v) {
  if (!v.is_number_unsigned()) Bad(key, "expected a non-negative integer");
  return v.get<std::uint64_t>();
}

bool Boolean(const std::string& key, const Json& v) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "on") return true;
    if (s == "off") return false;
  }
  Bad(key, "expected true/false or \"on\"/\"off\"");
}

std::string String(const std::string& key, const Json& v) {
  if (!v.is_string()) Bad(key, "expected a string");
  return v.get<std::string>();
}

}  // namespace

RunConfig ParseRunConfig(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kInvalidConfig, "config must be a JSON object");
  RunConfig c;
  using Setter = std::function<void(const std::string&, const Json&)>;
  const std::map<std::string, Setter> setters = {
      {"preset", [&](auto& k, auto& v) { c.preset = String(k, v); }},
      {"k", [&](auto& k, auto& v) { c.k = Unsigned(k, v); }},
      {"lambda", [&](auto& k, auto& v) { c.lambda = Number(k, v); }},
      {"gamma",
       [&](auto& k, auto& v) {
         if (v.is_string() && (v.template get<std::string>() == "inf" || v.template get<std::string>() == "infinity")) {
           c.gamma_infinite = true;
           c.gamma.reset();
         } else {
           c.gamma = Number(k, v);
           c.gamma_infinite = false;
         }
       }},
      {"kappa", [&](auto& k, auto& v) { c.kappa = Number(k, v); }},
      {"combinator", [&](auto& k, auto& v) { c.combinator = String(k, v); }},
      {"score_variant", [&](auto& k, auto& v) { c.score_variant = String(k, v); }},
      {"normalize", [&](auto& k, auto& v) { c.normalize = Boolean(k, v); }},
      {"adapt", [&](auto& k, auto& v) { c.adapt = Boolean(k, v); }},
      {"tpr_target", [&](auto& k, auto& v) { c.tpr_target = Number(k, v); }},
      {"seed", [&](auto& k, auto& v) { c.seed = Unsigned(k, v); }},
      {"threads", [&](auto& k, auto& v) { c.threads = static_cast<unsigned>(Unsigned(k, v)); }},
      {"train", [&](auto& k, auto& v) { c.train = String(k, v); }},
      {"val", [&](auto& k, auto& v) { c.val = String(k, v); }},
      {"repeats", [&](auto& k, auto& v) { c.repeats = Unsigned(k, v); }},
      {"accessible",
       [&](auto& k, auto& v) {
         if (!v.is_array()) Bad(k, "expected an array of non-negative integers");
         std::vector<std::size_t> ms;
         for (const auto& m : v) ms.push_back(Unsigned(k, m));
         c.accessible = std::move(ms);
       }},
      {"dim", [&](auto& k, auto& v) { c.dim = Unsigned(k, v); }},
      {"id_count", [&](auto& k, auto& v) { c.id_count = Unsigned(k, v); }},
      {"val_count", [&](auto& k, auto& v) { c.val_count = Unsigned(k, v); }},
      {"ood_count", [&](auto& k, auto& v) { c.ood_count = Unsigned(k, v); }},
      {"id_mean", [&](auto& k, auto& v) { c.id_mean = Number(k, v); }},
      {"id_std", [&](auto& k, auto& v) { c.id_std = Number(k, v); }},
      {"ood_mean", [&](auto& k, auto& v) { c.ood_mean = Number(k, v); }},
      {"ood_std", [&](auto& k, auto& v) { c.ood_std = Number(k, v); }},
  };
  for (const auto& [key, value] : j.items()) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw Error(ErrorCode::kInvalidConfig, "unknown config key '" + key + "'");
    it->second(key, value);
  }
  return c;
}

RunConfig LoadRunConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open config " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, "config " + path.string() + " is not valid JSON: " + e.what());
  }
  return ParseRunConfig(j);
}

DetectorConfig ResolveDetector(const RunConfig& c) {
  DetectorConfig d;
  const std::string preset = c.preset.value_or("cifar");
  if (preset == "cifar") {
    d = DetectorConfig::CifarScale();
  } else if (preset == "imagenet") {
    d = DetectorConfig::ImagenetScale();
  } else {
    throw Error(ErrorCode::kInvalidConfig, "unknown preset '" + preset + "'");
  }
  if (c.k) d.k = *c.k;
  if (c.lambda) d.lambda = *c.lambda;
  if (c.gamma_infinite) d.gamma.reset();
  if (c.gamma) d.gamma = *c.gamma;
  if (c.kappa) d.kappa = *c.kappa;
  if (c.combinator) d.combinator = ParseCombinator(*c.combinator);
  if (c.score_variant) d.variant = ParseScoreVariant(*c.score_variant);
  if (c.normalize) d.normalize = *c.normalize;
  if (c.adapt) d.adapt = *c.adapt;
  if (c.tpr_target) d.tpr_target = *c.tpr_target;
  d.Validate();
  return d;
}

Json ToJson(const DetectorConfig& c) {
  Json j;
  j["k"] = c.k;
  j["lambda"] = c.lambda ? Json(*c.lambda) : Json(nullptr);
  j["gamma"] = c.gamma ? Json(*c.gamma) : Json("inf");
  j["kappa"] = c.kappa;
  j["combinator"] = std::string(CombinatorName(c.combinator));
  j["score_variant"] = std::string(ScoreVariantName(c.variant));
  j["normalize"] = c.normalize;
  j["adapt"] = c.adapt;
  j["tpr_target"] = c.tpr_target;
  return j;
}

Json ToJson(const EvalReport& r) {
  Json j;
  j["fpr95"] = r.fpr95;
  j["auroc"] = r.auroc;
  j["lambda"] = r.lambda;
  j["bank_size_initial"] = r.bank_size_initial;
  j["bank_size_final"] = r.bank_size_final;
  j["id_reeval_accuracy"] = r.id_reeval_accuracy ? Json(*r.id_reeval_accuracy) : Json(nullptr);
  Json per = Json::object();
  for (const auto& [name, m] : r.per_dataset) {
    per[name] = {{"fpr95", m.fpr95}, {"auroc", m.auroc}, {"count", m.count}};
  }
  j["per_dataset"] = per;
  if (r.mean_inference_micros) j["mean_inference_micros"] = *r.mean_inference_micros;
  return j;
}

Json ToJson(const SeededKnnSetup& s) {
  Json j;
  j["id_mean"] = s.id.mean;
  j["id_std"] = s.id.std;
  j["ood_mean"] = s.ood.mean;
  j["ood_std"] = s.ood.std;
  j["id_count"] = s.id_count;
  j["val_count"] = s.val_count;
  j["ood_count"] = s.ood_test_count;
  j["k"] = s.k;
  j["kappa"] = s.kappa;
  j["repeats"] = s.repeats;
  j["tpr_target"] = s.tpr_target;
  j["seed"] = s.seed;
  return j;
}

Json ToJson(const ClusterSetup& s) {
  Json j;
  j["dim"] = s.dim;
  j["id_mean"] = s.id_mean;
  j["id_std"] = s.id_std;
  j["ood_mean"] = s.ood_mean;
  j["ood_std"] = s.ood_std;
  j["id_count"] = s.bank_count;
  j["val_count"] = s.val_count;
  j["ood_count"] = s.stream_count;
  j["seed"] = s.seed;
  return j;
}

std::string ConfigHash(const Json& resolved) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : resolved.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string DecisionLine(const DecisionRecord& r, const std::string& config_hash,
                         const std::string* dataset) {
  Json j;
  j["index"] = r.sample_index;
  j["score"] = r.score;
  j["verdict"] = std::string(VerdictName(r.verdict));
  j["augmentation"] = std::string(AugmentationName(r.augmentation));
  j["bank_size_before"] = r.bank_size_before;
  if (dataset) j["dataset"] = *dataset;
  j["config_hash"] = config_hash;
  return j.dump();
}

}  // namespace oddstream
