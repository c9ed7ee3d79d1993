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
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "oddstream/detector.hpp"
#include "oddstream/geometry.hpp"
#include "oddstream/metrics.hpp"
#include "oddstream/protocols.hpp"

namespace oddstream::io {

// ODDF layout, all integers little-endian:
//
//   offset  size  field
//   0       4     magic "ODDF" (4F 44 44 46)
//   4       2     version (u16, currently 1)
//   6       8     count (u64)
//   14      4     dim (u32)
//   18      1     label flag (0 = no labels, 1 = labels present)
//   19      4*count*dim   row-major IEEE-754 binary32 payload
//   ...     count         label bytes (only when flag = 1)
//
// Label bytes: 0 = ID, 1 = OOD, 255 = unlabeled.
inline constexpr std::uint16_t kOddfVersion = 1;
inline constexpr std::size_t kOddfHeaderBytes = 19;

inline constexpr std::uint8_t kLabelId = 0;
inline constexpr std::uint8_t kLabelOod = 1;
inline constexpr std::uint8_t kLabelNone = 255;

struct FeatureFile {
  FeatureVectors features;
  /// One byte per row when present.
  std::optional<std::vector<std::uint8_t>> labels;
};

std::vector<std::uint8_t> EncodeFeatures(const FeatureVectors& features,
                                         const std::optional<std::vector<std::uint8_t>>& labels = {});
FeatureFile DecodeFeatures(const std::vector<std::uint8_t>& bytes);

FeatureFile ReadFeatures(const std::filesystem::path& path);
void WriteFeatures(const std::filesystem::path& path, const FeatureVectors& features,
                   const std::optional<std::vector<std::uint8_t>>& labels = {});

/// One vector per line, comma separated, optional trailing label column
/// holding "id" or "ood". Blank lines are skipped.
FeatureFile ParseCsv(std::istream& in);
FeatureFile ReadCsv(const std::filesystem::path& path);
/// Writes values with enough digits to round-trip binary32 exactly.
void WriteCsv(std::ostream& out, const FeatureFile& file);

/// Wraps a feature file as a protocol dataset. Unlabeled rows count as OOD.
DatasetRef ToDataset(std::string name, const FeatureFile& file);

/// Feature file whose format is chosen by extension (.csv, else ODDF).
FeatureFile LoadAny(const std::filesystem::path& path);

}  // namespace oddstream::io
