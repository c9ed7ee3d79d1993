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

#include "oddstream/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <iterator>
#include <limits>
#include <ostream>
#include <sstream>

#include "oddstream/error.hpp"

namespace oddstream::io {

namespace {

constexpr std::uint8_t kMagic[4] = {0x4F, 0x44, 0x44, 0x46};

template <typename T>
void PutLe(std::vector<std::uint8_t>& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
  }
}

template <typename T>
T GetLe(const std::uint8_t* p) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(p[i]) << (8 * i);
  return value;
}

void CheckLabels(const std::vector<std::uint8_t>& labels, std::size_t offset) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto b = labels[i];
    if (b != kLabelId && b != kLabelOod && b != kLabelNone) {
      throw Error(ErrorCode::kParseError, "invalid label byte " + std::to_string(b) + " at offset " +
                                              std::to_string(offset + i));
    }
  }
}

std::string_view Trim(std::string_view s) {
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

}  // namespace

std::vector<std::uint8_t> EncodeFeatures(const FeatureVectors& features,
                                         const std::optional<std::vector<std::uint8_t>>& labels) {
  const std::size_t count = features.size();
  const std::size_t dim = count == 0 ? 0 : static_cast<std::size_t>(features.front().size());
  if (dim > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorCode::kInvalidCount, "dimension does not fit in 32 bits");
  }
  if (labels) {
    if (labels->size() != count) {
      throw Error(ErrorCode::kMissingLabel, "expected " + std::to_string(count) + " labels, got " +
                                                std::to_string(labels->size()));
    }
    CheckLabels(*labels, 0);
  }

  std::vector<std::uint8_t> out;
  out.reserve(kOddfHeaderBytes + count * dim * 4 + (labels ? count : 0));
  for (const auto b : kMagic) out.push_back(static_cast<std::uint8_t>(b));
  PutLe<std::uint16_t>(out, kOddfVersion);
  PutLe<std::uint64_t>(out, count);
  PutLe<std::uint32_t>(out, static_cast<std::uint32_t>(dim));
  out.push_back(labels ? 1 : 0);
  for (std::size_t r = 0; r < count; ++r) {
    const auto& v = features[r];
    if (static_cast<std::size_t>(v.size()) != dim) {
      throw Error(ErrorCode::kDimensionMismatch, "row " + std::to_string(r) + " has dimension " +
                                                     std::to_string(v.size()) + ", expected " +
                                                     std::to_string(dim));
    }
    for (Eigen::Index j = 0; j < v.size(); ++j) {
      const auto f = static_cast<float>(v[j]);
      if (!std::isfinite(f)) {
        throw Error(ErrorCode::kNonFinite, "row " + std::to_string(r) + " column " + std::to_string(j) +
                                               " is not finite as binary32");
      }
      PutLe<std::uint32_t>(out, std::bit_cast<std::uint32_t>(f));
    }
  }
  if (labels) out.insert(out.end(), labels->begin(), labels->end());
  return out;
}

FeatureFile DecodeFeatures(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || !std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) {
    throw Error(ErrorCode::kBadMagic, "expected \"ODDF\" at byte offset 0");
  }
  if (bytes.size() < kOddfHeaderBytes) {
    throw Error(ErrorCode::kTruncatedPayload,
                "header needs " + std::to_string(kOddfHeaderBytes) + " bytes, file has " +
                    std::to_string(bytes.size()));
  }
  const auto version = GetLe<std::uint16_t>(bytes.data() + 4);
  if (version != kOddfVersion) {
    throw Error(ErrorCode::kUnsupportedVersion,
                "version " + std::to_string(version) + " at byte offset 4 (supported: 1)");
  }
  const auto count = GetLe<std::uint64_t>(bytes.data() + 6);
  const auto dim = GetLe<std::uint32_t>(bytes.data() + 14);
  const std::uint8_t flag = bytes[18];
  if (flag > 1) {
    throw Error(ErrorCode::kParseError, "label flag " + std::to_string(flag) + " at byte offset 18");
  }
  if (count > 0 && dim == 0) {
    throw Error(ErrorCode::kParseError, "zero dimension with non-zero count at byte offset 14");
  }

  // Guard the size arithmetic before trusting it.
  const std::size_t available = bytes.size() - kOddfHeaderBytes;
  const long double want = static_cast<long double>(count) * dim * 4 + (flag ? count : 0);
  if (want > static_cast<long double>(available)) {
    throw Error(ErrorCode::kTruncatedPayload,
                "expected " + std::to_string(static_cast<unsigned long long>(want) + kOddfHeaderBytes) +
                    " bytes (" + std::to_string(static_cast<unsigned long long>(want)) +
                    " after offset " + std::to_string(kOddfHeaderBytes) + "), found " +
                    std::to_string(bytes.size()));
  }
  const std::size_t floats_bytes = static_cast<std::size_t>(count) * dim * 4;
  const std::size_t expected = floats_bytes + (flag ? static_cast<std::size_t>(count) : 0);
  if (expected != available) {
    throw Error(ErrorCode::kParseError, "expected " + std::to_string(expected) +
                                            " payload bytes, found " + std::to_string(available) +
                                            " (trailing data at offset " +
                                            std::to_string(kOddfHeaderBytes + expected) + ")");
  }

  FeatureFile file;
  file.features.reserve(static_cast<std::size_t>(count));
  const std::uint8_t* p = bytes.data() + kOddfHeaderBytes;
  for (std::uint64_t r = 0; r < count; ++r) {
    FeatureVector v(static_cast<Eigen::Index>(dim));
    for (std::uint32_t j = 0; j < dim; ++j, p += 4) {
      v[j] = static_cast<double>(std::bit_cast<float>(GetLe<std::uint32_t>(p)));
    }
    if (!v.allFinite()) {
      throw Error(ErrorCode::kNonFinite, "row " + std::to_string(r) + " holds a NaN or Inf");
    }
    file.features.push_back(std::move(v));
  }
  if (flag) {
    file.labels.emplace(p, p + count);
    CheckLabels(*file.labels, kOddfHeaderBytes + floats_bytes);
  }
  return file;
}

FeatureFile ReadFeatures(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::kIoFailure, "read failed on " + path.string());
  return DecodeFeatures(bytes);
}

void WriteFeatures(const std::filesystem::path& path, const FeatureVectors& features,
                   const std::optional<std::vector<std::uint8_t>>& labels) {
  const auto bytes = EncodeFeatures(features, labels);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIoFailure, "write failed on " + path.string());
}

FeatureFile ParseCsv(std::istream& in) {
  FeatureFile file;
  std::vector<std::uint8_t> labels;
  bool any_label = false;
  std::string line;
  std::size_t line_no = 0;
  std::vector<double> row;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = Trim(line);
    if (text.empty()) continue;
    row.clear();
    std::uint8_t label = kLabelNone;
    std::size_t start = 0;
    while (start <= text.size()) {
      const std::size_t comma = text.find(',', start);
      const std::string_view cell =
          Trim(text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
      const bool last = comma == std::string_view::npos;
      if (last && (cell == "id" || cell == "ood")) {
        label = cell == "id" ? kLabelId : kLabelOod;
        any_label = true;
      } else {
        double value = 0.0;
        const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
        if (ec != std::errc() || ptr != cell.data() + cell.size()) {
          throw Error(ErrorCode::kParseError,
                      "line " + std::to_string(line_no) + ": cannot parse '" + std::string(cell) + "'");
        }
        row.push_back(value);
      }
      if (last) break;
      start = comma + 1;
    }
    if (row.empty()) {
      throw Error(ErrorCode::kParseError, "line " + std::to_string(line_no) + " has no values");
    }
    if (!file.features.empty() && static_cast<Eigen::Index>(row.size()) != file.features.front().size()) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "line " + std::to_string(line_no) + " has " + std::to_string(row.size()) +
                      " values, expected " + std::to_string(file.features.front().size()));
    }
    file.features.push_back(MakeFeature(row));
    labels.push_back(label);
  }
  if (in.bad()) throw Error(ErrorCode::kIoFailure, "CSV read failed");
  if (any_label) file.labels = std::move(labels);
  return file;
}

FeatureFile ReadCsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open " + path.string());
  return ParseCsv(in);
}

void WriteCsv(std::ostream& out, const FeatureFile& file) {
  char buf[64];
  for (std::size_t r = 0; r < file.features.size(); ++r) {
    const auto& v = file.features[r];
    for (Eigen::Index j = 0; j < v.size(); ++j) {
      if (j) out << ',';
      // Shortest double text of the binary32 value: parses back to exactly
      // that double, so narrowing to binary32 again is lossless.
      const double stored = static_cast<double>(static_cast<float>(v[j]));
      const auto res = std::to_chars(buf, buf + sizeof(buf), stored);
      out.write(buf, res.ptr - buf);
    }
    if (file.labels) {
      const auto b = (*file.labels)[r];
      if (b == kLabelId) out << ",id";
      if (b == kLabelOod) out << ",ood";
    }
    out << '\n';
  }
}

DatasetRef ToDataset(std::string name, const FeatureFile& file) {
  DatasetRef d{std::move(name), file.features, {}};
  d.truth.reserve(file.features.size());
  for (std::size_t i = 0; i < file.features.size(); ++i) {
    const bool id = file.labels && (*file.labels)[i] == kLabelId;
    d.truth.push_back(id ? Truth::kId : Truth::kOod);
  }
  return d;
}

FeatureFile LoadAny(const std::filesystem::path& path) {
  if (path.extension() == ".csv") return ReadCsv(path);
  return ReadFeatures(path);
}

}  // namespace oddstream::io
