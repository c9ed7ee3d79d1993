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

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "gtest/gtest.h"
#include "oddstream/config.hpp"

namespace oddstream::io {
namespace {

namespace fs = std::filesystem;

FeatureVector V(std::initializer_list<double> xs) { return MakeFeature(std::vector<double>(xs)); }

ErrorCode DecodeError(const std::vector<std::uint8_t>& bytes, std::string* message = nullptr) {
  try {
    DecodeFeatures(bytes);
  } catch (const Error& e) {
    if (message) *message = e.what();
    return e.code();
  }
  ADD_FAILURE() << "decode succeeded";
  return ErrorCode::kIoFailure;
}

FeatureVectors RandomFloats(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<float> normal(0.0f, 3.0f);
  FeatureVectors out;
  for (std::size_t i = 0; i < n; ++i) {
    FeatureVector v(static_cast<Eigen::Index>(d));
    for (auto& x : v) x = static_cast<double>(normal(gen));
    out.push_back(v);
  }
  return out;
}

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("oddstream_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

TEST(Oddf, HeaderLayout) {
  const auto bytes = EncodeFeatures({V({1, 0, 0}), V({0, 1, 0})});
  ASSERT_EQ(bytes.size(), kOddfHeaderBytes + 2 * 3 * 4);
  const std::vector<std::uint8_t> header(bytes.begin(), bytes.begin() + 19);
  const std::vector<std::uint8_t> want{0x4F, 0x44, 0x44, 0x46, 1, 0, 2, 0, 0, 0, 0, 0, 0, 0, 3, 0, 0, 0, 0};
  EXPECT_EQ(header, want);
  // 1.0f little-endian.
  EXPECT_EQ(bytes[19], 0x00);
  EXPECT_EQ(bytes[22], 0x3F);
  const auto file = DecodeFeatures(bytes);
  ASSERT_EQ(file.features.size(), 2u);
  EXPECT_EQ(file.features[0], V({1, 0, 0}));
  EXPECT_EQ(file.features[1], V({0, 1, 0}));
  EXPECT_FALSE(file.labels);
}

TEST(Oddf, EmptyListIsValid) {
  const auto bytes = EncodeFeatures({});
  EXPECT_EQ(bytes.size(), kOddfHeaderBytes);
  EXPECT_TRUE(DecodeFeatures(bytes).features.empty());
}

TEST(Oddf, SizeIsHeaderPlusPayload) {
  const auto bytes = EncodeFeatures(RandomFloats(1000, 128, 1));
  EXPECT_EQ(bytes.size(), 19u + 1000u * 128u * 4u);
}

TEST(Oddf, LabelsRoundTrip) {
  const auto feats = RandomFloats(5, 2, 2);
  const std::vector<std::uint8_t> labels{kLabelId, kLabelOod, kLabelNone, kLabelOod, kLabelId};
  const auto bytes = EncodeFeatures(feats, labels);
  EXPECT_EQ(bytes.size(), 19u + 5u * 2u * 4u + 5u);
  EXPECT_EQ(bytes[18], 1);
  const auto file = DecodeFeatures(bytes);
  EXPECT_EQ(*file.labels, labels);
  EXPECT_EQ(file.features, feats);
}

TEST(Oddf, ByteIdenticalReencode) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto bytes = EncodeFeatures(RandomFloats(1 + seed * 7, 1 + seed % 9, seed));
    EXPECT_EQ(EncodeFeatures(DecodeFeatures(bytes).features), bytes);
  }
}

TEST(Oddf, TruncatedPayload) {
  auto bytes = EncodeFeatures({V({1, 2, 3}), V({4, 5, 6})});
  bytes.resize(bytes.size() - 5);
  std::string msg;
  EXPECT_EQ(DecodeError(bytes, &msg), ErrorCode::kTruncatedPayload);
  EXPECT_NE(msg.find("expected 43 bytes"), std::string::npos) << msg;
  EXPECT_NE(msg.find("found 38"), std::string::npos) << msg;
  EXPECT_EQ(DecodeError({0x4F, 0x44, 0x44, 0x46, 1, 0}), ErrorCode::kTruncatedPayload);
}

TEST(Oddf, TruncatedLabels) {
  auto bytes = EncodeFeatures({V({1}), V({2})}, std::vector<std::uint8_t>{0, 1});
  bytes.pop_back();
  EXPECT_EQ(DecodeError(bytes), ErrorCode::kTruncatedPayload);
}

TEST(Oddf, BadMagicAndVersion) {
  auto bytes = EncodeFeatures({V({1, 2})});
  auto bad = bytes;
  bad[0] = 'X';
  std::string msg;
  EXPECT_EQ(DecodeError(bad, &msg), ErrorCode::kBadMagic);
  EXPECT_NE(msg.find("offset 0"), std::string::npos) << msg;
  bad = bytes;
  bad[4] = 2;
  EXPECT_EQ(DecodeError(bad, &msg), ErrorCode::kUnsupportedVersion);
  EXPECT_NE(msg.find("offset 4"), std::string::npos) << msg;
}

TEST(Oddf, TrailingBytesAndBadLabels) {
  auto bytes = EncodeFeatures({V({1, 2})});
  bytes.push_back(0);
  EXPECT_EQ(DecodeError(bytes), ErrorCode::kParseError);
  auto labeled = EncodeFeatures({V({1, 2})}, std::vector<std::uint8_t>{kLabelOod});
  labeled.back() = 7;
  EXPECT_EQ(DecodeError(labeled), ErrorCode::kParseError);
}

TEST(Oddf, EncodeErrors) {
  EXPECT_THROW(EncodeFeatures({V({1, 2}), V({1, 2, 3})}), Error);
  EXPECT_THROW(EncodeFeatures({V({1e300})}), Error);
  EXPECT_THROW(EncodeFeatures({V({1})}, std::vector<std::uint8_t>{0, 0}), Error);
}

TEST_F(TempDir, FileRoundTripIsBitExact) {
  const auto feats = RandomFloats(300, 17, 5);
  const fs::path p = dir_ / "a.oddf";
  WriteFeatures(p, feats);
  const auto back = ReadFeatures(p);
  EXPECT_EQ(back.features, feats);
  const fs::path q = dir_ / "b.oddf";
  WriteFeatures(q, back.features);
  std::ifstream a(p, std::ios::binary), b(q, std::ios::binary);
  const std::string sa((std::istreambuf_iterator<char>(a)), {});
  const std::string sb((std::istreambuf_iterator<char>(b)), {});
  EXPECT_EQ(sa, sb);
  EXPECT_EQ(fs::file_size(p), 19u + 300u * 17u * 4u);
}

TEST_F(TempDir, MissingFile) {
  try {
    ReadFeatures(dir_ / "nope.oddf");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIoFailure);
  }
}

TEST(Csv, ParseWithLabels) {
  std::istringstream in("1,2,3,id\n\n4.5,-6,7e-3,ood\n");
  const auto file = ParseCsv(in);
  ASSERT_EQ(file.features.size(), 2u);
  EXPECT_EQ(file.features[1], V({4.5, -6, 7e-3}));
  EXPECT_EQ(*file.labels, (std::vector<std::uint8_t>{kLabelId, kLabelOod}));
}

TEST(Csv, ParseErrors) {
  std::istringstream ragged("1,2\n1,2,3\n");
  EXPECT_THROW(ParseCsv(ragged), Error);
  std::istringstream junk("1,abc\n");
  EXPECT_THROW(ParseCsv(junk), Error);
}

TEST(Csv, RoundTripThroughOddf) {
  const auto feats = RandomFloats(200, 9, 7);
  std::vector<std::uint8_t> labels;
  for (std::size_t i = 0; i < feats.size(); ++i) labels.push_back(i % 3 ? kLabelOod : kLabelId);
  std::ostringstream out;
  WriteCsv(out, {feats, labels});
  std::istringstream in(out.str());
  const auto parsed = ParseCsv(in);
  EXPECT_EQ(parsed.features, feats);
  EXPECT_EQ(*parsed.labels, labels);
  EXPECT_EQ(EncodeFeatures(parsed.features, parsed.labels), EncodeFeatures(feats, labels));
}

TEST(Dataset, UnlabeledRowsCountAsOod) {
  const FeatureFile f{{V({1}), V({2}), V({3})}, std::vector<std::uint8_t>{kLabelId, kLabelNone, kLabelOod}};
  const auto d = ToDataset("x", f);
  EXPECT_EQ(d.truth, (std::vector<Truth>{Truth::kId, Truth::kOod, Truth::kOod}));
  const auto plain = ToDataset("y", FeatureFile{{V({1})}, std::nullopt});
  EXPECT_EQ(plain.truth, std::vector<Truth>{Truth::kOod});
}

TEST(Config, UnknownKeyRejected) {
  try {
    ParseRunConfig(Json::parse(R"({"k": 5, "kapa": 3})"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidConfig);
  }
}

TEST(Config, ResolveOverridesPreset) {
  const auto rc = ParseRunConfig(Json::parse(R"({"preset": "imagenet", "kappa": 3, "adapt": "off"})"));
  const DetectorConfig dc = ResolveDetector(rc);
  EXPECT_EQ(dc.k, 1000u);
  EXPECT_EQ(dc.kappa, 3.0);
  EXPECT_FALSE(dc.adapt);
  const auto inf = ResolveDetector(ParseRunConfig(Json::parse(R"({"gamma": "inf"})")));
  EXPECT_FALSE(inf.gamma);
}

TEST(Config, HashIsStableAndSensitive) {
  const Json a = ToJson(DetectorConfig{});
  DetectorConfig other;
  other.k = 51;
  EXPECT_EQ(ConfigHash(a), ConfigHash(ToJson(DetectorConfig{})));
  EXPECT_NE(ConfigHash(a), ConfigHash(ToJson(other)));
  EXPECT_EQ(ConfigHash(a).size(), 16u);
}

TEST(Config, DecisionLineFieldOrder) {
  DecisionRecord r{3, -0.5, Verdict::kOod, Augmentation::kAsOod, 42};
  const std::string line = DecisionLine(r, "00000000deadbeef");
  const Json j = Json::parse(line);
  std::vector<std::string> keys;
  for (const auto& [key, value] : j.items()) keys.push_back(key);
  EXPECT_EQ(keys, (std::vector<std::string>{"index", "score", "verdict", "augmentation", "bank_size_before",
                                            "config_hash"}));
  EXPECT_EQ(j["verdict"], "ood");
  EXPECT_EQ(j["augmentation"], "as-ood");
  EXPECT_EQ(line.find('\n'), std::string::npos);
}

}  // namespace
}  // namespace oddstream::io
