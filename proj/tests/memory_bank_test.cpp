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

#include "oddstream/memory_bank.hpp"

#include <functional>
#include <random>

#include "gtest/gtest.h"
#include "oracles.hpp"

namespace oddstream {
namespace {

FeatureVector V(std::initializer_list<double> xs) { return MakeFeature(std::vector<double>(xs)); }

FeatureVector FromRow(const oracle::Row& r) { return MakeFeature(r); }

ErrorCode CodeOf(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kParseError;
}

TEST(MemoryBank, InitFromFeatures) {
  const MemoryBankd bank = MemoryBankd::FromFeatures({V({1, 2}), V({3, 4}), V({5, 6})}, true);
  EXPECT_EQ(bank.size(), 3u);
  for (std::size_t i = 0; i < bank.size(); ++i) {
    EXPECT_EQ(bank.scale(i), 1.0);
    EXPECT_EQ(bank.provenance(i), Provenance::kIdTrain);
    EXPECT_NEAR(bank.entry(i).vector.norm(), 1.0, 1e-12);
    EXPECT_EQ(bank.entry(i).insert_seq, i);
  }
}

TEST(MemoryBank, InitVerbatimWithoutNormalization) {
  const MemoryBankd bank = MemoryBankd::FromFeatures({V({1, 1}), V({0, 0})}, false);
  EXPECT_EQ(FeatureVector(bank.entry(0).vector), V({1, 1}));
  EXPECT_EQ(FeatureVector(bank.entry(1).vector), V({0, 0}));
}

TEST(MemoryBank, InitErrors) {
  EXPECT_EQ(CodeOf([] { MemoryBankd::FromFeatures({}, false); }), ErrorCode::kEmptyInput);
  EXPECT_EQ(CodeOf([] { MemoryBankd::FromFeatures({V({1, 1}), V({1, 2, 3})}, false); }),
            ErrorCode::kDimensionMismatch);
  EXPECT_EQ(CodeOf([] { MemoryBankd::FromFeatures({V({1, 1}), V({0, 0})}, true); }),
            ErrorCode::kZeroVector);
}

TEST(MemoryBank, WorkedExampleNearestNeighbor) {
  const MemoryBankd bank = MemoryBankd::FromFeatures({V({1, 1}), V({0, 0})}, false);
  const auto nn = bank.Query(V({2, 2}), 1);
  ASSERT_EQ(nn.size(), 1u);
  EXPECT_EQ(nn[0].index, 0u);
  EXPECT_NEAR(nn[0].dist, 1.41421356, 1e-8);
}

TEST(MemoryBank, KClampedToBankSize) {
  const MemoryBankd bank = MemoryBankd::FromFeatures({V({1, 1}), V({0, 0})}, false);
  EXPECT_EQ(bank.Query(V({2, 2}), 5).size(), 2u);
}

TEST(MemoryBank, EquidistantTieGoesToEarlierInsertion) {
  // q = (0, 0) sits on the bisector of (1, 0) and (0, 1); both at distance 1.
  MemoryBankd bank(2, false);
  bank.Insert(V({5, 5}), 1.0, Provenance::kIdTrain);
  bank.Insert(V({0, 1}), 1.0, Provenance::kIdTrain);
  bank.Insert(V({1, 0}), 1.0, Provenance::kIdTrain);
  const auto nn = bank.Query(V({0, 0}), 2);
  ASSERT_EQ(nn.size(), 2u);
  EXPECT_EQ(nn[0].dist, nn[1].dist);
  EXPECT_EQ(nn[0].index, 1u);
  EXPECT_EQ(nn[1].index, 2u);

  std::vector<oracle::Row> rows{{5, 5}, {0, 1}, {1, 0}};
  const auto hits = oracle::BruteForceKnn(rows, {0, 0}, 2);
  EXPECT_EQ(hits[0].index, nn[0].index);
  EXPECT_EQ(hits[1].index, nn[1].index);
}

TEST(MemoryBank, QueryErrors) {
  MemoryBankd empty(2, false);
  EXPECT_EQ(CodeOf([&] { empty.Query(V({0, 0}), 1); }), ErrorCode::kEmptyBank);
  const MemoryBankd bank = MemoryBankd::FromFeatures({V({1, 1})}, false);
  EXPECT_EQ(CodeOf([&] { bank.Query(V({0, 0, 0}), 1); }), ErrorCode::kDimensionMismatch);
}

TEST(MemoryBank, InsertOodEntryBecomesNearest) {
  MemoryBankd bank = MemoryBankd::FromFeatures({V({1, 1}), V({0, 0})}, false);
  const double kappa = 5.0;
  bank.Insert(V({2.5, 2.5}), kappa, Provenance::kAugmentedOod);
  EXPECT_EQ(bank.size(), 3u);
  const auto nn = bank.Query(V({2, 2}), 1);
  EXPECT_EQ(nn[0].index, 2u);
  EXPECT_NEAR(nn[0].dist, 0.70711, 1e-5);
  EXPECT_EQ(nn[0].scale, kappa);
  EXPECT_EQ(nn[0].provenance, Provenance::kAugmentedOod);
}

TEST(MemoryBank, InsertErrors) {
  MemoryBankd bank = MemoryBankd::FromFeatures({V({1, 1})}, false);
  EXPECT_EQ(CodeOf([&] { bank.Insert(V({0, 0}), 0.5, Provenance::kAugmentedOod); }),
            ErrorCode::kInvalidScale);
  EXPECT_EQ(CodeOf([&] { bank.Insert(V({0, 0}), 2.0, Provenance::kAugmentedId); }),
            ErrorCode::kInvalidScale);
  EXPECT_EQ(CodeOf([&] { bank.Insert(V({0, 0, 1}), 1.0, Provenance::kAugmentedId); }),
            ErrorCode::kDimensionMismatch);
  EXPECT_EQ(bank.size(), 1u);
}

TEST(MemoryBank, InsertThenQueryVisibility) {
  std::mt19937_64 gen(3);
  for (bool normalize : {false, true}) {
    MemoryBankd bank = MemoryBankd::FromFeatures(
        [&] {
          FeatureVectors fs;
          for (const auto& r : oracle::RandomRows(gen, 300, 6)) fs.push_back(FromRow(r));
          return fs;
        }(),
        normalize);
    for (const auto& r : oracle::RandomRows(gen, 50, 6)) {
      const FeatureVector z = bank.Prepare(FromRow(r));
      bank.Insert(z, 3.0, Provenance::kAugmentedOod);
      const auto nn = bank.Query(z, 1);
      EXPECT_LE(nn[0].dist, 1e-9);
      EXPECT_EQ(nn[0].index, bank.size() - 1);
    }
  }
}

TEST(MemoryBank, DuplicatesStoredAndTieBrokenByAge) {
  MemoryBankd bank(2, false);
  bank.Insert(V({1, 1}), 1.0, Provenance::kIdTrain);
  bank.Insert(V({1, 1}), 4.0, Provenance::kAugmentedOod);
  const auto nn = bank.Query(V({1, 1}), 1);
  EXPECT_EQ(bank.size(), 2u);
  EXPECT_EQ(nn[0].index, 0u);
}

TEST(MemoryBank, NeighborSelectionIsScaleBlind) {
  std::mt19937_64 gen(5);
  FeatureVectors fs;
  for (const auto& r : oracle::RandomRows(gen, 400, 4)) fs.push_back(FromRow(r));
  MemoryBankd bank(4, false);
  for (const auto& f : fs) bank.Insert(f, 1.0, Provenance::kAugmentedOod);
  const auto queries = oracle::RandomRows(gen, 20, 4);
  std::vector<std::vector<std::size_t>> before;
  for (const auto& q : queries) {
    std::vector<std::size_t> idx;
    for (const auto& n : bank.Query(FromRow(q), 10)) idx.push_back(n.index);
    before.push_back(idx);
  }
  std::uniform_real_distribution<double> scale(1.0, 100.0);
  for (std::size_t i = 0; i < bank.size(); ++i) bank.SetScale(i, scale(gen));
  for (std::size_t j = 0; j < queries.size(); ++j) {
    std::vector<std::size_t> idx;
    for (const auto& n : bank.Query(FromRow(queries[j]), 10)) idx.push_back(n.index);
    EXPECT_EQ(idx, before[j]);
  }
}

TEST(MemoryBank, MatchesBruteForceScan) {
  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t n = 1 + gen() % 600;
    const std::size_t d = 1 + gen() % 16;
    auto rows = oracle::RandomRows(gen, n, d);
    // A few exact duplicates force genuine distance ties.
    for (std::size_t i = 0; i < n / 10; ++i) rows.push_back(rows[gen() % rows.size()]);
    MemoryBankd bank(static_cast<Eigen::Index>(d), false);
    for (const auto& r : rows) bank.Insert(FromRow(r), 1.0, Provenance::kIdTrain);
    for (int qi = 0; qi < 5; ++qi) {
      const auto q = oracle::RandomRows(gen, 1, d).front();
      const std::size_t k = 1 + gen() % 60;
      const auto got = bank.Query(FromRow(q), k);
      const auto want = oracle::BruteForceKnn(rows, q, k);
      ASSERT_EQ(got.size(), want.size());
      for (std::size_t i = 0; i < got.size(); ++i) {
        EXPECT_EQ(got[i].index, want[i].index);
        EXPECT_NEAR(got[i].dist, want[i].dist, 1e-9);
      }
    }
  }
}

TEST(MemoryBank, ProvenanceAccounting) {
  MemoryBankd bank = MemoryBankd::FromFeatures({V({1, 0}), V({0, 1})}, true);
  bank.Insert(V({1, 1}), 5.0, Provenance::kAugmentedOod);
  bank.Insert(V({-1, 1}), 1.0, Provenance::kAugmentedId);
  EXPECT_EQ(bank.Count(Provenance::kIdTrain) + bank.Count(Provenance::kAugmentedId) +
                bank.Count(Provenance::kAugmentedOod),
            bank.size());
}

}  // namespace
}  // namespace oddstream
