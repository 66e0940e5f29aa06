// Copyright 2026 The Protofed Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "protofed/datagen.h"

#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "test_support.h"

namespace protofed {
namespace {

using ::protofed::testing::ScratchDir;

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

std::string parse_error_message(const std::filesystem::path& p) {
  try {
    load_features_csv(p);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParse);
    return e.what();
  }
  ADD_FAILURE() << "expected a parse error";
  return "";
}

TEST(PartitionLabelsTest, ColumnSumsAreConserved) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RngStream rng(seed, 1);
    const double alpha = 0.05 + 0.3 * static_cast<double>(seed);
    const std::vector<int> totals{0, 1, 7, 100, 333, 1000};
    const Eigen::MatrixXi counts = partition_labels(rng, alpha, 5, totals);
    ASSERT_EQ(counts.rows(), 5);
    ASSERT_EQ(counts.cols(), 6);
    EXPECT_TRUE((counts.array() >= 0).all());
    for (int j = 0; j < 6; ++j) EXPECT_EQ(counts.col(j).sum(), totals[static_cast<std::size_t>(j)]);
  }
}

TEST(PartitionLabelsTest, LargeAlphaIsSymmetric) {
  RngStream rng(3, 1);
  const std::vector<int> totals(6, 400);
  const Eigen::MatrixXi counts = partition_labels(rng, 1e6, 4, totals);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 6; ++j) EXPECT_NEAR(counts(i, j), 100, 2);
  }
}

TEST(PartitionLabelsTest, FixedSeedIsDeterministic) {
  const std::vector<int> totals{50, 60, 70};
  RngStream a(8, 2);
  RngStream b(8, 2);
  EXPECT_EQ(partition_labels(a, 0.5, 5, totals), partition_labels(b, 0.5, 5, totals));
}

TEST(PartitionLabelsTest, RejectsBadArguments) {
  RngStream rng(0, 0);
  const std::vector<int> totals{1, 2};
  EXPECT_PROTOFED_ERROR(partition_labels(rng, 0.0, 3, totals), ErrorCode::kInvalidArgument);
  EXPECT_PROTOFED_ERROR(partition_labels(rng, 1.0, 0, totals), ErrorCode::kInvalidArgument);
  const std::vector<int> negative{1, -2};
  EXPECT_PROTOFED_ERROR(partition_labels(rng, 1.0, 3, negative), ErrorCode::kInvalidArgument);
}

TEST(ApportionTest, LargestRemainder) {
  Vec64 w(3);
  w << 0.5, 0.3, 0.2;
  EXPECT_EQ(apportion(10, w), (std::vector<int>{5, 3, 2}));
  w << 0.34, 0.33, 0.33;
  EXPECT_EQ(apportion(10, w), (std::vector<int>{4, 3, 3}));
}

TEST(GenerateTest, TotalsAndCountsAreConsistent) {
  DataConfig cfg;
  cfg.seed = 4;
  const auto datasets = generate(cfg);
  ASSERT_EQ(static_cast<int>(datasets.size()), cfg.clients);
  std::size_t total = 0;
  for (const auto& ds : datasets) {
    total += ds.train.size() + ds.test.size();
    ASSERT_EQ(static_cast<int>(ds.class_counts.size()), cfg.classes);
    const int sum = std::accumulate(ds.class_counts.begin(), ds.class_counts.end(), 0);
    EXPECT_EQ(sum, static_cast<int>(ds.train.size()));
    for (const auto& s : ds.train) {
      EXPECT_EQ(s.x.size(), cfg.raw_dim);
      EXPECT_EQ(s.condition, ds.client_id % cfg.conditions);
    }
  }
  EXPECT_EQ(total, static_cast<std::size_t>(cfg.clients * cfg.samples_per_client));
}

TEST(GenerateTest, SplitIsStratifiedEightyTwenty) {
  DataConfig cfg;
  cfg.seed = 5;
  for (const auto& ds : generate(cfg)) {
    std::vector<int> test_counts(static_cast<std::size_t>(cfg.classes), 0);
    for (const auto& s : ds.test) ++test_counts[static_cast<std::size_t>(s.y)];
    for (int j = 0; j < cfg.classes; ++j) {
      const int train = ds.class_counts[static_cast<std::size_t>(j)];
      const int all = train + test_counts[static_cast<std::size_t>(j)];
      EXPECT_EQ(test_counts[static_cast<std::size_t>(j)], all / 5);
    }
  }
}

TEST(GenerateTest, SameSeedIsIdentical) {
  DataConfig cfg;
  cfg.seed = 9;
  const auto a = generate(cfg);
  const auto b = generate(cfg);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_EQ(a[i].train.size(), b[i].train.size());
    for (std::size_t n = 0; n < a[i].train.size(); ++n) {
      EXPECT_EQ(a[i].train[n].x, b[i].train[n].x);
      EXPECT_EQ(a[i].train[n].y, b[i].train[n].y);
    }
  }
}

TEST(GenerateTest, RequireAllClassesCoversEveryClass) {
  DataConfig cfg;
  cfg.seed = 2;
  cfg.require_all_classes = true;
  for (const auto& ds : generate(cfg)) {
    for (int c : ds.class_counts) EXPECT_GE(c, 1);
  }
}

Vec64 class_mean(const ClientDataset& ds, int cls) {
  Vec64 sum;
  int n = 0;
  for (const auto* split : {&ds.train, &ds.test}) {
    for (const auto& s : *split) {
      if (s.y != cls) continue;
      sum = n == 0 ? s.x : Vec64(sum + s.x);
      ++n;
    }
  }
  return sum / n;
}

TEST(GenerateTest, NoShiftAndLargeAlphaGivesMatchingClassMeans) {
  DataConfig cfg;
  cfg.seed = 6;
  cfg.condition_shift = 0.0;
  cfg.dirichlet_alpha = 1e6;
  cfg.samples_per_client = 600;
  const auto datasets = generate(cfg);
  // About 100 samples per class and client: the mean of the difference of
  // two such means has per-coordinate std sqrt(2/100), so its norm is near
  // sqrt(64 * 0.02) = 1.13. A condition shift would add a fixed offset.
  for (int j = 0; j < cfg.classes; ++j) {
    const double gap = l2_distance(class_mean(datasets[0], j), class_mean(datasets[1], j));
    EXPECT_LT(gap, 1.8) << "class " << j;
  }
}

TEST(GenerateTest, ConditionShiftSeparatesClientMeans) {
  DataConfig cfg;
  cfg.seed = 6;
  cfg.condition_shift = 2.0;
  cfg.dirichlet_alpha = 1e6;
  cfg.samples_per_client = 600;
  const auto datasets = generate(cfg);
  ASSERT_NE(datasets[0].train.front().condition, datasets[1].train.front().condition);
  for (int j = 0; j < cfg.classes; ++j) {
    EXPECT_GT(l2_distance(class_mean(datasets[0], j), class_mean(datasets[1], j)), 1.0)
        << "class " << j;
  }
}

TEST(GenerateTest, InvalidConfigIsRejected) {
  DataConfig cfg;
  cfg.clients = 0;
  EXPECT_PROTOFED_ERROR(generate(cfg), ErrorCode::kInvalidConfig);
  cfg = DataConfig{};
  cfg.dirichlet_alpha = -1.0;
  EXPECT_PROTOFED_ERROR(generate(cfg), ErrorCode::kInvalidConfig);
}

TEST(FeaturesCsvTest, EmptyFileIsAnError) {
  ScratchDir dir;
  const auto p = dir.path() / "empty.csv";
  write_text(p, "");
  EXPECT_PROTOFED_ERROR(load_features_csv(p), ErrorCode::kParse);
  write_text(p, "client_id,condition,y,x0,x1\n");
  EXPECT_PROTOFED_ERROR(load_features_csv(p), ErrorCode::kParse);
}

TEST(FeaturesCsvTest, MissingFileIsIoError) {
  ScratchDir dir;
  EXPECT_PROTOFED_ERROR(load_features_csv(dir.path() / "absent.csv"), ErrorCode::kIo);
}

TEST(FeaturesCsvTest, ThreeRowFixture) {
  ScratchDir dir;
  const auto p = dir.path() / "fixture.csv";
  write_text(p,
             "client_id,condition,y,x0,x1\n"
             "0,2,0,1.5,-2\n"
             "0,2,1,0.25,3e2\n"
             "1,4,1,-0.5,0\n");
  const auto ds = load_features_csv(p);
  ASSERT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds[0].client_id, 0);
  ASSERT_EQ(ds[0].train.size(), 2u);
  EXPECT_EQ(ds[0].train[0].condition, 2);
  EXPECT_EQ(ds[0].train[0].y, 0);
  EXPECT_EQ(ds[0].train[0].x, (Vec64(2) << 1.5, -2.0).finished());
  EXPECT_EQ(ds[0].train[1].y, 1);
  EXPECT_EQ(ds[0].train[1].x, (Vec64(2) << 0.25, 300.0).finished());
  EXPECT_EQ(ds[1].client_id, 1);
  ASSERT_EQ(ds[1].train.size(), 1u);
  EXPECT_EQ(ds[1].train[0].condition, 4);
  EXPECT_EQ(ds[1].train[0].x, (Vec64(2) << -0.5, 0.0).finished());
  EXPECT_EQ(ds[0].class_counts, (std::vector<int>{1, 1}));
  EXPECT_EQ(ds[1].class_counts, (std::vector<int>{0, 1}));
}

TEST(FeaturesCsvTest, ParseErrorsCarryLineNumbers) {
  ScratchDir dir;
  const auto p = dir.path() / "bad.csv";
  const std::string header = "client_id,condition,y,x0,x1\n";

  write_text(p, header + "0,0,0,1,2\n0,0,0,1\n");
  EXPECT_NE(parse_error_message(p).find("line 3"), std::string::npos);

  write_text(p, header + "0,0,0,1,abc\n");
  EXPECT_NE(parse_error_message(p).find("line 2"), std::string::npos);

  write_text(p, header + "0,0,0,1,2\n\n-1,0,0,1,2\n");
  const std::string msg = parse_error_message(p);
  EXPECT_NE(msg.find("line 4"), std::string::npos);
  EXPECT_NE(msg.find("client id"), std::string::npos);

  write_text(p, "id,condition,y,x0\n0,0,0,1\n");
  EXPECT_NE(parse_error_message(p).find("line 1"), std::string::npos);
}

TEST(FeaturesCsvTest, WriteThenReadRoundtrip) {
  ScratchDir dir;
  DataConfig cfg;
  cfg.seed = 12;
  cfg.samples_per_client = 80;
  const auto original = generate(cfg);
  const auto p = dir.path() / "data.csv";
  write_features_csv(p, original);
  const auto loaded = load_features_csv(p);
  ASSERT_EQ(loaded.size(), original.size());
  for (std::size_t i = 0; i < original.size(); ++i) {
    EXPECT_EQ(loaded[i].client_id, original[i].client_id);
    EXPECT_EQ(loaded[i].class_counts, original[i].class_counts);
    ASSERT_EQ(loaded[i].train.size(), original[i].train.size());
    ASSERT_EQ(loaded[i].test.size(), original[i].test.size());
    for (std::size_t n = 0; n < original[i].train.size(); ++n) {
      EXPECT_EQ(loaded[i].train[n].y, original[i].train[n].y);
      EXPECT_LE((loaded[i].train[n].x - original[i].train[n].x).cwiseAbs().maxCoeff(), 1e-12);
    }
    for (std::size_t n = 0; n < original[i].test.size(); ++n) {
      EXPECT_LE((loaded[i].test[n].x - original[i].test[n].x).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

}  // namespace
}  // namespace protofed
