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

#ifndef PROTOFED_DATAGEN_H_
#define PROTOFED_DATAGEN_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "protofed/mathcore.h"

namespace protofed {

struct Sample {
  Vec64 x;
  int y = 0;
  int condition = 0;
};

struct ClientDataset {
  int client_id = 0;
  std::vector<Sample> train;
  std::vector<Sample> test;
  // Per-class training counts |D_{i,j}|, indexed by class id.
  std::vector<int> class_counts;
};

// Synthetic Non-IID generator parameters. Label shift comes from the
// Dirichlet partition, feature shift from one "condition" per client.
struct DataConfig {
  int clients = 5;
  int classes = 6;
  int conditions = 5;
  int raw_dim = 64;
  int samples_per_client = 200;
  double dirichlet_alpha = 0.5;
  double class_separation = 4.0;
  double condition_shift = 1.0;
  double noise_std = 1.0;
  std::uint64_t seed = 0;
  // Every client must hold at least one training sample of every class.
  // Needed by the encrypted (count-free) aggregation path.
  bool require_all_classes = false;

  void validate() const;
};

// Rows are clients, columns are classes. Column j apportions
// class_totals[j] by a Dirichlet(alpha * 1_m) draw with largest-remainder
// rounding, so every column sum equals class_totals[j] exactly.
Eigen::MatrixXi partition_labels(RngStream& rng, double alpha, int clients,
                                 std::span<const int> class_totals);

// Largest-remainder apportionment of `total` by probability vector `weights`.
std::vector<int> apportion(int total, const Vec64& weights);

std::vector<ClientDataset> generate(const DataConfig& config);

// Recomputes class_counts from the training split (classes sized to
// `classes`, or to max label + 1 when classes <= 0).
void recount(ClientDataset& dataset, int classes = 0);

// Splits per-client samples into train/test: within each class, in input
// order, the last floor(count / 5) samples become test samples.
ClientDataset split_stratified(int client_id, std::vector<Sample> samples,
                               int classes);

// CSV layout: header `client_id,condition,y,x0,...,x{d-1}`; one sample per
// row. Training rows of a client precede its test rows.
std::vector<ClientDataset> load_features_csv(const std::filesystem::path& path);
void write_features_csv(const std::filesystem::path& path,
                        std::span<const ClientDataset> datasets);

}  // namespace protofed

#endif  // PROTOFED_DATAGEN_H_
