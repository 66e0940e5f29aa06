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

#ifndef PROTOFED_OBJECTIVE_H_
#define PROTOFED_OBJECTIVE_H_

#include <span>
#include <string_view>

#include "protofed/datagen.h"
#include "protofed/model.h"
#include "protofed/prototype.h"

namespace protofed {

enum class Measure { kCosine, kL1, kL2 };

// Which prototype regularizer L_R denotes. kContrastive is the softmax over
// similarities to all global prototypes; kPrototypeL2 is the squared
// distance to the same-class global prototype.
enum class Regularizer { kContrastive, kPrototypeL2 };

Measure parse_measure(std::string_view name);
std::string_view measure_name(Measure m);

struct LossConfig {
  double lambda = 1.0;
  double temperature = 1.0;
  Measure measure = Measure::kCosine;
  Regularizer regularizer = Regularizer::kContrastive;

  void validate() const;
};

struct LossBreakdown {
  double supervised = 0.0;   // L_S
  double regularizer = 0.0;  // L_R
  double total = 0.0;        // L_S + lambda * L_R
};

// -log softmax(scores)[target], via max subtraction.
double log_softmax_loss(const Vec64& scores, Eigen::Index target);

double cross_entropy(const Vec64& logits, int label);

// Cosine similarity, or the negated L1 / L2 distance. Larger means closer.
double similarity(const Vec64& a, const Vec64& b, Measure measure);

// Softmax cross-entropy of the similarity scores s_j / t against class y,
// over the classes present in `globals`.
double contrastive_loss(const Vec64& z, int label, const PrototypeSet& globals,
                        const LossConfig& config);

struct BatchResult {
  LossBreakdown loss;
  HeadWeights grads;
};

// Mean loss over the batch and its gradient with respect to the head.
// Projections are norm-clipped to `clip_bound` before both loss terms.
// The regularizer is skipped while `globals` is uninitialized or lambda is 0.
BatchResult batch_loss_and_grads(const HeadWeights& head,
                                 const Eigen::Ref<const Mat64>& features,
                                 std::span<const int> labels,
                                 const PrototypeSet& globals,
                                 const LossConfig& config, double clip_bound);

BatchResult batch_loss_and_grads(const HeadWeights& head,
                                 std::span<const Sample> batch,
                                 const PrototypeSet& globals,
                                 const LossConfig& config,
                                 const BackboneSpec& backbone, double clip_bound);

}  // namespace protofed

#endif  // PROTOFED_OBJECTIVE_H_
