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

#ifndef PROTOFED_PROTOTYPE_H_
#define PROTOFED_PROTOTYPE_H_

#include <cstdint>
#include <map>
#include <span>

#include "protofed/datagen.h"
#include "protofed/model.h"

namespace protofed {

struct ClassPrototype {
  Vec64 vector;
  std::int64_t count = 0;
  // Set on global prototypes echoed back without fresh contributions.
  bool echoed = false;
};

// Per-class embedding means keyed by class id. Iteration is in class order.
struct PrototypeSet {
  std::map<int, ClassPrototype> entries;
  // False for the zero-valued globals broadcast before the first aggregation.
  bool initialized = true;

  bool contains(int cls) const { return entries.count(cls) != 0; }
  const ClassPrototype& at(int cls) const;
  Eigen::Index dim() const;
  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }

  // Zero vectors with count 0 for classes [0, classes), flagged uninitialized.
  static PrototypeSet uninitialized(int classes, Eigen::Index dim);
};

// Mean of clipped projections per class over the training split.
PrototypeSet local_prototypes(const ClientDataset& data, const HeadWeights& head,
                              const BackboneSpec& backbone, double clip_bound);

// Same, from precomputed backbone features (columns) and labels.
PrototypeSet local_prototypes(const HeadWeights& head,
                              const Eigen::Ref<const Mat64>& features,
                              std::span<const int> labels, double clip_bound);

// Count-weighted convex combination per class. Output counts are N_j.
PrototypeSet aggregate_weighted(std::span<const PrototypeSet> locals);

// Arithmetic mean over all m clients per class; every local must cover
// every class.
PrototypeSet aggregate_uniform(std::span<const PrototypeSet> locals, int clients);

}  // namespace protofed

#endif  // PROTOFED_PROTOTYPE_H_
