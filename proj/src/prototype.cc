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

#include "protofed/prototype.h"

#include <set>
#include <string>

namespace protofed {

const ClassPrototype& PrototypeSet::at(int cls) const {
  auto it = entries.find(cls);
  if (it == entries.end()) {
    throw Error(ErrorCode::kMissingClass,
                "no prototype for class " + std::to_string(cls));
  }
  return it->second;
}

Eigen::Index PrototypeSet::dim() const {
  return entries.empty() ? 0 : entries.begin()->second.vector.size();
}

PrototypeSet PrototypeSet::uninitialized(int classes, Eigen::Index dim) {
  PrototypeSet set;
  set.initialized = false;
  for (int j = 0; j < classes; ++j) {
    set.entries[j] = ClassPrototype{Vec64::Zero(dim), 0, false};
  }
  return set;
}

PrototypeSet local_prototypes(const HeadWeights& head,
                              const Eigen::Ref<const Mat64>& features,
                              std::span<const int> labels, double clip_bound) {
  if (static_cast<std::size_t>(features.cols()) != labels.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "feature/label count mismatch");
  }
  const Mat64 z = project_batch(head, features).output;
  PrototypeSet out;
  for (std::size_t n = 0; n < labels.size(); ++n) {
    const Vec64 clipped = clip_norm(z.col(static_cast<Eigen::Index>(n)), clip_bound);
    auto [it, fresh] = out.entries.try_emplace(labels[n]);
    if (fresh) {
      it->second.vector = clipped;
    } else {
      it->second.vector += clipped;
    }
    ++it->second.count;
  }
  for (auto& [cls, proto] : out.entries) {
    proto.vector /= static_cast<double>(proto.count);
  }
  return out;
}

PrototypeSet local_prototypes(const ClientDataset& data, const HeadWeights& head,
                              const BackboneSpec& backbone, double clip_bound) {
  if (data.train.empty()) return {};
  Mat64 raw(data.train.front().x.size(), static_cast<Eigen::Index>(data.train.size()));
  std::vector<int> labels;
  labels.reserve(data.train.size());
  for (std::size_t n = 0; n < data.train.size(); ++n) {
    raw.col(static_cast<Eigen::Index>(n)) = data.train[n].x;
    labels.push_back(data.train[n].y);
  }
  return local_prototypes(head, backbone.forward_batch(raw), labels, clip_bound);
}

PrototypeSet aggregate_weighted(std::span<const PrototypeSet> locals) {
  if (locals.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no local prototype sets");
  }
  std::map<int, std::int64_t> totals;
  for (const auto& local : locals) {
    for (const auto& [cls, proto] : local.entries) {
      if (proto.count < 0) {
        throw Error(ErrorCode::kInvalidArgument, "negative prototype count");
      }
      totals[cls] += proto.count;
    }
  }
  PrototypeSet out;
  for (const auto& [cls, total] : totals) {
    if (total == 0) continue;
    ClassPrototype agg;
    for (const auto& local : locals) {
      auto it = local.entries.find(cls);
      if (it == local.entries.end() || it->second.count == 0) continue;
      const double w = static_cast<double>(it->second.count) / static_cast<double>(total);
      if (agg.vector.size() == 0) {
        agg.vector = w * it->second.vector;
      } else {
        if (agg.vector.size() != it->second.vector.size()) {
          throw Error(ErrorCode::kDimensionMismatch, "prototype dimension mismatch");
        }
        agg.vector += w * it->second.vector;
      }
    }
    agg.count = total;
    out.entries[cls] = std::move(agg);
  }
  if (out.entries.empty()) {
    throw Error(ErrorCode::kDegenerateInput, "all prototype counts are zero");
  }
  return out;
}

PrototypeSet aggregate_uniform(std::span<const PrototypeSet> locals, int clients) {
  if (locals.empty() || clients <= 0 ||
      static_cast<std::size_t>(clients) != locals.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "uniform aggregation needs exactly one set per client");
  }
  std::set<int> classes;
  for (const auto& local : locals) {
    for (const auto& [cls, proto] : local.entries) classes.insert(cls);
  }
  PrototypeSet out;
  for (int cls : classes) {
    ClassPrototype agg;
    for (std::size_t i = 0; i < locals.size(); ++i) {
      auto it = locals[i].entries.find(cls);
      if (it == locals[i].entries.end()) {
        throw Error(ErrorCode::kMissingClass,
                    "client " + std::to_string(i) + " has no prototype for class " +
                        std::to_string(cls));
      }
      if (agg.vector.size() == 0) {
        agg.vector = it->second.vector;
      } else {
        if (agg.vector.size() != it->second.vector.size()) {
          throw Error(ErrorCode::kDimensionMismatch, "prototype dimension mismatch");
        }
        agg.vector += it->second.vector;
      }
    }
    agg.vector /= static_cast<double>(clients);
    agg.count = clients;
    out.entries[cls] = std::move(agg);
  }
  return out;
}

}  // namespace protofed
