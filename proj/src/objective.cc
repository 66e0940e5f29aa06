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

#include "protofed/objective.h"

#include <cmath>
#include <string>

namespace protofed {
namespace {

// d similarity(z, c) / dz.
Vec64 similarity_gradient(const Vec64& z, const Vec64& c, Measure measure) {
  switch (measure) {
    case Measure::kCosine: {
      const double nz = z.norm();
      const double nc = c.norm();
      if (nz == 0.0 || nc == 0.0) {
        throw Error(ErrorCode::kDegenerateInput,
                    "cosine similarity of a zero-norm vector");
      }
      const double cos = z.dot(c) / (nz * nc);
      return c / (nz * nc) - cos * z / (nz * nz);
    }
    case Measure::kL1:
      return -(z - c).cwiseSign();
    case Measure::kL2: {
      const Vec64 diff = z - c;
      const double n = diff.norm();
      if (n == 0.0) return Vec64::Zero(z.size());
      return -diff / n;
    }
  }
  return Vec64::Zero(z.size());
}

}  // namespace

Measure parse_measure(std::string_view name) {
  if (name == "cosine") return Measure::kCosine;
  if (name == "l1" || name == "L1") return Measure::kL1;
  if (name == "l2" || name == "L2") return Measure::kL2;
  throw Error(ErrorCode::kInvalidConfig, "unknown measure '" + std::string(name) + "'");
}

std::string_view measure_name(Measure m) {
  switch (m) {
    case Measure::kCosine: return "cosine";
    case Measure::kL1: return "l1";
    case Measure::kL2: return "l2";
  }
  return "cosine";
}

void LossConfig::validate() const {
  if (!(temperature > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "temperature must be positive");
  }
  if (!(lambda >= 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "lambda must be >= 0");
  }
}

double log_softmax_loss(const Vec64& scores, Eigen::Index target) {
  if (target < 0 || target >= scores.size()) {
    throw Error(ErrorCode::kOutOfRange, "target index out of range");
  }
  const double peak = scores.maxCoeff();
  const double lse = peak + std::log((scores.array() - peak).exp().sum());
  return lse - scores[target];
}

double cross_entropy(const Vec64& logits, int label) {
  return log_softmax_loss(logits, label);
}

double similarity(const Vec64& a, const Vec64& b, Measure measure) {
  switch (measure) {
    case Measure::kCosine: return cosine_similarity(a, b);
    case Measure::kL1: return -l1_distance(a, b);
    case Measure::kL2: return -l2_distance(a, b);
  }
  return 0.0;
}

double contrastive_loss(const Vec64& z, int label, const PrototypeSet& globals,
                        const LossConfig& config) {
  config.validate();
  if (!globals.contains(label)) {
    throw Error(ErrorCode::kMissingClass,
                "global prototypes lack class " + std::to_string(label));
  }
  Vec64 scores(static_cast<Eigen::Index>(globals.size()));
  Eigen::Index target = 0;
  Eigen::Index k = 0;
  for (const auto& [cls, proto] : globals.entries) {
    if (cls == label) target = k;
    scores[k++] = similarity(z, proto.vector, config.measure) / config.temperature;
  }
  return log_softmax_loss(scores, target);
}

BatchResult batch_loss_and_grads(const HeadWeights& head,
                                 const Eigen::Ref<const Mat64>& features,
                                 std::span<const int> labels,
                                 const PrototypeSet& globals,
                                 const LossConfig& config, double clip_bound) {
  config.validate();
  const Eigen::Index n = features.cols();
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "empty batch");
  if (static_cast<std::size_t>(n) != labels.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "feature/label count mismatch");
  }
  if (!(clip_bound > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "clip bound must be positive");
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  const Eigen::Index classes = head.classifier.out_dim();

  const ProjectionTrace trace = project_batch(head, features);
  const Mat64& z_raw = trace.output;
  Mat64 z = z_raw;
  Vec64 raw_norms(n);
  for (Eigen::Index c = 0; c < n; ++c) {
    raw_norms[c] = z_raw.col(c).norm();
    if (raw_norms[c] > clip_bound) z.col(c) *= clip_bound / raw_norms[c];
  }

  const Mat64 logits = classify_batch(head, z);
  Mat64 d_logits(classes, n);
  double supervised = 0.0;
  for (Eigen::Index c = 0; c < n; ++c) {
    const int y = labels[static_cast<std::size_t>(c)];
    if (y < 0 || y >= classes) {
      throw Error(ErrorCode::kOutOfRange, "label " + std::to_string(y) + " out of range");
    }
    const double peak = logits.col(c).maxCoeff();
    const Vec64 e = (logits.col(c).array() - peak).exp();
    const double sum = e.sum();
    supervised += peak + std::log(sum) - logits(y, c);
    d_logits.col(c) = e / sum;
    d_logits(y, c) -= 1.0;
  }
  d_logits *= inv_n;
  supervised *= inv_n;

  Mat64 d_z = head.classifier.weight.transpose() * d_logits;

  double regularizer = 0.0;
  const bool use_reg = config.lambda != 0.0 && globals.initialized && !globals.empty();
  if (use_reg && config.regularizer == Regularizer::kContrastive) {
    const auto k = static_cast<Eigen::Index>(globals.size());
    const double scale = config.lambda * inv_n / config.temperature;
    Vec64 scores(k);
    for (Eigen::Index c = 0; c < n; ++c) {
      const int y = labels[static_cast<std::size_t>(c)];
      if (!globals.contains(y)) {
        throw Error(ErrorCode::kMissingClass,
                    "global prototypes lack class " + std::to_string(y));
      }
      const Vec64 zc = z.col(c);
      Eigen::Index target = 0;
      Eigen::Index j = 0;
      for (const auto& [cls, proto] : globals.entries) {
        if (cls == y) target = j;
        scores[j++] = similarity(zc, proto.vector, config.measure) / config.temperature;
      }
      const double peak = scores.maxCoeff();
      const Vec64 p = (scores.array() - peak).exp();
      const double sum = p.sum();
      regularizer += peak + std::log(sum) - scores[target];
      j = 0;
      for (const auto& [cls, proto] : globals.entries) {
        const double coeff = p[j] / sum - (j == target ? 1.0 : 0.0);
        if (coeff != 0.0) {
          d_z.col(c) += (scale * coeff) * similarity_gradient(zc, proto.vector, config.measure);
        }
        ++j;
      }
    }
    regularizer *= inv_n;
  } else if (use_reg && config.regularizer == Regularizer::kPrototypeL2) {
    for (Eigen::Index c = 0; c < n; ++c) {
      auto it = globals.entries.find(labels[static_cast<std::size_t>(c)]);
      if (it == globals.entries.end()) continue;
      const Vec64 diff = z.col(c) - it->second.vector;
      regularizer += diff.squaredNorm();
      d_z.col(c) += (2.0 * config.lambda * inv_n) * diff;
    }
    regularizer *= inv_n;
  }

  BatchResult result;
  result.loss.supervised = supervised;
  result.loss.regularizer = regularizer;
  result.loss.total = supervised + config.lambda * regularizer;
  if (!std::isfinite(result.loss.total)) {
    throw Error(ErrorCode::kDivergence, "non-finite loss");
  }

  result.grads = HeadWeights::zeros(head.shape());
  result.grads.classifier.weight = d_logits * z.transpose();
  result.grads.classifier.bias = d_logits.rowwise().sum();

  // Jacobian of z = B * u / ||u|| on the clipped branch is
  // (B / ||u||) (I - u_hat u_hat^T).
  Mat64 delta = d_z;
  for (Eigen::Index c = 0; c < n; ++c) {
    if (raw_norms[c] > clip_bound) {
      const Vec64 u_hat = z_raw.col(c) / raw_norms[c];
      const Vec64 g = delta.col(c);
      delta.col(c) = (clip_bound / raw_norms[c]) * (g - u_hat * u_hat.dot(g));
    }
  }

  for (std::size_t i = head.projection.size(); i-- > 0;) {
    const Mat64 input = i == 0 ? Mat64(features)
                               : Mat64(trace.pre_activations[i - 1].cwiseMax(0.0));
    result.grads.projection[i].weight = delta * input.transpose();
    result.grads.projection[i].bias = delta.rowwise().sum();
    if (i > 0) {
      delta = (head.projection[i].weight.transpose() * delta)
                  .cwiseProduct(
                      (trace.pre_activations[i - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  return result;
}

BatchResult batch_loss_and_grads(const HeadWeights& head,
                                 std::span<const Sample> batch,
                                 const PrototypeSet& globals,
                                 const LossConfig& config,
                                 const BackboneSpec& backbone, double clip_bound) {
  if (batch.empty()) throw Error(ErrorCode::kInvalidArgument, "empty batch");
  Mat64 raw(batch.front().x.size(), static_cast<Eigen::Index>(batch.size()));
  std::vector<int> labels;
  labels.reserve(batch.size());
  for (std::size_t n = 0; n < batch.size(); ++n) {
    raw.col(static_cast<Eigen::Index>(n)) = batch[n].x;
    labels.push_back(batch[n].y);
  }
  return batch_loss_and_grads(head, backbone.forward_batch(raw), labels, globals,
                              config, clip_bound);
}

}  // namespace protofed
