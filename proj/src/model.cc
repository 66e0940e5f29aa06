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

#include "protofed/model.h"

#include <string>

namespace protofed {
namespace {

constexpr std::uint64_t kBackboneStream = 0xb4c6b0e;

void fill_uniform(Eigen::Ref<Mat64> m, double limit, RngStream& rng) {
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = rng.uniform(-limit, limit);
}

DenseLayer make_layer(Eigen::Index in, Eigen::Index out) {
  return DenseLayer{Mat64::Zero(out, in), Vec64::Zero(out)};
}

void require_dim(Eigen::Index got, Eigen::Index want, const char* what) {
  if (got != want) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::string(what) + ": expected dimension " +
                    std::to_string(want) + ", got " + std::to_string(got));
  }
}

template <typename Fn>
void for_each_layer(HeadWeights& w, Fn&& fn) {
  for (auto& layer : w.projection) fn(layer);
  fn(w.classifier);
}

template <typename Fn>
void for_each_layer(const HeadWeights& w, Fn&& fn) {
  for (const auto& layer : w.projection) fn(layer);
  fn(w.classifier);
}

}  // namespace

BackboneSpec::BackboneSpec(Mat64 weight, Vec64 bias)
    : weight_(std::move(weight)), bias_(std::move(bias)) {
  if (weight_.rows() == 0 || weight_.cols() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "backbone with zero width");
  }
  require_dim(bias_.size(), weight_.rows(), "backbone bias");
}

BackboneSpec BackboneSpec::from_seed(int input_dim, int output_dim,
                                     std::uint64_t seed) {
  if (input_dim <= 0 || output_dim <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "backbone with zero width");
  }
  RngStream rng(seed, kBackboneStream);
  const double limit = 1.0 / std::sqrt(static_cast<double>(input_dim));
  Mat64 w(output_dim, input_dim);
  Vec64 b(output_dim);
  fill_uniform(w, limit, rng);
  fill_uniform(b, limit, rng);
  return BackboneSpec(std::move(w), std::move(b));
}

Mat64 BackboneSpec::forward_batch(const Eigen::Ref<const Mat64>& x) const {
  require_dim(x.rows(), weight_.cols(), "backbone input");
  Mat64 out = weight_ * x;
  out.colwise() += bias_;
  return out.cwiseMax(0.0);
}

Vec64 backbone_forward(const BackboneSpec& spec, const Vec64& x) {
  return spec.forward_batch(x);
}

void HeadShape::validate() const {
  if (feature_dim <= 0 || embed_dim <= 0 || classes <= 0) {
    throw Error(ErrorCode::kInvalidConfig, "head shape with zero width");
  }
  if (hidden.size() > 1) {
    throw Error(ErrorCode::kInvalidConfig,
                "projection depth must be 1 or 2 layers");
  }
  for (int h : hidden) {
    if (h <= 0) throw Error(ErrorCode::kInvalidConfig, "hidden width must be positive");
  }
}

HeadShape HeadShape::with_depth(int feature_dim, int embed_dim, int classes,
                                int projection_depth, int hidden_width) {
  if (projection_depth != 1 && projection_depth != 2) {
    throw Error(ErrorCode::kInvalidConfig,
                "projection depth must be 1 or 2, got " +
                    std::to_string(projection_depth));
  }
  HeadShape shape{feature_dim, {}, embed_dim, classes};
  if (projection_depth == 2) shape.hidden.push_back(hidden_width);
  shape.validate();
  return shape;
}

HeadWeights HeadWeights::zeros(const HeadShape& shape) {
  shape.validate();
  HeadWeights w;
  Eigen::Index in = shape.feature_dim;
  for (int h : shape.hidden) {
    w.projection.push_back(make_layer(in, h));
    in = h;
  }
  w.projection.push_back(make_layer(in, shape.embed_dim));
  w.classifier = make_layer(shape.embed_dim, shape.classes);
  return w;
}

HeadWeights HeadWeights::uniform_init(const HeadShape& shape, RngStream& rng) {
  HeadWeights w = zeros(shape);
  for_each_layer(w, [&](DenseLayer& layer) {
    const double limit = 1.0 / std::sqrt(static_cast<double>(layer.in_dim()));
    fill_uniform(layer.weight, limit, rng);
    fill_uniform(layer.bias, limit, rng);
  });
  return w;
}

HeadShape HeadWeights::shape() const {
  HeadShape s;
  s.feature_dim = static_cast<int>(projection.front().in_dim());
  for (std::size_t i = 0; i + 1 < projection.size(); ++i) {
    s.hidden.push_back(static_cast<int>(projection[i].out_dim()));
  }
  s.embed_dim = static_cast<int>(projection.back().out_dim());
  s.classes = static_cast<int>(classifier.out_dim());
  return s;
}

bool HeadWeights::same_shape(const HeadWeights& other) const {
  if (projection.size() != other.projection.size()) return false;
  auto eq = [](const DenseLayer& a, const DenseLayer& b) {
    return a.weight.rows() == b.weight.rows() &&
           a.weight.cols() == b.weight.cols() && a.bias.size() == b.bias.size();
  };
  for (std::size_t i = 0; i < projection.size(); ++i) {
    if (!eq(projection[i], other.projection[i])) return false;
  }
  return eq(classifier, other.classifier);
}

Eigen::Index HeadWeights::size() const {
  Eigen::Index n = 0;
  for_each_layer(*this, [&](const DenseLayer& l) { n += l.size(); });
  return n;
}

// Flat layout: per layer (projection first, classifier last) the weight in
// column-major order, then the bias.
Vec64 HeadWeights::flatten() const {
  Vec64 flat(size());
  Eigen::Index pos = 0;
  for_each_layer(*this, [&](const DenseLayer& l) {
    flat.segment(pos, l.weight.size()) = l.weight.reshaped();
    pos += l.weight.size();
    flat.segment(pos, l.bias.size()) = l.bias;
    pos += l.bias.size();
  });
  return flat;
}

void HeadWeights::assign_flat(const Vec64& flat) {
  require_dim(flat.size(), size(), "flat head weights");
  Eigen::Index pos = 0;
  for_each_layer(*this, [&](DenseLayer& l) {
    l.weight.reshaped() = flat.segment(pos, l.weight.size());
    pos += l.weight.size();
    l.bias = flat.segment(pos, l.bias.size());
    pos += l.bias.size();
  });
}

bool HeadWeights::all_finite() const {
  bool ok = true;
  for_each_layer(*this, [&](const DenseLayer& l) {
    ok = ok && l.weight.allFinite() && l.bias.allFinite();
  });
  return ok;
}

HeadParams::HeadParams(HeadWeights w)
    : weights(std::move(w)), velocity(HeadWeights::zeros(weights.shape())) {}

HeadParams::HeadParams(const HeadShape& shape, RngStream& rng)
    : HeadParams(HeadWeights::uniform_init(shape, rng)) {}

void OptimConfig::validate() const {
  if (!(learning_rate > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "learning rate must be positive");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "momentum must lie in [0, 1)");
  }
  if (!(weight_decay >= 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "weight decay must be >= 0");
  }
  if (batch_size <= 0) {
    throw Error(ErrorCode::kInvalidConfig, "batch size must be positive");
  }
}

ProjectionTrace project_batch(const HeadWeights& head,
                              const Eigen::Ref<const Mat64>& features) {
  require_dim(features.rows(), head.projection.front().in_dim(), "projection input");
  ProjectionTrace trace;
  Mat64 act = features;
  for (std::size_t i = 0; i < head.projection.size(); ++i) {
    const auto& layer = head.projection[i];
    Mat64 pre = layer.weight * act;
    pre.colwise() += layer.bias;
    if (i + 1 < head.projection.size()) act = pre.cwiseMax(0.0);
    trace.pre_activations.push_back(std::move(pre));
  }
  trace.output = trace.pre_activations.back();
  return trace;
}

Vec64 project(const HeadWeights& head, const Vec64& features) {
  return project_batch(head, features).output;
}

Mat64 classify_batch(const HeadWeights& head, const Eigen::Ref<const Mat64>& z) {
  require_dim(z.rows(), head.classifier.in_dim(), "classifier input");
  Mat64 logits = head.classifier.weight * z;
  logits.colwise() += head.classifier.bias;
  return logits;
}

Vec64 classify(const HeadWeights& head, const Vec64& z) {
  return classify_batch(head, z);
}

void sgd_step(HeadParams& params, const HeadWeights& grads,
              const OptimConfig& config) {
  if (!params.weights.same_shape(grads)) {
    throw Error(ErrorCode::kDimensionMismatch, "gradient shape mismatch");
  }
  if (!grads.all_finite()) {
    throw Error(ErrorCode::kDivergence, "non-finite gradient");
  }
  auto update = [&](DenseLayer& w, DenseLayer& v, const DenseLayer& g) {
    v.weight = config.momentum * v.weight + (g.weight + config.weight_decay * w.weight);
    v.bias = config.momentum * v.bias + (g.bias + config.weight_decay * w.bias);
    w.weight -= config.learning_rate * v.weight;
    w.bias -= config.learning_rate * v.bias;
  };
  for (std::size_t i = 0; i < grads.projection.size(); ++i) {
    update(params.weights.projection[i], params.velocity.projection[i],
           grads.projection[i]);
  }
  update(params.weights.classifier, params.velocity.classifier, grads.classifier);
}

Vec64 clip_norm(const Vec64& z, double bound) {
  if (!(bound > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "clip bound must be positive");
  }
  const double n = z.norm();
  if (n <= bound) return z;
  return z * (bound / n);
}

Eigen::Index param_count(const HeadWeights& head) { return head.size(); }

Eigen::Index param_count(const HeadShape& shape) {
  shape.validate();
  Eigen::Index n = 0;
  Eigen::Index in = shape.feature_dim;
  for (int h : shape.hidden) {
    n += in * h + h;
    in = h;
  }
  n += in * shape.embed_dim + shape.embed_dim;
  n += static_cast<Eigen::Index>(shape.embed_dim) * shape.classes + shape.classes;
  return n;
}

}  // namespace protofed
