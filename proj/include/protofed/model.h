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

#ifndef PROTOFED_MODEL_H_
#define PROTOFED_MODEL_H_

#include <cstdint>
#include <vector>

#include "protofed/mathcore.h"

namespace protofed {

// Frozen feature extractor: max(0, W x + b), weights fixed by a seed.
class BackboneSpec {
 public:
  BackboneSpec(Mat64 weight, Vec64 bias);
  static BackboneSpec from_seed(int input_dim, int output_dim,
                                std::uint64_t seed);

  const Mat64& weight() const { return weight_; }
  const Vec64& bias() const { return bias_; }
  int input_dim() const { return static_cast<int>(weight_.cols()); }
  int output_dim() const { return static_cast<int>(weight_.rows()); }

  // Column-wise forward over a d x n batch.
  Mat64 forward_batch(const Eigen::Ref<const Mat64>& x) const;

 private:
  Mat64 weight_;
  Vec64 bias_;
};

Vec64 backbone_forward(const BackboneSpec& spec, const Vec64& x);

struct DenseLayer {
  Mat64 weight;  // out x in
  Vec64 bias;    // out

  Eigen::Index in_dim() const { return weight.cols(); }
  Eigen::Index out_dim() const { return weight.rows(); }
  Eigen::Index size() const { return weight.size() + bias.size(); }
};

// Layer widths of a client head. An empty `hidden` gives the single-layer
// projection d_a -> d_b; one hidden width gives d_a -> h -> d_b with
// max(0, .) in between. The classifier is always d_b -> K.
struct HeadShape {
  int feature_dim = 512;
  std::vector<int> hidden;
  int embed_dim = 64;
  int classes = 6;

  int projection_depth() const { return static_cast<int>(hidden.size()) + 1; }
  void validate() const;
  static HeadShape with_depth(int feature_dim, int embed_dim, int classes,
                              int projection_depth, int hidden_width);
};

// Projection layers theta followed by classifier omega. Used for parameter
// values as well as for gradients and momentum buffers of the same shape.
struct HeadWeights {
  std::vector<DenseLayer> projection;
  DenseLayer classifier;

  static HeadWeights zeros(const HeadShape& shape);
  static HeadWeights uniform_init(const HeadShape& shape, RngStream& rng);

  HeadShape shape() const;
  bool same_shape(const HeadWeights& other) const;
  Eigen::Index size() const;

  Vec64 flatten() const;
  void assign_flat(const Vec64& flat);
  bool all_finite() const;
};

struct HeadParams {
  HeadWeights weights;
  HeadWeights velocity;

  explicit HeadParams(HeadWeights w);
  HeadParams(const HeadShape& shape, RngStream& rng);
};

struct OptimConfig {
  double learning_rate = 0.001;
  double momentum = 0.5;
  double weight_decay = 0.0001;
  int batch_size = 32;

  void validate() const;
};

// Intermediate activations of a batched projection, kept for backprop.
struct ProjectionTrace {
  std::vector<Mat64> pre_activations;  // one per projection layer
  Mat64 output;                        // unclipped z, d_b x n
};

ProjectionTrace project_batch(const HeadWeights& head,
                              const Eigen::Ref<const Mat64>& features);
Vec64 project(const HeadWeights& head, const Vec64& features);
Vec64 classify(const HeadWeights& head, const Vec64& z);
Mat64 classify_batch(const HeadWeights& head, const Eigen::Ref<const Mat64>& z);

// v <- momentum * v + (g + weight_decay * w);  w <- w - lr * v.
void sgd_step(HeadParams& params, const HeadWeights& grads,
              const OptimConfig& config);

// z itself when ||z|| <= bound, else z scaled to norm `bound`.
Vec64 clip_norm(const Vec64& z, double bound);

Eigen::Index param_count(const HeadWeights& head);
Eigen::Index param_count(const HeadShape& shape);

}  // namespace protofed

#endif  // PROTOFED_MODEL_H_
