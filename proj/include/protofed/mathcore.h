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

#ifndef PROTOFED_MATHCORE_H_
#define PROTOFED_MATHCORE_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "protofed/error.h"

namespace protofed {

using Vec64 = Eigen::VectorXd;
using Mat64 = Eigen::MatrixXd;

// A reproducible random stream identified by (seed, stream_id). Streams are
// single-owner; copy one to replay it.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  std::uint64_t next_u64() { return engine_(); }
  double uniform(double lo, double hi);
  double normal(double mean, double stddev);
  double gamma(double shape);
  // Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
};

namespace internal {

template <typename A, typename B>
void check_same_size(const Eigen::MatrixBase<A>& a,
                     const Eigen::MatrixBase<B>& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "dimension mismatch: " + std::to_string(a.size()) + " vs " +
                    std::to_string(b.size()));
  }
}

}  // namespace internal

template <typename A, typename B>
double cosine_similarity(const Eigen::MatrixBase<A>& a,
                         const Eigen::MatrixBase<B>& b) {
  internal::check_same_size(a, b);
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) {
    throw Error(ErrorCode::kDegenerateInput,
                "cosine similarity of a zero-norm vector");
  }
  const double c = a.dot(b) / (na * nb);
  return std::clamp(c, -1.0, 1.0);
}

template <typename A, typename B>
double l1_distance(const Eigen::MatrixBase<A>& a,
                   const Eigen::MatrixBase<B>& b) {
  internal::check_same_size(a, b);
  return (a - b).template lpNorm<1>();
}

template <typename A, typename B>
double l2_distance(const Eigen::MatrixBase<A>& a,
                   const Eigen::MatrixBase<B>& b) {
  internal::check_same_size(a, b);
  return (a - b).norm();
}

// n i.i.d. draws from N(mean, stddev^2). stddev == 0 yields the constant
// vector without consuming randomness.
Vec64 sample_gaussian(RngStream& rng, double mean, double stddev,
                      Eigen::Index n);

// One draw from Dirichlet(alpha) via normalized Gamma(alpha_i, 1) variates.
Vec64 sample_dirichlet(RngStream& rng, std::span<const double> alpha);

bool all_finite(const Eigen::Ref<const Mat64>& m);

}  // namespace protofed

#endif  // PROTOFED_MATHCORE_H_
