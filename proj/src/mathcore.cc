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

#include "protofed/mathcore.h"

#include <algorithm>

namespace protofed {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kDimensionMismatch: return "dimension_mismatch";
    case ErrorCode::kDegenerateInput: return "degenerate_input";
    case ErrorCode::kInvalidConfig: return "invalid_config";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kDivergence: return "divergence";
    case ErrorCode::kMissingClass: return "missing_class";
    case ErrorCode::kOutOfRange: return "out_of_range";
    case ErrorCode::kWraparound: return "wraparound";
    case ErrorCode::kThresholdUnmet: return "threshold_unmet";
    case ErrorCode::kCombinationFailure: return "combination_failure";
    case ErrorCode::kKeyMismatch: return "key_mismatch";
    case ErrorCode::kPrimeGenerationTimeout: return "prime_generation_timeout";
    case ErrorCode::kModelHeterogeneity: return "model_heterogeneity";
    case ErrorCode::kDecode: return "decode";
    case ErrorCode::kTransport: return "transport";
    case ErrorCode::kProtocol: return "protocol";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream_id) {
  const std::uint64_t a = splitmix64(seed);
  const std::uint64_t b = splitmix64(stream_id ^ 0x5851f42d4c957f2dULL);
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id), engine_(make_engine(seed, stream_id)) {}

double RngStream::uniform(double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(engine_);
}

double RngStream::normal(double mean, double stddev) {
  return std::normal_distribution<double>(mean, stddev)(engine_);
}

double RngStream::gamma(double shape) {
  return std::gamma_distribution<double>(shape, 1.0)(engine_);
}

std::uint64_t RngStream::below(std::uint64_t bound) {
  return std::uniform_int_distribution<std::uint64_t>(0, bound - 1)(engine_);
}

Vec64 sample_gaussian(RngStream& rng, double mean, double stddev,
                      Eigen::Index n) {
  if (!(stddev >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "negative standard deviation");
  }
  if (n < 0) throw Error(ErrorCode::kInvalidArgument, "negative sample count");
  Vec64 out = Vec64::Constant(n, mean);
  if (stddev == 0.0) return out;
  std::normal_distribution<double> dist(mean, stddev);
  for (Eigen::Index i = 0; i < n; ++i) out[i] = dist(rng.engine());
  return out;
}

Vec64 sample_dirichlet(RngStream& rng, std::span<const double> alpha) {
  if (alpha.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "empty Dirichlet parameter");
  }
  for (double a : alpha) {
    if (!(a > 0.0) || !std::isfinite(a)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "Dirichlet parameters must be positive and finite");
    }
  }
  const auto k = static_cast<Eigen::Index>(alpha.size());
  Vec64 draw(k);
  // Tiny alphas can underflow every gamma variate to zero; redraw then.
  for (int attempt = 0; attempt < 1000; ++attempt) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) {
      draw[i] = rng.gamma(alpha[static_cast<std::size_t>(i)]);
      total += draw[i];
    }
    if (total > 0.0 && std::isfinite(total)) {
      draw /= total;
      return draw;
    }
  }
  throw Error(ErrorCode::kDegenerateInput,
              "Dirichlet draw underflowed repeatedly");
}

bool all_finite(const Eigen::Ref<const Mat64>& m) {
  return m.allFinite();
}

}  // namespace protofed
