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

#include "protofed/privacy.h"

#include <cmath>
#include <string>

namespace protofed {
namespace {

PrototypeSet add_noise(const PrototypeSet& proto, double stddev, RngStream& rng) {
  PrototypeSet out = proto;
  if (stddev == 0.0) return out;
  for (auto& [cls, entry] : out.entries) {
    entry.vector += sample_gaussian(rng, 0.0, stddev, entry.vector.size());
  }
  return out;
}

}  // namespace

void DpConfig::validate() const {
  if (!(epsilon > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "epsilon must be positive");
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "delta must lie in (0, 1)");
  }
  if (!(clip_bound > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "clip bound must be positive");
  }
  if (honest_clients < 2 || honest_clients > clients) {
    throw Error(ErrorCode::kInvalidConfig,
                "honest client count t must satisfy 2 <= t <= m (t=" +
                    std::to_string(honest_clients) + ", m=" +
                    std::to_string(clients) + ")");
  }
}

NoiseSpec NoiseSpec::make(double sensitivity, double sigma, int honest_clients,
                          int clients) {
  if (honest_clients < 2 || honest_clients > clients) {
    throw Error(ErrorCode::kInvalidConfig, "noise split needs 2 <= t <= m");
  }
  if (!(sensitivity >= 0.0) || !(sigma >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "negative noise parameter");
  }
  NoiseSpec spec;
  spec.sensitivity = sensitivity;
  spec.sigma = sigma;
  spec.honest_clients = honest_clients;
  spec.clients = clients;
  spec.local_std = sensitivity * sigma;
  const double per_client_var = spec.local_std * spec.local_std / (honest_clients - 1);
  spec.per_client_std = std::sqrt(per_client_var);
  spec.aggregate_std = std::sqrt(per_client_var * clients);
  return spec;
}

NoiseSpec NoiseSpec::from_config(const DpConfig& config, int min_class_count) {
  config.validate();
  return make(protofed::sensitivity(config.clip_bound, min_class_count),
              calibrate_sigma(config.epsilon, config.delta),
              config.honest_clients, config.clients);
}

double sensitivity(double clip_bound, int min_count) {
  if (!(clip_bound > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "clip bound must be positive");
  }
  if (min_count < 1) {
    throw Error(ErrorCode::kInvalidArgument, "minimum count must be >= 1");
  }
  return 2.0 * clip_bound / min_count;
}

double calibrate_sigma(double epsilon, double delta) {
  if (!(epsilon > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "epsilon must be positive");
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "delta must lie in (0, 1)");
  }
  return std::sqrt(2.0 * std::log(1.25 / delta)) / epsilon;
}

PrototypeSet perturb_split(const PrototypeSet& proto, const NoiseSpec& spec,
                           RngStream& rng) {
  if (spec.honest_clients < 2) {
    throw Error(ErrorCode::kInvalidArgument, "noise split needs t >= 2");
  }
  return add_noise(proto, spec.per_client_std, rng);
}

PrototypeSet perturb_local(const PrototypeSet& proto, const NoiseSpec& spec,
                           RngStream& rng) {
  return add_noise(proto, spec.local_std, rng);
}

}  // namespace protofed
