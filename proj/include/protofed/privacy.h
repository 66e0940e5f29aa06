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

#ifndef PROTOFED_PRIVACY_H_
#define PROTOFED_PRIVACY_H_

#include "protofed/prototype.h"

namespace protofed {

// Gaussian-mechanism parameters. `honest_clients` (t) is the minimum number
// of honest parties; the per-client noise variance is divided by t - 1.
struct DpConfig {
  double epsilon = 1.0;
  double delta = 1e-5;
  double clip_bound = 1.0;
  int honest_clients = 3;
  int clients = 5;

  void validate() const;
};

struct NoiseSpec {
  double sensitivity = 0.0;
  double sigma = 0.0;
  // Std of the full per-client Gaussian mechanism, S_f * sigma.
  double local_std = 0.0;
  // S_f * sigma / sqrt(t - 1).
  double per_client_std = 0.0;
  // S_f * sigma * sqrt(m / (t - 1)): std of the sum of m split noises.
  double aggregate_std = 0.0;
  int honest_clients = 2;
  int clients = 1;

  static NoiseSpec make(double sensitivity, double sigma, int honest_clients,
                        int clients);
  static NoiseSpec from_config(const DpConfig& config, int min_class_count);
};

// Replace-one bound on the mean of n >= n_min vectors of norm <= B.
double sensitivity(double clip_bound, int min_count);

// Classical calibration sqrt(2 ln(1.25 / delta)) / epsilon. Only proven for
// epsilon <= 1; applied unchanged above that.
double calibrate_sigma(double epsilon, double delta);

// Adds N(0, per_client_std^2) to every coordinate of every class vector.
PrototypeSet perturb_split(const PrototypeSet& proto, const NoiseSpec& spec,
                           RngStream& rng);

// Adds N(0, local_std^2): the plain local-DP comparator.
PrototypeSet perturb_local(const PrototypeSet& proto, const NoiseSpec& spec,
                           RngStream& rng);

}  // namespace protofed

#endif  // PROTOFED_PRIVACY_H_
