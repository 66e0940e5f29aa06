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

// Experiment orchestration behind the command-line tool: run-config
// parsing, method/seed sweeps, CSV output and the micro-benchmarks.

#ifndef PROTOFED_HARNESS_H_
#define PROTOFED_HARNESS_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "protofed/federation.h"

namespace protofed {

// A JSON run file: ExperimentConfig fields under their own names, plus
// "method" (a name or a list of names), "seeds" and "output_dir". Unknown
// keys are rejected.
struct RunConfig {
  ExperimentConfig base;
  std::vector<Method> methods{Method::kFedPH};
  std::vector<std::uint64_t> seeds{0};
  // When absent, each run generates data with its own seed.
  std::optional<std::uint64_t> data_seed;
  double fedprox_mu = 0.01;
  double fedproto_reg = 0.01;
  std::optional<std::filesystem::path> output_dir;

  // One experiment. dp and crypto settings apply to prototype methods only.
  ExperimentConfig expand(Method method, std::uint64_t seed) const;
  void validate() const;
};

RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::filesystem::path& path);

// Comma-separated seeds from FEDPH_SEED, if set.
std::optional<std::vector<std::uint64_t>> seeds_from_env();

// Fixed header; client accuracies are ';'-joined in one column.
inline constexpr std::string_view kMetricsHeader =
    "method,seed,round,mean_accuracy,client_accuracies,mean_supervised_loss,"
    "mean_regularizer_loss,uplink_bytes,downlink_bytes,uplink_values,round_ms,encrypt_ms";
void write_metrics_csv(std::ostream& out, const MetricsTable& rows);

struct MethodSummary {
  Method method = Method::kFedPH;
  int seeds = 0;
  double mean = 0.0;  // final-round mean accuracy, in [0, 1]
  double std = 0.0;   // sample std over seeds; 0 for one seed
};
// Final-round rows per (method, seed), in order of first appearance.
std::vector<MethodSummary> summarize(const MetricsTable& rows);
// "92.1% ± 0.24%"
std::string format_accuracy(double mean, double std);
inline constexpr std::string_view kSummaryHeader = "method,seeds,mean_accuracy,std_accuracy,formatted";
void write_summary_csv(std::ostream& out, const std::vector<MethodSummary>& rows);

// Writes client_<i>.csv for every client and manifest.json into `out_dir`.
void cmd_generate_data(const std::filesystem::path& config, const std::filesystem::path& out_dir);

// Runs every (method, seed); writes metrics.csv and summary.csv.
MetricsTable cmd_run(const std::filesystem::path& config, const std::filesystem::path& out_dir,
                     std::ostream& log);

struct CryptoBenchRow {
  int bits = 0;
  int embed_dim = 0;
  std::size_t prototype_values = 0;
  std::size_t head_values = 0;
  int repetitions = 0;
  double prototype_mean_s = 0.0;
  double prototype_std_s = 0.0;
  double head_mean_s = 0.0;
  double head_std_s = 0.0;
  double ratio = 0.0;  // head_mean_s / prototype_mean_s
};
inline constexpr std::string_view kBenchHeader =
    "bits,embed_dim,prototype_values,head_values,repetitions,prototype_mean_s,"
    "prototype_std_s,head_mean_s,head_std_s,ratio";

// Times encryption of a K*d_b prototype payload and a head-parameter
// payload for each d_b, at K = 6 and d_a = 512.
std::vector<CryptoBenchRow> bench_crypto(int bits, const std::vector<int>& embed_dims,
                                         int repetitions, std::uint64_t seed = 0);
void cmd_bench_crypto(int bits, const std::vector<int>& embed_dims,
                      const std::filesystem::path& out, int repetitions, std::ostream& log);

struct SweepRow {
  double epsilon = 0.0;  // +inf for the noise-free control
  std::string mode;      // "local", "split" or "none"
  std::uint64_t seed = 0;
  double final_accuracy = 0.0;
  double sigma = 0.0;
  double sensitivity = 0.0;
  double per_client_std = 0.0;
};
inline constexpr std::string_view kSweepHeader =
    "epsilon,mode,seed,final_accuracy,sigma,sensitivity,per_client_std";

// fedph under local and split noise for every epsilon, plus one noise-free
// control per seed.
std::vector<SweepRow> privacy_sweep(const RunConfig& config, const std::vector<double>& epsilons);
void cmd_privacy_sweep(const std::filesystem::path& config, const std::vector<double>& epsilons,
                       const std::filesystem::path& out_dir, std::ostream& log);

// Parses "0.5,1,inf".
std::vector<double> parse_epsilons(std::string_view list);
std::vector<int> parse_int_list(std::string_view list);

// `error code=<name> message="<escaped>"`
std::string error_line(const Error& e);

}  // namespace protofed

#endif  // PROTOFED_HARNESS_H_
