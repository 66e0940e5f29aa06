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

// Command-line entry point. On failure prints one line
//   error code=<name> message="<text>"
// to stderr and exits with status 1 (2 for usage errors).

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "protofed/harness.h"

int main(int argc, char** argv) {
  CLI::App app{"Prototype-sharing federated learning simulator"};
  app.require_subcommand(1);

  std::string config;
  std::string out;

  auto* gen = app.add_subcommand("generate-data", "Write per-client feature CSVs and a manifest");
  gen->add_option("--config", config, "JSON run configuration")->required();
  gen->add_option("--out", out, "Output directory")->required();

  auto* run = app.add_subcommand("run", "Run every configured method and seed");
  run->add_option("--config", config, "JSON run configuration")->required();
  run->add_option("--out", out, "Output directory")->required();

  int bits = 2048;
  std::string dims = "64";
  int reps = 20;
  auto* bench = app.add_subcommand("bench-crypto", "Time prototype vs head-parameter encryption");
  bench->add_option("--bits", bits, "Modulus size (512, 1024 or 2048)")->required();
  bench->add_option("--dims", dims, "Comma-separated embedding dimensions")->required();
  bench->add_option("--out", out, "Output CSV file")->required();
  bench->add_option("--reps", reps, "Repetitions per payload")->check(CLI::PositiveNumber);

  std::string eps;
  auto* sweep = app.add_subcommand("privacy-sweep", "Accuracy across epsilon and noise modes");
  sweep->add_option("--config", config, "JSON run configuration")->required();
  sweep->add_option("--eps", eps, "Comma-separated epsilons; 'inf' disables noise")->required();
  sweep->add_option("--out", out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error code=usage message=\"" << e.what() << "\"\n";
    return 2;
  }

  try {
    if (gen->parsed()) {
      protofed::cmd_generate_data(config, out);
    } else if (run->parsed()) {
      protofed::cmd_run(config, out, std::cout);
    } else if (bench->parsed()) {
      protofed::cmd_bench_crypto(bits, protofed::parse_int_list(dims), out, reps, std::cout);
    } else if (sweep->parsed()) {
      protofed::cmd_privacy_sweep(config, protofed::parse_epsilons(eps), out, std::cout);
    }
  } catch (const protofed::Error& e) {
    std::cerr << protofed::error_line(e) << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error code=internal message=\"" << e.what() << "\"\n";
    return 1;
  }
  return 0;
}
