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

#include "protofed/harness.h"

#include <algorithm>
#include <chrono>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace protofed {
namespace {

using nlohmann::json;

[[noreturn]] void config_error(const std::string& msg) {
  throw Error(ErrorCode::kInvalidConfig, msg);
}

// Strict reader for one JSON object: typed getters, and finish() rejects
// any key that was never read.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) config_error(where() + " must be an object");
  }

  bool has(const char* key) const { return obj_.contains(key); }

  const json& raw(const char* key) {
    seen_.insert(key);
    return obj_.at(key);
  }

  void get(const char* key, int& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    if (!v.is_number_integer()) config_error(where(key) + " must be an integer");
    const auto x = v.get<std::int64_t>();
    if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
      config_error(where(key) + " is out of range");
    }
    out = static_cast<int>(x);
  }

  void get(const char* key, std::uint64_t& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      config_error(where(key) + " must be a nonnegative integer");
    }
    out = v.get<std::uint64_t>();
  }

  void get(const char* key, double& out) {
    if (!has(key)) return;
    out = number(raw(key), where(key));
  }

  void get(const char* key, bool& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    if (!v.is_boolean()) config_error(where(key) + " must be a boolean");
    out = v.get<bool>();
  }

  void get(const char* key, std::string& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    if (!v.is_string()) config_error(where(key) + " must be a string");
    out = v.get<std::string>();
  }

  // Accepts numbers and the strings "inf" / "infinity".
  static double number(const json& v, const std::string& where) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
      const auto s = v.get<std::string>();
      if (s == "inf" || s == "infinity" || s == "Infinity") {
        return std::numeric_limits<double>::infinity();
      }
    }
    config_error(where + " must be a number");
  }

  std::string where(const char* key = nullptr) const {
    return key == nullptr ? path_ : path_ + "." + key;
  }

  void finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!seen_.count(key)) config_error("unknown key " + where(key.c_str()));
    }
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

void parse_data(ObjectReader r, DataConfig& d, std::optional<std::uint64_t>& data_seed) {
  r.get("clients", d.clients);
  r.get("classes", d.classes);
  r.get("conditions", d.conditions);
  r.get("raw_dim", d.raw_dim);
  r.get("samples_per_client", d.samples_per_client);
  r.get("dirichlet_alpha", d.dirichlet_alpha);
  r.get("class_separation", d.class_separation);
  r.get("condition_shift", d.condition_shift);
  r.get("noise_std", d.noise_std);
  r.get("require_all_classes", d.require_all_classes);
  if (r.has("seed")) {
    std::uint64_t s = 0;
    r.get("seed", s);
    data_seed = s;
  }
  r.finish();
}

void parse_loss(ObjectReader r, LossConfig& l) {
  r.get("lambda", l.lambda);
  r.get("temperature", l.temperature);
  if (r.has("measure")) {
    std::string m;
    r.get("measure", m);
    try {
      l.measure = parse_measure(m);
    } catch (const Error& e) {
      config_error(r.where("measure") + ": " + e.what());
    }
  }
  r.finish();
}

void parse_optim(ObjectReader r, OptimConfig& o) {
  r.get("learning_rate", o.learning_rate);
  r.get("momentum", o.momentum);
  r.get("weight_decay", o.weight_decay);
  r.get("batch_size", o.batch_size);
  r.finish();
}

void parse_model(ObjectReader r, ModelSettings& m) {
  r.get("feature_dim", m.feature_dim);
  r.get("embed_dim", m.embed_dim);
  r.get("hidden_dim", m.hidden_dim);
  if (r.has("projection_depths")) {
    const json& v = r.raw("projection_depths");
    if (!v.is_array()) config_error(r.where("projection_depths") + " must be an array");
    m.projection_depths.clear();
    for (const auto& e : v) {
      if (!e.is_number_integer()) config_error(r.where("projection_depths") + " must hold integers");
      m.projection_depths.push_back(e.get<int>());
    }
  }
  r.finish();
}

void parse_crypto(ObjectReader r, CryptoSettings& c) {
  r.get("enabled", c.enabled);
  r.get("bits", c.bits);
  r.get("fractional_bits", c.fractional_bits);
  r.finish();
}

void parse_dp(ObjectReader r, PrivacySettings& p) {
  r.get("epsilon", p.epsilon);
  r.get("delta", p.delta);
  if (r.has("mode")) {
    std::string m;
    r.get("mode", m);
    p.mode = parse_noise_mode(m);
  }
  if (r.has("min_class_count")) {
    int n = 0;
    r.get("min_class_count", n);
    p.min_class_count = n;
  }
  r.finish();
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double sample_std(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

double mean_of(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw Error(ErrorCode::kIo, "cannot create " + path.parent_path().string());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  return out;
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create directory " + dir.string());
}

Error with_context(const Error& e, const std::string& prefix) {
  return Error(e.code(), prefix + ": " + e.what());
}

RunConfig load_with_env(const std::filesystem::path& path) {
  RunConfig rc = load_run_config(path);
  if (auto env = seeds_from_env()) rc.seeds = *env;
  rc.validate();
  return rc;
}

}  // namespace

ExperimentConfig RunConfig::expand(Method method, std::uint64_t seed) const {
  ExperimentConfig c = base;
  c.method = method;
  c.seed = seed;
  c.data.seed = data_seed.value_or(seed);
  c.fedprox_mu.reset();
  c.fedproto_reg.reset();
  if (method == Method::kFedProx) c.fedprox_mu = fedprox_mu;
  if (method == Method::kFedProto) c.fedproto_reg = fedproto_reg;
  if (!uses_prototypes(method)) {
    c.dp.reset();
    c.crypto.enabled = false;
  }
  return c;
}

void RunConfig::validate() const {
  if (methods.empty()) config_error("method list is empty");
  if (seeds.empty()) config_error("seed list is empty");
  for (Method m : methods) {
    for (std::uint64_t s : seeds) expand(m, s).validate();
  }
}

RunConfig parse_run_config(const json& doc) {
  RunConfig rc;
  ObjectReader r(doc, "config");
  bool have_prox = false;
  bool have_proto = false;

  if (r.has("method")) {
    const json& v = r.raw("method");
    rc.methods.clear();
    if (v.is_string()) {
      rc.methods.push_back(parse_method(v.get<std::string>()));
    } else if (v.is_array()) {
      for (const auto& e : v) {
        if (!e.is_string()) config_error("config.method entries must be strings");
        rc.methods.push_back(parse_method(e.get<std::string>()));
      }
    } else {
      config_error("config.method must be a string or an array of strings");
    }
  }
  if (r.has("seed") && r.has("seeds")) config_error("give either config.seed or config.seeds");
  if (r.has("seed")) {
    std::uint64_t s = 0;
    r.get("seed", s);
    rc.seeds = {s};
  }
  if (r.has("seeds")) {
    const json& v = r.raw("seeds");
    if (!v.is_array()) config_error("config.seeds must be an array");
    rc.seeds.clear();
    for (const auto& e : v) {
      if (!e.is_number_unsigned() && !(e.is_number_integer() && e.get<std::int64_t>() >= 0)) {
        config_error("config.seeds must hold nonnegative integers");
      }
      rc.seeds.push_back(e.get<std::uint64_t>());
    }
  }
  r.get("rounds", rc.base.rounds);
  r.get("local_epochs", rc.base.local_epochs);
  r.get("honest_clients", rc.base.honest_clients);
  r.get("clip_bound", rc.base.clip_bound);
  if (r.has("aggregation")) {
    std::string a;
    r.get("aggregation", a);
    rc.base.aggregation = parse_aggregation(a);
  }
  if (r.has("dp")) {
    const json& v = r.raw("dp");
    if (!v.is_null()) {
      PrivacySettings p;
      parse_dp(ObjectReader(v, "config.dp"), p);
      rc.base.dp = p;
    }
  }
  if (r.has("crypto")) parse_crypto(ObjectReader(r.raw("crypto"), "config.crypto"), rc.base.crypto);
  if (r.has("loss")) parse_loss(ObjectReader(r.raw("loss"), "config.loss"), rc.base.loss);
  if (r.has("optim")) parse_optim(ObjectReader(r.raw("optim"), "config.optim"), rc.base.optim);
  if (r.has("data")) {
    parse_data(ObjectReader(r.raw("data"), "config.data"), rc.base.data, rc.data_seed);
  }
  if (r.has("model")) parse_model(ObjectReader(r.raw("model"), "config.model"), rc.base.model);
  if (r.has("fedprox_mu")) {
    r.get("fedprox_mu", rc.fedprox_mu);
    have_prox = true;
  }
  if (r.has("fedproto_reg")) {
    r.get("fedproto_reg", rc.fedproto_reg);
    have_proto = true;
  }
  if (r.has("output_dir")) {
    std::string dir;
    r.get("output_dir", dir);
    rc.output_dir = dir;
  }
  r.finish();

  auto selected = [&](Method m) {
    return std::find(rc.methods.begin(), rc.methods.end(), m) != rc.methods.end();
  };
  if (have_prox && !selected(Method::kFedProx)) {
    config_error("config.fedprox_mu is set but fedprox is not among the methods");
  }
  if (have_proto && !selected(Method::kFedProto)) {
    config_error("config.fedproto_reg is set but fedproto is not among the methods");
  }
  return rc;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
  }
  RunConfig rc = parse_run_config(doc);
  rc.validate();
  return rc;
}

std::optional<std::vector<std::uint64_t>> seeds_from_env() {
  const char* env = std::getenv("FEDPH_SEED");
  if (env == nullptr || *env == '\0') return std::nullopt;
  std::vector<std::uint64_t> seeds;
  std::string_view rest(env);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    std::string_view item = rest.substr(0, comma);
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || p != item.data() + item.size() || item.empty()) {
      throw Error(ErrorCode::kInvalidConfig,
                  "FEDPH_SEED must be a comma-separated list of seeds, got '" + std::string(env) +
                      "'");
    }
    seeds.push_back(v);
    rest = comma == std::string_view::npos ? std::string_view() : rest.substr(comma + 1);
  }
  return seeds;
}

void write_metrics_csv(std::ostream& out, const MetricsTable& rows) {
  out << kMetricsHeader << '\n';
  for (const auto& r : rows) {
    out << method_name(r.method) << ',' << r.seed << ',' << r.round << ','
        << fmt(r.mean_accuracy) << ',';
    for (std::size_t i = 0; i < r.client_accuracies.size(); ++i) {
      if (i > 0) out << ';';
      out << fmt(r.client_accuracies[i]);
    }
    out << ',' << fmt(r.mean_supervised_loss) << ',' << fmt(r.mean_regularizer_loss) << ','
        << fmt(r.uplink_bytes) << ',' << fmt(r.downlink_bytes) << ',' << fmt(r.uplink_values)
        << ',' << fmt(r.round_ms) << ',' << fmt(r.encrypt_ms) << '\n';
  }
}

std::vector<MethodSummary> summarize(const MetricsTable& rows) {
  // Last row seen for each (method, seed) is its final round.
  std::vector<Method> order;
  std::map<Method, std::map<std::uint64_t, const MetricsRow*>> last;
  for (const auto& r : rows) {
    if (!last.count(r.method)) order.push_back(r.method);
    const MetricsRow*& slot = last[r.method][r.seed];
    if (slot == nullptr || r.round >= slot->round) slot = &r;
  }
  std::vector<MethodSummary> out;
  for (Method m : order) {
    std::vector<double> finals;
    for (const auto& [seed, row] : last[m]) finals.push_back(row->mean_accuracy);
    out.push_back({m, static_cast<int>(finals.size()), mean_of(finals), sample_std(finals)});
  }
  return out;
}

std::string format_accuracy(double mean, double std) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.1f%% ± %.2f%%", 100.0 * mean, 100.0 * std);
  return buf;
}

void write_summary_csv(std::ostream& out, const std::vector<MethodSummary>& rows) {
  out << kSummaryHeader << '\n';
  for (const auto& s : rows) {
    out << method_name(s.method) << ',' << s.seeds << ',' << fmt(s.mean) << ',' << fmt(s.std)
        << ',' << format_accuracy(s.mean, s.std) << '\n';
  }
}

void cmd_generate_data(const std::filesystem::path& config, const std::filesystem::path& out_dir) {
  const RunConfig rc = load_with_env(config);
  // One dataset per seed would be ambiguous; the first seed defines it.
  DataConfig data = rc.expand(rc.methods.front(), rc.seeds.front()).effective_data();
  for (Method m : rc.methods) {
    if (rc.expand(m, rc.seeds.front()).effective_data().require_all_classes) {
      data.require_all_classes = true;
    }
  }
  const std::vector<ClientDataset> datasets = generate(data);
  ensure_dir(out_dir);
  json manifest;
  manifest["clients"] = data.clients;
  manifest["classes"] = data.classes;
  manifest["raw_dim"] = data.raw_dim;
  manifest["samples_per_client"] = data.samples_per_client;
  manifest["seed"] = data.seed;
  manifest["require_all_classes"] = data.require_all_classes;
  manifest["files"] = json::array();
  for (const auto& ds : datasets) {
    const std::string name = "client_" + std::to_string(ds.client_id) + ".csv";
    write_features_csv(out_dir / name, std::span<const ClientDataset>(&ds, 1));
    manifest["files"].push_back({{"client_id", ds.client_id},
                                 {"file", name},
                                 {"train_rows", ds.train.size()},
                                 {"test_rows", ds.test.size()},
                                 {"class_counts", ds.class_counts}});
  }
  std::ofstream out = open_output(out_dir / "manifest.json");
  out << manifest.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::kIo, "write failed for manifest.json");
}

MetricsTable cmd_run(const std::filesystem::path& config, const std::filesystem::path& out_dir,
                     std::ostream& log) {
  const RunConfig rc = load_with_env(config);
  MetricsTable all;
  for (Method m : rc.methods) {
    for (std::uint64_t seed : rc.seeds) {
      const ExperimentConfig cfg = rc.expand(m, seed);
      try {
        MetricsTable t = run_experiment(cfg);
        log << method_name(m) << " seed=" << seed << " final_accuracy=" << fmt(t.back().mean_accuracy)
            << '\n';
        all.insert(all.end(), t.begin(), t.end());
      } catch (const Error& e) {
        throw with_context(e, "method=" + std::string(method_name(m)) +
                                  " seed=" + std::to_string(seed));
      }
    }
  }
  const std::filesystem::path dir = out_dir.empty() ? rc.output_dir.value_or(".") : out_dir;
  ensure_dir(dir);
  {
    std::ofstream out = open_output(dir / "metrics.csv");
    write_metrics_csv(out, all);
    if (!out) throw Error(ErrorCode::kIo, "write failed for metrics.csv");
  }
  const auto summary = summarize(all);
  {
    std::ofstream out = open_output(dir / "summary.csv");
    write_summary_csv(out, summary);
    if (!out) throw Error(ErrorCode::kIo, "write failed for summary.csv");
  }
  for (const auto& s : summary) {
    log << method_name(s.method) << ": " << format_accuracy(s.mean, s.std) << " (" << s.seeds
        << " seeds)\n";
  }
  return all;
}

std::vector<CryptoBenchRow> bench_crypto(int bits, const std::vector<int>& embed_dims,
                                         int repetitions, std::uint64_t seed) {
  if (repetitions < 1) throw Error(ErrorCode::kInvalidArgument, "repetitions must be >= 1");
  if (embed_dims.empty()) throw Error(ErrorCode::kInvalidArgument, "no payload dimensions");
  constexpr int kClients = 5;
  constexpr int kThreshold = 3;
  constexpr int kClasses = 6;
  constexpr int kFeatureDim = 512;

  RngStream key_rng(seed, 0x11);
  const crypto::ThresholdKeys keys = crypto::keygen(bits, kClients, kThreshold, key_rng);
  crypto::FixedPointCodec codec;
  codec.value_bound = 1.0;
  codec.max_summands = kClients;
  codec.validate(keys.public_key);

  RngStream value_rng(seed, 0x20);
  RngStream enc_rng(seed, 0x21);
  auto time_payload = [&](std::size_t values, std::vector<double>& times) {
    Vec64 v(static_cast<Eigen::Index>(values));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = value_rng.uniform(-1.0, 1.0);
    for (int r = 0; r < repetitions; ++r) {
      const auto start = std::chrono::steady_clock::now();
      auto cts = crypto::encrypt_vector(keys.public_key, v, codec, enc_rng);
      const auto stop = std::chrono::steady_clock::now();
      if (cts.size() != values) throw Error(ErrorCode::kProtocol, "ciphertext count mismatch");
      times.push_back(std::chrono::duration<double>(stop - start).count());
    }
  };

  std::vector<CryptoBenchRow> rows;
  for (int d : embed_dims) {
    if (d < 1) throw Error(ErrorCode::kInvalidArgument, "embedding dimension must be >= 1");
    CryptoBenchRow row;
    row.bits = bits;
    row.embed_dim = d;
    row.repetitions = repetitions;
    row.prototype_values = static_cast<std::size_t>(kClasses) * static_cast<std::size_t>(d);
    row.head_values = static_cast<std::size_t>(
        param_count(HeadShape::with_depth(kFeatureDim, d, kClasses, 1, d)));
    std::vector<double> proto_t;
    std::vector<double> head_t;
    time_payload(row.prototype_values, proto_t);
    time_payload(row.head_values, head_t);
    row.prototype_mean_s = mean_of(proto_t);
    row.prototype_std_s = sample_std(proto_t);
    row.head_mean_s = mean_of(head_t);
    row.head_std_s = sample_std(head_t);
    row.ratio = row.head_mean_s / row.prototype_mean_s;
    rows.push_back(row);
  }
  return rows;
}

void cmd_bench_crypto(int bits, const std::vector<int>& embed_dims,
                      const std::filesystem::path& out, int repetitions, std::ostream& log) {
  const auto rows = bench_crypto(bits, embed_dims, repetitions);
  std::ofstream f = open_output(out);
  f << kBenchHeader << '\n';
  for (const auto& r : rows) {
    f << r.bits << ',' << r.embed_dim << ',' << r.prototype_values << ',' << r.head_values << ','
      << r.repetitions << ',' << fmt(r.prototype_mean_s) << ',' << fmt(r.prototype_std_s) << ','
      << fmt(r.head_mean_s) << ',' << fmt(r.head_std_s) << ',' << fmt(r.ratio) << '\n';
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "bits=%d d_b=%d prototypes(%zu values): %.4f +- %.4f s  "
                  "head(%zu values): %.3f +- %.3f s  ratio=%.1f\n",
                  r.bits, r.embed_dim, r.prototype_values, r.prototype_mean_s, r.prototype_std_s,
                  r.head_values, r.head_mean_s, r.head_std_s, r.ratio);
    log << buf;
  }
  if (!f) throw Error(ErrorCode::kIo, "write failed for " + out.string());
}

std::vector<SweepRow> privacy_sweep(const RunConfig& config, const std::vector<double>& epsilons) {
  for (double e : epsilons) {
    if (!(e > 0.0)) throw Error(ErrorCode::kInvalidConfig, "epsilons must be positive");
  }
  const PrivacySettings defaults = config.base.dp.value_or(PrivacySettings{});
  auto run_final = [&](ExperimentConfig cfg, SweepRow row) {
    try {
      Federation fed(cfg, generate(cfg.effective_data()));
      if (fed.session().noise) {
        const NoiseSpec& n = *fed.session().noise;
        row.sigma = n.sigma;
        row.sensitivity = n.sensitivity;
        row.per_client_std = row.mode == "split" ? n.per_client_std : n.local_std;
      }
      MetricsRow last = fed.evaluate_initial();
      for (int l = 0; l < cfg.rounds; ++l) last = fed.run_round();
      row.final_accuracy = last.mean_accuracy;
    } catch (const Error& e) {
      throw with_context(e, "epsilon=" + fmt(row.epsilon) + " mode=" + row.mode +
                                " seed=" + std::to_string(row.seed));
    }
    return row;
  };

  std::vector<SweepRow> rows;
  for (std::uint64_t seed : config.seeds) {
    ExperimentConfig control = config.expand(Method::kFedPH, seed);
    control.dp.reset();
    rows.push_back(run_final(control, SweepRow{std::numeric_limits<double>::infinity(), "none",
                                               seed, 0, 0, 0, 0}));
    for (double eps : epsilons) {
      for (NoiseMode mode : {NoiseMode::kLocal, NoiseMode::kSplit}) {
        ExperimentConfig cfg = config.expand(Method::kFedPH, seed);
        PrivacySettings p = defaults;
        p.epsilon = eps;
        p.mode = mode;
        cfg.dp = p;
        rows.push_back(
            run_final(cfg, SweepRow{eps, std::string(noise_mode_name(mode)), seed, 0, 0, 0, 0}));
      }
    }
  }
  return rows;
}

void cmd_privacy_sweep(const std::filesystem::path& config, const std::vector<double>& epsilons,
                       const std::filesystem::path& out_dir, std::ostream& log) {
  const RunConfig rc = load_with_env(config);
  const auto rows = privacy_sweep(rc, epsilons);
  ensure_dir(out_dir);
  std::ofstream f = open_output(out_dir / "privacy_sweep.csv");
  f << kSweepHeader << '\n';
  for (const auto& r : rows) {
    f << fmt(r.epsilon) << ',' << r.mode << ',' << r.seed << ',' << fmt(r.final_accuracy) << ','
      << fmt(r.sigma) << ',' << fmt(r.sensitivity) << ',' << fmt(r.per_client_std) << '\n';
    log << "epsilon=" << fmt(r.epsilon) << " mode=" << r.mode << " seed=" << r.seed
        << " per_client_std=" << fmt(r.per_client_std)
        << " final_accuracy=" << fmt(r.final_accuracy) << '\n';
  }
  if (!f) throw Error(ErrorCode::kIo, "write failed for privacy_sweep.csv");
}

std::vector<double> parse_epsilons(std::string_view list) {
  std::vector<double> out;
  std::string_view rest = list;
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    std::string item(rest.substr(0, comma));
    if (item == "inf" || item == "infinity") {
      out.push_back(std::numeric_limits<double>::infinity());
    } else {
      char* end = nullptr;
      const double v = std::strtod(item.c_str(), &end);
      if (item.empty() || end != item.c_str() + item.size() || !(v > 0.0)) {
        throw Error(ErrorCode::kInvalidArgument, "bad epsilon '" + item + "'");
      }
      out.push_back(v);
    }
    rest = comma == std::string_view::npos ? std::string_view() : rest.substr(comma + 1);
  }
  if (out.empty()) throw Error(ErrorCode::kInvalidArgument, "empty epsilon list");
  return out;
}

std::vector<int> parse_int_list(std::string_view list) {
  std::vector<int> out;
  std::string_view rest = list;
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    std::string_view item = rest.substr(0, comma);
    int v = 0;
    auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || ec != std::errc() || p != item.data() + item.size()) {
      throw Error(ErrorCode::kInvalidArgument, "bad integer '" + std::string(item) + "'");
    }
    out.push_back(v);
    rest = comma == std::string_view::npos ? std::string_view() : rest.substr(comma + 1);
  }
  if (out.empty()) throw Error(ErrorCode::kInvalidArgument, "empty integer list");
  return out;
}

std::string error_line(const Error& e) {
  std::string msg;
  for (char c : std::string(e.what())) {
    if (c == '"' || c == '\\') msg += '\\';
    if (c == '\n') {
      msg += "\\n";
      continue;
    }
    msg += c;
  }
  return "error code=" + std::string(error_code_name(e.code())) + " message=\"" + msg + "\"";
}

}  // namespace protofed
