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

#include "protofed/federation.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace protofed {
namespace {

// Stream ids. Client streams add the client id.
constexpr std::uint64_t kInitStream = 0x1000;
constexpr std::uint64_t kNoiseStream = 0x2000;
constexpr std::uint64_t kBatchStream = 0x3000;
constexpr std::uint64_t kCryptoStream = 0x4000;
constexpr std::uint64_t kServerStream = 0x10;
constexpr std::uint64_t kDealerStream = 0x11;
constexpr std::uint64_t kGlobalInitStream = 0x12;
constexpr std::uint64_t kBackboneSeedSalt = 0x6261636b626f6e65ull;

// Codec headroom for Gaussian noise, in standard deviations.
constexpr double kNoiseHeadroom = 16.0;

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

Error with_context(const Error& e, const std::string& prefix) {
  return Error(e.code(), prefix + ": " + e.what());
}

Mat64 stack_features(const std::vector<Sample>& samples, int raw_dim) {
  Mat64 x(raw_dim, static_cast<Eigen::Index>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].x.size() != raw_dim) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "sample has " + std::to_string(samples[i].x.size()) +
                      " features, backbone expects " + std::to_string(raw_dim));
    }
    x.col(static_cast<Eigen::Index>(i)) = samples[i].x;
  }
  return x;
}

std::vector<int> labels_of(const std::vector<Sample>& samples) {
  std::vector<int> y;
  y.reserve(samples.size());
  for (const auto& s : samples) y.push_back(s.y);
  return y;
}

template <class T>
T expect_message(RoundMessage msg, std::uint32_t round, const char* what) {
  T* m = std::get_if<T>(&msg);
  if (m == nullptr) {
    throw Error(ErrorCode::kProtocol, std::string("expected ") + what + ", got tag " +
                                          std::to_string(static_cast<int>(message_tag(msg))));
  }
  if (m->round != round) {
    throw Error(ErrorCode::kProtocol, std::string(what) + " for round " +
                                          std::to_string(m->round) + " during round " +
                                          std::to_string(round));
  }
  return std::move(*m);
}

// Keeps classes that received no contribution this round, flagged as echoes.
void echo_missing(PrototypeSet& fresh, const PrototypeSet& previous) {
  if (!previous.initialized) return;
  for (const auto& [cls, proto] : previous.entries) {
    if (fresh.contains(cls)) continue;
    ClassPrototype echo = proto;
    echo.count = 0;
    echo.echoed = true;
    fresh.entries.emplace(cls, std::move(echo));
  }
}

}  // namespace

Method parse_method(std::string_view name) {
  if (name == "solo") return Method::kSolo;
  if (name == "fedavg") return Method::kFedAvg;
  if (name == "fedprox") return Method::kFedProx;
  if (name == "fedproto") return Method::kFedProto;
  if (name == "fedph") return Method::kFedPH;
  throw Error(ErrorCode::kInvalidConfig, "unknown method '" + std::string(name) + "'");
}

std::string_view method_name(Method m) {
  switch (m) {
    case Method::kSolo: return "solo";
    case Method::kFedAvg: return "fedavg";
    case Method::kFedProx: return "fedprox";
    case Method::kFedProto: return "fedproto";
    case Method::kFedPH: return "fedph";
  }
  return "unknown";
}

NoiseMode parse_noise_mode(std::string_view name) {
  if (name == "split") return NoiseMode::kSplit;
  if (name == "local") return NoiseMode::kLocal;
  throw Error(ErrorCode::kInvalidConfig, "unknown noise mode '" + std::string(name) + "'");
}

std::string_view noise_mode_name(NoiseMode m) {
  return m == NoiseMode::kSplit ? "split" : "local";
}

Aggregation parse_aggregation(std::string_view name) {
  if (name == "weighted") return Aggregation::kWeighted;
  if (name == "uniform") return Aggregation::kUniform;
  throw Error(ErrorCode::kInvalidConfig, "unknown aggregation '" + std::string(name) + "'");
}

std::string_view aggregation_name(Aggregation a) {
  return a == Aggregation::kWeighted ? "weighted" : "uniform";
}

int ExperimentConfig::projection_depth(int client) const {
  if (model.projection_depths.empty()) return 1;
  return model.projection_depths.at(static_cast<std::size_t>(client));
}

HeadShape ExperimentConfig::head_shape(int client) const {
  return HeadShape::with_depth(model.feature_dim, model.embed_dim, data.classes,
                               projection_depth(client), model.hidden_dim);
}

LossConfig ExperimentConfig::effective_loss() const {
  LossConfig out = loss;
  switch (method) {
    case Method::kFedPH:
      out.regularizer = Regularizer::kContrastive;
      break;
    case Method::kFedProto:
      out.regularizer = Regularizer::kPrototypeL2;
      out.lambda = fedproto_reg.value_or(0.0);
      break;
    default:
      out.lambda = 0.0;
      break;
  }
  return out;
}

DataConfig ExperimentConfig::effective_data() const {
  DataConfig out = data;
  if (uses_prototypes(method) && (crypto.enabled || aggregation == Aggregation::kUniform)) {
    out.require_all_classes = true;
  }
  return out;
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::kInvalidConfig, msg); };
  data.validate();
  loss.validate();
  optim.validate();
  const int m = clients();
  if (rounds < 0) fail("rounds must be >= 0");
  if (local_epochs < 0) fail("local_epochs must be >= 0");
  if (!(clip_bound > 0.0) || !std::isfinite(clip_bound)) fail("clip_bound must be positive");
  if (model.feature_dim < 1 || model.embed_dim < 1 || model.hidden_dim < 1) {
    fail("model dimensions must be positive");
  }
  if (!model.projection_depths.empty()) {
    if (static_cast<int>(model.projection_depths.size()) != m) {
      fail("projection_depths needs one entry per client (" + std::to_string(m) + ")");
    }
    for (int d : model.projection_depths) {
      if (d < 1 || d > 2) fail("projection depth must be 1 or 2");
    }
  }
  if (fedprox_mu.has_value() != (method == Method::kFedProx)) {
    fail("fedprox_mu must be set exactly when the method is fedprox");
  }
  if (fedprox_mu && !(*fedprox_mu >= 0.0)) fail("fedprox_mu must be >= 0");
  if (fedproto_reg.has_value() != (method == Method::kFedProto)) {
    fail("fedproto_reg must be set exactly when the method is fedproto");
  }
  if (fedproto_reg && !(*fedproto_reg >= 0.0)) fail("fedproto_reg must be >= 0");
  if (dp) {
    if (!uses_prototypes(method)) fail("dp applies only to prototype methods");
    if (!(dp->epsilon > 0.0)) fail("epsilon must be positive");
    if (!(dp->delta > 0.0 && dp->delta < 1.0)) fail("delta must lie in (0, 1)");
    if (dp->min_class_count && *dp->min_class_count < 1) fail("min_class_count must be >= 1");
    if (dp->mode == NoiseMode::kSplit && (honest_clients < 2 || honest_clients > m)) {
      fail("honest_clients t must satisfy 2 <= t <= m");
    }
  }
  if (crypto.enabled) {
    if (!uses_prototypes(method)) fail("crypto applies only to prototype methods");
    if (crypto.bits != 512 && crypto.bits != 1024 && crypto.bits != 2048) {
      fail("crypto bits must be 512, 1024 or 2048");
    }
    if (crypto.fractional_bits < 1 || crypto.fractional_bits > 52) {
      fail("fractional_bits must lie in [1, 52]");
    }
    const int k = m - honest_clients + 1;
    if (honest_clients < 1 || k < 2 || k > m) {
      fail("decryption threshold m - t + 1 must lie in [2, m] (m=" + std::to_string(m) +
           ", t=" + std::to_string(honest_clients) + ")");
    }
  }
  if (uses_weight_averaging(method)) {
    for (int i = 1; i < m; ++i) {
      if (projection_depth(i) != projection_depth(0)) {
        throw Error(ErrorCode::kModelHeterogeneity,
                    std::string(method_name(method)) +
                        " averages parameters and needs identical heads; client 0 has depth " +
                        std::to_string(projection_depth(0)) + ", client " + std::to_string(i) +
                        " has depth " + std::to_string(projection_depth(i)));
      }
    }
  }
}

int min_class_count(std::span<const ClientDataset> datasets) {
  int best = std::numeric_limits<int>::max();
  for (const auto& d : datasets) {
    for (int c : d.class_counts) {
      if (c > 0) best = std::min(best, c);
    }
  }
  if (best == std::numeric_limits<int>::max()) {
    throw Error(ErrorCode::kDegenerateInput, "no client holds any training sample");
  }
  return best;
}

Session make_session(const ExperimentConfig& config, std::span<const ClientDataset> datasets,
                     std::vector<crypto::KeyShare>* shares_out) {
  config.validate();
  const int m = config.clients();
  if (static_cast<int>(datasets.size()) != m) {
    throw Error(ErrorCode::kInvalidConfig, "expected " + std::to_string(m) + " datasets, got " +
                                               std::to_string(datasets.size()));
  }
  Session s;
  s.config = config;
  s.backbone = std::make_shared<const BackboneSpec>(BackboneSpec::from_seed(
      config.data.raw_dim, config.model.feature_dim, config.seed ^ kBackboneSeedSalt));

  if (config.dp && std::isfinite(config.dp->epsilon)) {
    DpConfig dp;
    dp.epsilon = config.dp->epsilon;
    dp.delta = config.dp->delta;
    dp.clip_bound = config.clip_bound;
    dp.clients = m;
    // Local mode does not split, so t only matters for the split mode.
    dp.honest_clients = config.dp->mode == NoiseMode::kSplit ? config.honest_clients : 2;
    if (dp.clients < 2) dp.clients = 2;
    const int n_min = config.dp->min_class_count.value_or(min_class_count(datasets));
    s.noise = NoiseSpec::from_config(dp, n_min);
  }

  if (config.crypto.enabled) {
    s.decryption_threshold = m - config.honest_clients + 1;
    RngStream dealer(config.seed, kDealerStream);
    crypto::ThresholdKeys keys = crypto::keygen(config.crypto.bits, m, s.decryption_threshold,
                                                dealer);
    s.public_key = keys.public_key;
    s.codec.fractional_bits = config.crypto.fractional_bits;
    double headroom = 0.0;
    if (s.noise) {
      const double std = config.dp->mode == NoiseMode::kSplit ? s.noise->per_client_std
                                                             : s.noise->local_std;
      headroom = kNoiseHeadroom * std;
    }
    s.codec.value_bound = config.clip_bound + headroom;
    s.codec.max_summands = m;
    s.codec.validate(*s.public_key);
    if (shares_out != nullptr) *shares_out = std::move(keys.shares);
  }
  return s;
}

ClientState::ClientState(int id, ClientDataset dataset, const Session& session)
    : client_id(id),
      data(std::move(dataset)),
      init_rng(session.config.seed, kInitStream + static_cast<std::uint64_t>(id)),
      noise_rng(session.config.seed, kNoiseStream + static_cast<std::uint64_t>(id)),
      batch_rng(session.config.seed, kBatchStream + static_cast<std::uint64_t>(id)),
      crypto_rng(session.config.seed, kCryptoStream + static_cast<std::uint64_t>(id)),
      head(session.config.head_shape(id), init_rng),
      globals(PrototypeSet::uninitialized(session.config.data.classes,
                                          session.config.model.embed_dim)) {
  const int raw_dim = session.backbone->input_dim();
  train_features = session.backbone->forward_batch(stack_features(data.train, raw_dim));
  test_features = session.backbone->forward_batch(stack_features(data.test, raw_dim));
  train_labels = labels_of(data.train);
  test_labels = labels_of(data.test);
}

LossBreakdown train_epochs(ClientState& state, const PrototypeSet& globals,
                           const Session& session, const HeadWeights* anchor, double prox_mu) {
  const ExperimentConfig& cfg = session.config;
  const LossConfig loss_cfg = cfg.effective_loss();
  const auto n = static_cast<std::size_t>(state.train_features.cols());
  const auto batch = static_cast<std::size_t>(cfg.optim.batch_size);
  const bool prox = anchor != nullptr && prox_mu > 0.0;
  const Vec64 anchor_flat = prox ? anchor->flatten() : Vec64();

  std::vector<std::size_t> order(n);
  LossBreakdown sum;
  int batches = 0;
  for (int epoch = 0; epoch < cfg.local_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) {
      std::swap(order[i - 1], order[state.batch_rng.below(i)]);
    }
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t count = std::min(batch, n - start);
      Mat64 xb(state.train_features.rows(), static_cast<Eigen::Index>(count));
      std::vector<int> yb(count);
      for (std::size_t j = 0; j < count; ++j) {
        xb.col(static_cast<Eigen::Index>(j)) =
            state.train_features.col(static_cast<Eigen::Index>(order[start + j]));
        yb[j] = state.train_labels[order[start + j]];
      }
      BatchResult r = batch_loss_and_grads(state.head.weights, xb, yb, globals, loss_cfg,
                                           cfg.clip_bound);
      if (prox) {
        const Vec64 diff = state.head.weights.flatten() - anchor_flat;
        Vec64 g = r.grads.flatten();
        g += prox_mu * diff;
        r.grads.assign_flat(g);
        const double term = 0.5 * prox_mu * diff.squaredNorm();
        r.loss.regularizer += term;
        r.loss.total += term;
      }
      sgd_step(state.head, r.grads, cfg.optim);
      sum.supervised += r.loss.supervised;
      sum.regularizer += r.loss.regularizer;
      sum.total += r.loss.total;
      ++batches;
    }
  }
  if (batches > 0) {
    sum.supervised /= batches;
    sum.regularizer /= batches;
    sum.total /= batches;
  }
  return sum;
}

std::optional<RoundMessage> local_training(ClientState& state, const PrototypeSet& globals,
                                           const Session& session, std::uint32_t round) {
  const ExperimentConfig& cfg = session.config;
  if (globals.initialized && !globals.empty() && globals.dim() != cfg.model.embed_dim) {
    throw Error(ErrorCode::kDimensionMismatch,
                "global prototypes have dimension " + std::to_string(globals.dim()) +
                    ", expected " + std::to_string(cfg.model.embed_dim));
  }
  state.globals = globals;
  state.last_encrypt_ms = 0.0;

  if (cfg.method == Method::kFedProx) {
    const HeadWeights anchor = state.head.weights;
    state.last_loss = train_epochs(state, globals, session, &anchor, *cfg.fedprox_mu);
  } else {
    state.last_loss = train_epochs(state, globals, session);
  }
  const auto id = static_cast<std::uint32_t>(state.client_id);

  if (cfg.method == Method::kSolo) return std::nullopt;
  if (uses_weight_averaging(cfg.method)) {
    return HeadWeightsMsg{round, id, static_cast<std::uint64_t>(state.train_features.cols()),
                          state.head.weights.flatten()};
  }

  PrototypeSet locals = local_prototypes(state.head.weights, state.train_features,
                                         state.train_labels, cfg.clip_bound);
  const bool count_free = cfg.crypto.enabled || cfg.aggregation == Aggregation::kUniform;
  for (int j = 0; j < cfg.data.classes; ++j) {
    if (locals.contains(j)) continue;
    if (count_free) {
      throw Error(ErrorCode::kMissingClass,
                  "client " + std::to_string(state.client_id) + " has no samples of class " +
                      std::to_string(j) + "; count-free aggregation needs every class");
    }
    // Zero-count padding: the weighted average ignores it, and the message
    // does not reveal which classes the client holds.
    locals.entries.emplace(j, ClassPrototype{Vec64::Zero(cfg.model.embed_dim), 0, false});
  }
  if (session.noise) {
    locals = cfg.dp->mode == NoiseMode::kSplit
                 ? perturb_split(locals, *session.noise, state.noise_rng)
                 : perturb_local(locals, *session.noise, state.noise_rng);
  }
  if (!cfg.crypto.enabled) return PlainUpdateMsg{round, id, std::move(locals)};

  if (!state.key_share) {
    throw Error(ErrorCode::kKeyMismatch, "client holds no key share");
  }
  const int classes = cfg.data.classes;
  const int d = cfg.model.embed_dim;
  Vec64 flat(static_cast<Eigen::Index>(classes) * d);
  for (int j = 0; j < classes; ++j) {
    flat.segment(static_cast<Eigen::Index>(j) * d, d) = locals.at(j).vector;
  }
  const auto start = Clock::now();
  auto cts = crypto::encrypt_vector(*session.public_key, flat, session.codec, state.crypto_rng);
  state.last_encrypt_ms = elapsed_ms(start);
  return EncryptedUpdateMsg{round, id, std::move(cts)};
}

double evaluate_head(const HeadWeights& head, const ClientState& state, const Session& session) {
  const Eigen::Index n = state.test_features.cols();
  if (n == 0) return 0.0;
  Mat64 z = project_batch(head, state.test_features).output;
  const double bound = session.config.clip_bound;
  for (Eigen::Index c = 0; c < n; ++c) {
    const double norm = z.col(c).norm();
    if (norm > bound) z.col(c) *= bound / norm;
  }
  const Mat64 logits = classify_batch(head, z);
  int correct = 0;
  for (Eigen::Index c = 0; c < n; ++c) {
    Eigen::Index best = 0;
    logits.col(c).maxCoeff(&best);
    if (best == state.test_labels[static_cast<std::size_t>(c)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

double evaluate_client(const ClientState& state, const Session& session) {
  return evaluate_head(state.head.weights, state, session);
}

Vec64 average_weights(std::span<const HeadWeightsMsg> updates) {
  if (updates.empty()) throw Error(ErrorCode::kInvalidArgument, "no weight updates");
  std::uint64_t total = 0;
  for (const auto& u : updates) {
    if (u.weights.size() != updates.front().weights.size()) {
      throw Error(ErrorCode::kModelHeterogeneity, "head parameter vectors differ in size");
    }
    total += u.sample_count;
  }
  if (total == 0) throw Error(ErrorCode::kDegenerateInput, "all sample counts are zero");
  Vec64 out = Vec64::Zero(updates.front().weights.size());
  for (const auto& u : updates) {
    out += (static_cast<double>(u.sample_count) / static_cast<double>(total)) * u.weights;
  }
  return out;
}

Federation::Federation(const ExperimentConfig& config, std::vector<ClientDataset> datasets,
                       Network::Kind transport)
    : server_{PrototypeSet::uninitialized(config.data.classes, config.model.embed_dim),
              std::nullopt,
              std::nullopt,
              0,
              {},
              RngStream(config.seed, kServerStream)},
      network_((config.validate(), config.clients()), transport) {
  std::vector<crypto::KeyShare> shares;
  session_ = make_session(config, datasets, &shares);
  server_.public_key = session_.public_key;
  const int m = config.clients();
  clients_.reserve(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    clients_.emplace_back(i, std::move(datasets[static_cast<std::size_t>(i)]), session_);
    if (!shares.empty()) clients_.back().key_share = shares[static_cast<std::size_t>(i)];
  }
  if (uses_weight_averaging(config.method)) {
    RngStream init(config.seed, kGlobalInitStream);
    server_.global_weights = HeadWeights::uniform_init(config.head_shape(0), init);
  }
  uplink_values_.assign(static_cast<std::size_t>(m), 0.0);
}

MetricsRow Federation::evaluate_initial() {
  network_.reset_stats();
  std::fill(uplink_values_.begin(), uplink_values_.end(), 0.0);
  for (auto& c : clients_) {
    c.last_loss = {};
    c.last_encrypt_ms = 0.0;
  }
  return finish_row(0, 0.0);
}

MetricsRow Federation::run_round() {
  const int round = server_.round + 1;
  try {
    network_.reset_stats();
    std::fill(uplink_values_.begin(), uplink_values_.end(), 0.0);
    if (uses_prototypes(session_.config.method)) return run_prototype_round();
    if (uses_weight_averaging(session_.config.method)) return run_weight_round();
    return run_solo_round();
  } catch (const Error& e) {
    throw with_context(e, "round " + std::to_string(round));
  }
}

MetricsRow Federation::run_prototype_round() {
  const auto start = Clock::now();
  const auto round = static_cast<std::uint32_t>(++server_.round);
  const int m = session_.config.clients();
  const bool encrypted = session_.config.crypto.enabled;

  std::vector<PrototypeSet> plain;
  std::vector<crypto::Ciphertext> folded;
  for (int i = 0; i < m; ++i) {
    network_.server_end(i).send(GlobalPrototypesMsg{round, server_.globals});
    ClientState& client = clients_[static_cast<std::size_t>(i)];
    try {
      auto msg = expect_message<GlobalPrototypesMsg>(network_.client_end(i).recv(), round,
                                                     "global prototypes");
      auto update = local_training(client, msg.prototypes, session_, round);
      uplink_values_[static_cast<std::size_t>(i)] = static_cast<double>(payload_values(*update));
      network_.client_end(i).send(*update);
    } catch (const Error& e) {
      throw with_context(e, "client " + std::to_string(i));
    }

    RoundMessage incoming = network_.server_end(i).recv();
    if (encrypted) {
      auto up = expect_message<EncryptedUpdateMsg>(std::move(incoming), round, "encrypted update");
      const auto expected = static_cast<std::size_t>(session_.config.data.classes) *
                            static_cast<std::size_t>(session_.config.model.embed_dim);
      if (up.client_id != static_cast<std::uint32_t>(i) || up.ciphertexts.size() != expected) {
        throw Error(ErrorCode::kProtocol, "malformed encrypted update from client " +
                                              std::to_string(i));
      }
      folded = folded.empty() ? std::move(up.ciphertexts)
                              : crypto::add_vectors(*server_.public_key, folded, up.ciphertexts);
    } else {
      auto up = expect_message<PlainUpdateMsg>(std::move(incoming), round, "plain update");
      if (up.client_id != static_cast<std::uint32_t>(i)) {
        throw Error(ErrorCode::kProtocol, "update carries client id " +
                                              std::to_string(up.client_id) + ", expected " +
                                              std::to_string(i));
      }
      plain.push_back(std::move(up.prototypes));
    }
  }

  PrototypeSet fresh;
  if (encrypted) {
    fresh = decrypt_aggregate(folded, round);
  } else if (session_.config.aggregation == Aggregation::kUniform) {
    fresh = aggregate_uniform(plain, m);
  } else {
    fresh = aggregate_weighted(plain);
  }
  echo_missing(fresh, server_.globals);
  fresh.initialized = true;
  server_.globals = std::move(fresh);
  return finish_row(round, elapsed_ms(start));
}

PrototypeSet Federation::decrypt_aggregate(const std::vector<crypto::Ciphertext>& folded,
                                           std::uint32_t round) {
  const int m = session_.config.clients();
  const int k = session_.decryption_threshold;
  const crypto::PublicKey& pk = *server_.public_key;

  std::vector<int> ids(static_cast<std::size_t>(m));
  std::iota(ids.begin(), ids.end(), 0);
  for (int i = 0; i < k; ++i) {
    const auto j = i + static_cast<int>(server_.rng.below(static_cast<std::uint64_t>(m - i)));
    std::swap(ids[static_cast<std::size_t>(i)], ids[static_cast<std::size_t>(j)]);
  }
  ids.resize(static_cast<std::size_t>(k));
  std::sort(ids.begin(), ids.end());
  server_.decryption_set = ids;

  std::vector<std::vector<crypto::DecryptionShare>> shares;
  for (int i : ids) {
    network_.server_end(i).send(ShareRequestMsg{round, folded});
    ClientState& client = clients_[static_cast<std::size_t>(i)];
    try {
      auto req = expect_message<ShareRequestMsg>(network_.client_end(i).recv(), round,
                                                 "share request");
      auto partial = crypto::partial_decrypt_vector(pk, req.ciphertexts, *client.key_share);
      network_.client_end(i).send(
          ShareResponseMsg{round, static_cast<std::uint32_t>(i), std::move(partial)});
    } catch (const Error& e) {
      throw with_context(e, "client " + std::to_string(i));
    }
    auto resp = expect_message<ShareResponseMsg>(network_.server_end(i).recv(), round,
                                                 "share response");
    shares.push_back(std::move(resp.shares));
  }

  const Vec64 sum = crypto::combine_vector(pk, folded, shares, session_.codec, m);
  const int d = session_.config.model.embed_dim;
  PrototypeSet out;
  for (int j = 0; j < session_.config.data.classes; ++j) {
    ClassPrototype p;
    p.vector = sum.segment(static_cast<Eigen::Index>(j) * d, d) / static_cast<double>(m);
    p.count = m;
    out.entries.emplace(j, std::move(p));
  }
  return out;
}

MetricsRow Federation::run_weight_round() {
  const auto start = Clock::now();
  const auto round = static_cast<std::uint32_t>(++server_.round);
  const int m = session_.config.clients();
  const Vec64 global_flat = server_.global_weights->flatten();

  std::vector<HeadWeightsMsg> updates;
  for (int i = 0; i < m; ++i) {
    network_.server_end(i).send(HeadWeightsMsg{round, kServerId, 0, global_flat});
    ClientState& client = clients_[static_cast<std::size_t>(i)];
    try {
      auto msg = expect_message<HeadWeightsMsg>(network_.client_end(i).recv(), round,
                                                "global weights");
      if (msg.weights.size() != client.head.weights.size()) {
        throw Error(ErrorCode::kModelHeterogeneity,
                    "global model has " + std::to_string(msg.weights.size()) +
                        " parameters, local head has " +
                        std::to_string(client.head.weights.size()));
      }
      client.head.weights.assign_flat(msg.weights);
      auto update = local_training(client, PrototypeSet{}, session_, round);
      uplink_values_[static_cast<std::size_t>(i)] = static_cast<double>(payload_values(*update));
      network_.client_end(i).send(*update);
    } catch (const Error& e) {
      throw with_context(e, "client " + std::to_string(i));
    }
    auto up = expect_message<HeadWeightsMsg>(network_.server_end(i).recv(), round,
                                             "weight update");
    if (up.client_id != static_cast<std::uint32_t>(i)) {
      throw Error(ErrorCode::kProtocol, "weight update from unexpected client");
    }
    updates.push_back(std::move(up));
  }
  server_.global_weights->assign_flat(average_weights(updates));
  return finish_row(round, elapsed_ms(start));
}

MetricsRow Federation::run_solo_round() {
  const auto start = Clock::now();
  const auto round = static_cast<std::uint32_t>(++server_.round);
  for (auto& client : clients_) {
    try {
      local_training(client, PrototypeSet{}, session_, round);
    } catch (const Error& e) {
      throw with_context(e, "client " + std::to_string(client.client_id));
    }
  }
  return finish_row(round, elapsed_ms(start));
}

MetricsRow Federation::finish_row(std::uint32_t round, double round_ms) {
  const int m = session_.config.clients();
  MetricsRow row;
  row.method = session_.config.method;
  row.seed = session_.config.seed;
  row.round = static_cast<int>(round);
  row.round_ms = round_ms;
  double up = 0.0;
  double down = 0.0;
  for (int i = 0; i < m; ++i) {
    const ClientState& c = clients_[static_cast<std::size_t>(i)];
    const double acc = server_.global_weights ? evaluate_head(*server_.global_weights, c, session_)
                                              : evaluate_client(c, session_);
    row.client_accuracies.push_back(acc);
    row.mean_accuracy += acc;
    row.mean_supervised_loss += c.last_loss.supervised;
    row.mean_regularizer_loss += c.last_loss.regularizer;
    row.encrypt_ms += c.last_encrypt_ms;
    row.uplink_values += uplink_values_[static_cast<std::size_t>(i)];
    up += static_cast<double>(network_.client_end(i).stats().bytes_sent);
    down += static_cast<double>(network_.server_end(i).stats().bytes_sent);
  }
  row.mean_accuracy /= m;
  row.mean_supervised_loss /= m;
  row.mean_regularizer_loss /= m;
  row.encrypt_ms /= m;
  row.uplink_values /= m;
  row.uplink_bytes = up / m;
  row.downlink_bytes = down / m;
  return row;
}

MetricsTable run_experiment(const ExperimentConfig& config) {
  config.validate();
  return run_experiment(config, generate(config.effective_data()));
}

MetricsTable run_experiment(const ExperimentConfig& config, std::vector<ClientDataset> datasets) {
  Federation fed(config, std::move(datasets));
  MetricsTable table;
  table.reserve(static_cast<std::size_t>(config.rounds) + 1);
  table.push_back(fed.evaluate_initial());
  for (int l = 0; l < config.rounds; ++l) table.push_back(fed.run_round());
  return table;
}

}  // namespace protofed
