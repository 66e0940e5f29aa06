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

// Round protocol for prototype exchange (fedph, fedproto) and the
// baselines solo, fedavg and fedprox.
//
// A round of a prototype method:
//   1. server broadcasts GlobalPrototypes to every client;
//   2. each client trains E epochs against them, recomputes its clipped
//      class prototypes, adds noise and uploads them (encrypted or plain);
//   3. the server folds all m updates in client-id order. Encrypted: it
//      multiplies ciphertexts, asks a fresh random set P of k clients for
//      decryption shares, combines them and divides by m. Plain: weighted or
//      uniform averaging.
//
// All m clients take part in every round. The simulation is sequential, so
// results do not depend on scheduling.

#ifndef PROTOFED_FEDERATION_H_
#define PROTOFED_FEDERATION_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <type_traits>
#include <vector>

#include "protofed/datagen.h"
#include "protofed/messages.h"
#include "protofed/model.h"
#include "protofed/objective.h"
#include "protofed/privacy.h"
#include "protofed/prototype.h"
#include "protofed/threshold_paillier.h"
#include "protofed/transport.h"

namespace protofed {

enum class Method { kSolo, kFedAvg, kFedProx, kFedProto, kFedPH };
enum class NoiseMode { kSplit, kLocal };
enum class Aggregation { kWeighted, kUniform };

Method parse_method(std::string_view name);
std::string_view method_name(Method m);
NoiseMode parse_noise_mode(std::string_view name);
std::string_view noise_mode_name(NoiseMode m);
Aggregation parse_aggregation(std::string_view name);
std::string_view aggregation_name(Aggregation a);

inline bool uses_prototypes(Method m) {
  return m == Method::kFedPH || m == Method::kFedProto;
}
inline bool uses_weight_averaging(Method m) {
  return m == Method::kFedAvg || m == Method::kFedProx;
}

struct PrivacySettings {
  double epsilon = 1.0;  // +inf disables noise
  double delta = 1e-5;
  NoiseMode mode = NoiseMode::kSplit;
  // n_min for the sensitivity; by default the smallest positive per-class
  // training count over all clients.
  std::optional<int> min_class_count;
};

struct CryptoSettings {
  bool enabled = false;
  int bits = 2048;
  int fractional_bits = 24;
};

struct ModelSettings {
  int feature_dim = 512;  // d_a
  int embed_dim = 64;     // d_b
  int hidden_dim = 64;    // width of the hidden layer when depth is 2
  // One entry per client; empty means depth 1 everywhere.
  std::vector<int> projection_depths;
};

struct ExperimentConfig {
  Method method = Method::kFedPH;
  int rounds = 50;
  int local_epochs = 1;
  int honest_clients = 3;  // t
  double clip_bound = 3.0;
  Aggregation aggregation = Aggregation::kWeighted;
  std::optional<PrivacySettings> dp;
  CryptoSettings crypto;
  LossConfig loss{.lambda = 10.0};
  OptimConfig optim;
  DataConfig data;
  ModelSettings model;
  std::optional<double> fedprox_mu;    // present iff method == fedprox
  std::optional<double> fedproto_reg;  // present iff method == fedproto
  std::uint64_t seed = 0;

  int clients() const { return data.clients; }
  int projection_depth(int client) const;
  HeadShape head_shape(int client) const;
  // Loss actually minimized by clients under this method.
  LossConfig effective_loss() const;
  // Data config with require_all_classes forced on when aggregation is
  // count-free (encrypted or uniform).
  DataConfig effective_data() const;
  void validate() const;
};

// Everything fixed for the lifetime of an experiment and visible to all
// parties: the frozen backbone, noise calibration, public key and codec.
struct Session {
  ExperimentConfig config;
  std::shared_ptr<const BackboneSpec> backbone;
  std::optional<NoiseSpec> noise;
  std::optional<crypto::PublicKey> public_key;
  crypto::FixedPointCodec codec;
  int decryption_threshold = 0;  // k
};

struct ClientState {
  int client_id = 0;
  ClientDataset data;
  // Backbone outputs, computed once: d_a x n.
  Mat64 train_features;
  std::vector<int> train_labels;
  Mat64 test_features;
  std::vector<int> test_labels;
  RngStream init_rng;
  RngStream noise_rng;
  RngStream batch_rng;
  RngStream crypto_rng;
  HeadParams head;
  std::optional<crypto::KeyShare> key_share;
  PrototypeSet globals;
  // Training-loss means of the last local_training call.
  LossBreakdown last_loss;
  double last_encrypt_ms = 0.0;

  ClientState(int id, ClientDataset dataset, const Session& session);
};

struct ServerState {
  PrototypeSet globals;
  std::optional<crypto::PublicKey> public_key;
  std::optional<HeadWeights> global_weights;  // fedavg / fedprox
  int round = 0;
  std::vector<int> decryption_set;  // client ids in P
  RngStream rng;

  using FieldTypes = std::tuple<PrototypeSet, std::optional<crypto::PublicKey>,
                                std::optional<HeadWeights>, int, std::vector<int>, RngStream>;
};

// Types that must never be reachable from the server.
template <class T>
struct is_secret_material : std::false_type {};
template <>
struct is_secret_material<crypto::KeyShare> : std::true_type {};
template <>
struct is_secret_material<ClientDataset> : std::true_type {};
template <>
struct is_secret_material<Sample> : std::true_type {};
template <class T>
struct is_secret_material<std::optional<T>> : is_secret_material<T> {};
template <class T>
struct is_secret_material<std::vector<T>> : is_secret_material<T> {};

template <class Tuple>
struct holds_secret_material;
template <class... Ts>
struct holds_secret_material<std::tuple<Ts...>>
    : std::bool_constant<(is_secret_material<Ts>::value || ...)> {};

static_assert(!holds_secret_material<ServerState::FieldTypes>::value,
              "server state must not hold key shares or datasets");

struct MetricsRow {
  Method method = Method::kFedPH;
  std::uint64_t seed = 0;
  int round = 0;
  double mean_accuracy = 0.0;
  std::vector<double> client_accuracies;
  double mean_supervised_loss = 0.0;
  double mean_regularizer_loss = 0.0;
  double uplink_bytes = 0.0;    // per client
  double downlink_bytes = 0.0;  // per client
  double uplink_values = 0.0;   // per client, update messages only
  double round_ms = 0.0;
  double encrypt_ms = 0.0;      // per client
};
using MetricsTable = std::vector<MetricsRow>;

// Builds the shared session. When crypto is on, acts as the trusted dealer:
// the key shares are written to `shares_out`, one per client in id order.
Session make_session(const ExperimentConfig& config, std::span<const ClientDataset> datasets,
                     std::vector<crypto::KeyShare>* shares_out);

// Smallest positive per-class training count over all datasets.
int min_class_count(std::span<const ClientDataset> datasets);

// E epochs of local SGD, then the method's outbound update. Prototype
// methods return a PlainUpdate or EncryptedUpdate covering all K classes:
// under weighted aggregation an absent class is a zero vector with count 0,
// under count-free aggregation it is a kMissingClass error. Weight-averaging
// methods return HeadWeights. Solo returns nothing.
std::optional<RoundMessage> local_training(ClientState& state, const PrototypeSet& globals,
                                           const Session& session, std::uint32_t round);

// Local SGD only; returns the mean loss over all batches. `anchor` adds the
// proximal term (mu/2)||w - anchor||^2.
LossBreakdown train_epochs(ClientState& state, const PrototypeSet& globals,
                           const Session& session, const HeadWeights* anchor = nullptr,
                           double prox_mu = 0.0);

// Accuracy of the client's head on its own test split.
double evaluate_client(const ClientState& state, const Session& session);
double evaluate_head(const HeadWeights& head, const ClientState& state, const Session& session);

// Flat parameters averaged with weight sample_count; all must share a size.
Vec64 average_weights(std::span<const HeadWeightsMsg> updates);

// Owns the parties and the network of one experiment.
class Federation {
 public:
  Federation(const ExperimentConfig& config, std::vector<ClientDataset> datasets,
             Network::Kind transport = Network::Kind::kMemory);

  const Session& session() const { return session_; }
  const ServerState& server() const { return server_; }
  std::vector<ClientState>& clients() { return clients_; }
  const std::vector<ClientState>& clients() const { return clients_; }
  Network& network() { return network_; }

  MetricsRow evaluate_initial();
  // Runs the next round; throws with the round number on failure.
  MetricsRow run_round();

 private:
  MetricsRow run_prototype_round();
  MetricsRow run_weight_round();
  MetricsRow run_solo_round();
  MetricsRow finish_row(std::uint32_t round, double round_ms);
  PrototypeSet decrypt_aggregate(const std::vector<crypto::Ciphertext>& folded,
                                 std::uint32_t round);

  Session session_;
  ServerState server_;
  std::vector<ClientState> clients_;
  Network network_;
  std::vector<double> uplink_values_;
};

MetricsTable run_experiment(const ExperimentConfig& config);
MetricsTable run_experiment(const ExperimentConfig& config,
                            std::vector<ClientDataset> datasets);

}  // namespace protofed

#endif  // PROTOFED_FEDERATION_H_
