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
#include <bit>
#include <cmath>
#include <cstring>
#include <vector>

#include <gtest/gtest.h>

#include "test_support.h"

namespace protofed {
namespace {

// Small enough for a few rounds to take milliseconds.
ExperimentConfig small_config(Method method, std::uint64_t seed = 1) {
  ExperimentConfig cfg;
  cfg.method = method;
  cfg.rounds = 3;
  cfg.seed = seed;
  cfg.data.seed = seed;
  cfg.data.samples_per_client = 80;
  cfg.data.raw_dim = 16;
  cfg.model.feature_dim = 32;
  cfg.model.embed_dim = 8;
  cfg.model.hidden_dim = 8;
  if (method == Method::kFedProx) cfg.fedprox_mu = 0.01;
  if (method == Method::kFedProto) cfg.fedproto_reg = 0.01;
  return cfg;
}

std::vector<ClientDataset> data_for(const ExperimentConfig& cfg) {
  return generate(cfg.effective_data());
}

void expect_same_metrics(const MetricsTable& a, const MetricsTable& b) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t r = 0; r < a.size(); ++r) {
    EXPECT_EQ(a[r].round, b[r].round);
    EXPECT_EQ(a[r].mean_accuracy, b[r].mean_accuracy);
    EXPECT_EQ(a[r].client_accuracies, b[r].client_accuracies);
    EXPECT_EQ(a[r].mean_supervised_loss, b[r].mean_supervised_loss);
    EXPECT_EQ(a[r].mean_regularizer_loss, b[r].mean_regularizer_loss);
    EXPECT_EQ(a[r].uplink_bytes, b[r].uplink_bytes);
    EXPECT_EQ(a[r].downlink_bytes, b[r].downlink_bytes);
    EXPECT_EQ(a[r].uplink_values, b[r].uplink_values);
  }
}

const PlainUpdateMsg& as_plain(const std::optional<RoundMessage>& msg) {
  EXPECT_TRUE(msg.has_value());
  return std::get<PlainUpdateMsg>(*msg);
}

TEST(ConfigTest, MethodNamesRoundtrip) {
  for (Method m : {Method::kSolo, Method::kFedAvg, Method::kFedProx, Method::kFedProto,
                   Method::kFedPH}) {
    EXPECT_EQ(parse_method(method_name(m)), m);
  }
  EXPECT_PROTOFED_ERROR(parse_method("fedsgd"), ErrorCode::kInvalidConfig);
  EXPECT_EQ(parse_noise_mode("local"), NoiseMode::kLocal);
  EXPECT_EQ(parse_aggregation("uniform"), Aggregation::kUniform);
}

TEST(ConfigTest, MethodSpecificFieldsMustMatchMethod) {
  ExperimentConfig cfg = small_config(Method::kFedPH);
  cfg.fedprox_mu = 0.1;
  EXPECT_PROTOFED_ERROR(cfg.validate(), ErrorCode::kInvalidConfig);
  cfg = small_config(Method::kFedProx);
  cfg.fedprox_mu.reset();
  EXPECT_PROTOFED_ERROR(cfg.validate(), ErrorCode::kInvalidConfig);
  cfg = small_config(Method::kFedProto);
  cfg.fedproto_reg.reset();
  EXPECT_PROTOFED_ERROR(cfg.validate(), ErrorCode::kInvalidConfig);
  cfg = small_config(Method::kFedAvg);
  cfg.dp = PrivacySettings{};
  EXPECT_PROTOFED_ERROR(cfg.validate(), ErrorCode::kInvalidConfig);
  cfg = small_config(Method::kSolo);
  cfg.crypto.enabled = true;
  EXPECT_PROTOFED_ERROR(cfg.validate(), ErrorCode::kInvalidConfig);
}

TEST(ConfigTest, CryptoThresholdBounds) {
  ExperimentConfig cfg = small_config(Method::kFedPH);
  cfg.crypto.enabled = true;
  cfg.crypto.bits = 512;
  cfg.honest_clients = 5;  // k = 1
  EXPECT_PROTOFED_ERROR(cfg.validate(), ErrorCode::kInvalidConfig);
  cfg.honest_clients = 3;
  EXPECT_NO_THROW(cfg.validate());
  cfg.crypto.bits = 1000;
  EXPECT_PROTOFED_ERROR(cfg.validate(), ErrorCode::kInvalidConfig);
}

TEST(ConfigTest, HeterogeneousDepthsRejectedForWeightAveraging) {
  for (Method m : {Method::kFedAvg, Method::kFedProx}) {
    ExperimentConfig cfg = small_config(m);
    cfg.model.projection_depths = {1, 2, 1, 2, 1};
    EXPECT_PROTOFED_ERROR(cfg.validate(), ErrorCode::kModelHeterogeneity);
    EXPECT_PROTOFED_ERROR(run_experiment(cfg), ErrorCode::kModelHeterogeneity);
  }
  ExperimentConfig cfg = small_config(Method::kFedPH);
  cfg.model.projection_depths = {1, 2, 1, 2, 1};
  EXPECT_NO_THROW(cfg.validate());
}

TEST(ConfigTest, EffectiveLossPerMethod) {
  EXPECT_EQ(small_config(Method::kFedAvg).effective_loss().lambda, 0.0);
  EXPECT_EQ(small_config(Method::kSolo).effective_loss().lambda, 0.0);
  const LossConfig proto = small_config(Method::kFedProto).effective_loss();
  EXPECT_EQ(proto.regularizer, Regularizer::kPrototypeL2);
  EXPECT_EQ(proto.lambda, 0.01);
  const LossConfig ph = small_config(Method::kFedPH).effective_loss();
  EXPECT_EQ(ph.regularizer, Regularizer::kContrastive);
  EXPECT_EQ(ph.lambda, 10.0);
}

TEST(LocalTrainingTest, ZeroEpochsGivesUntrainedPrototypes) {
  ExperimentConfig cfg = small_config(Method::kFedPH);
  cfg.local_epochs = 0;
  auto datasets = data_for(cfg);
  const Session session = make_session(cfg, datasets, nullptr);
  ClientState state(0, datasets[0], session);
  const Vec64 before = state.head.weights.flatten();
  const auto msg = local_training(state, PrototypeSet::uninitialized(6, 8), session, 1);
  EXPECT_EQ(state.head.weights.flatten(), before);
  EXPECT_EQ(state.last_loss.total, 0.0);
  const PrototypeSet want =
      local_prototypes(state.head.weights, state.train_features, state.train_labels, cfg.clip_bound);
  for (const auto& [cls, p] : want.entries) EXPECT_EQ(as_plain(msg).prototypes.at(cls).vector, p.vector);
}

TEST(LocalTrainingTest, PlainUpdateMatchesStandaloneLocalPrototypes) {
  ExperimentConfig cfg = small_config(Method::kFedPH);
  cfg.data.require_all_classes = true;
  auto datasets = generate(cfg.data);
  const Session session = make_session(cfg, datasets, nullptr);
  for (int i = 0; i < cfg.clients(); ++i) {
    ClientState state(i, datasets[static_cast<std::size_t>(i)], session);
    const auto msg = local_training(state, PrototypeSet::uninitialized(6, 8), session, 1);
    const PlainUpdateMsg& up = as_plain(msg);
    EXPECT_EQ(up.client_id, static_cast<std::uint32_t>(i));
    const PrototypeSet want = local_prototypes(state.data, state.head.weights, *session.backbone,
                                               cfg.clip_bound);
    ASSERT_EQ(up.prototypes.size(), want.size());
    for (const auto& [cls, p] : want.entries) {
      EXPECT_EQ(up.prototypes.at(cls).vector, p.vector);
      EXPECT_EQ(up.prototypes.at(cls).count, p.count);
    }
  }
}

TEST(LocalTrainingTest, AbsentClassesArePaddedWithZeroCount) {
  ExperimentConfig cfg = small_config(Method::kFedPH);
  auto datasets = data_for(cfg);
  auto& train = datasets[0].train;
  train.erase(std::remove_if(train.begin(), train.end(), [](const Sample& s) { return s.y == 2; }),
              train.end());
  recount(datasets[0], 6);
  const Session session = make_session(cfg, datasets, nullptr);
  ClientState state(0, datasets[0], session);
  const auto msg = local_training(state, PrototypeSet::uninitialized(6, 8), session, 1);
  const PlainUpdateMsg& up = as_plain(msg);
  EXPECT_EQ(up.prototypes.size(), 6u);
  EXPECT_EQ(up.prototypes.at(2).count, 0);
  EXPECT_EQ(up.prototypes.at(2).vector, Vec64::Zero(8));
  EXPECT_EQ(payload_values(*msg), 48u);
}

TEST(LocalTrainingTest, CountFreeAggregationNeedsEveryClass) {
  ExperimentConfig cfg = small_config(Method::kFedPH);
  cfg.aggregation = Aggregation::kUniform;
  auto datasets = data_for(cfg);
  auto& train = datasets[1].train;
  train.erase(std::remove_if(train.begin(), train.end(), [](const Sample& s) { return s.y == 0; }),
              train.end());
  recount(datasets[1], 6);
  Federation fed(cfg, datasets);
  EXPECT_PROTOFED_ERROR(fed.run_round(), ErrorCode::kMissingClass);
}

TEST(LocalTrainingTest, EncryptedUpdateCarriesKTimesDCiphertexts) {
  ExperimentConfig cfg = small_config(Method::kFedPH);
  cfg.model.embed_dim = 64;
  cfg.crypto.enabled = true;
  cfg.crypto.bits = 512;
  auto datasets = data_for(cfg);
  std::vector<crypto::KeyShare> shares;
  const Session session = make_session(cfg, datasets, &shares);
  ASSERT_EQ(shares.size(), 5u);
  EXPECT_EQ(session.decryption_threshold, 3);
  ClientState state(0, datasets[0], session);
  state.key_share = shares[0];
  const auto msg = local_training(state, PrototypeSet::uninitialized(6, 64), session, 1);
  ASSERT_TRUE(std::holds_alternative<EncryptedUpdateMsg>(*msg));
  EXPECT_EQ(std::get<EncryptedUpdateMsg>(*msg).ciphertexts.size(), 384u);
  EXPECT_EQ(payload_values(*msg), 384u);
}

TEST(LocalTrainingTest, SoloSendsNothingAndWeightMethodsSendParameters) {
  ExperimentConfig cfg = small_config(Method::kSolo);
  auto datasets = data_for(cfg);
  Session session = make_session(cfg, datasets, nullptr);
  ClientState solo(0, datasets[0], session);
  EXPECT_FALSE(local_training(solo, PrototypeSet{}, session, 1).has_value());

  cfg = small_config(Method::kFedAvg);
  session = make_session(cfg, datasets, nullptr);
  ClientState avg(0, datasets[0], session);
  const auto msg = local_training(avg, PrototypeSet{}, session, 1);
  const auto& w = std::get<HeadWeightsMsg>(*msg);
  EXPECT_EQ(w.weights.size(), param_count(cfg.head_shape(0)));
  EXPECT_EQ(w.sample_count, datasets[0].train.size());
  EXPECT_EQ(w.weights, avg.head.weights.flatten());
}

TEST(FederationTest, SingleClientGlobalsEqualItsLocals) {
  ExperimentConfig cfg = small_config(Method::kFedPH);
  cfg.data.clients = 1;
  cfg.data.conditions = 1;
  Federation fed(cfg, data_for(cfg));
  for (int r = 0; r < 2; ++r) {
    fed.run_round();
    const ClientState& c = fed.clients()[0];
    const PrototypeSet locals =
        local_prototypes(c.head.weights, c.train_features, c.train_labels, cfg.clip_bound);
    for (const auto& [cls, p] : locals.entries) {
      EXPECT_EQ(fed.server().globals.at(cls).vector, p.vector) << "round " << r << " class " << cls;
    }
  }
}

TEST(FederationTest, WeightedGlobalsAreCountWeightedMeans) {
  ExperimentConfig cfg = small_config(Method::kFedPH);
  Federation fed(cfg, data_for(cfg));
  fed.run_round();
  std::vector<PrototypeSet> locals;
  for (const auto& c : fed.clients()) {
    locals.push_back(local_prototypes(c.head.weights, c.train_features, c.train_labels, cfg.clip_bound));
  }
  const PrototypeSet want = aggregate_weighted(locals);
  for (const auto& [cls, p] : want.entries) {
    EXPECT_LE((fed.server().globals.at(cls).vector - p.vector).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LE(fed.server().globals.at(cls).vector.norm(), cfg.clip_bound + 1e-12);
  }
}

// Replays each round in plaintext from copies of the pre-round client
// states; the noise and batch streams are copied with them.
void expect_encrypted_matches_plaintext_replay(ExperimentConfig cfg, int rounds) {
  cfg.crypto.enabled = true;
  cfg.crypto.bits = 512;
  Federation fed(cfg, data_for(cfg));
  const int m = cfg.clients();
  const double tol = m * std::ldexp(1.0, -cfg.crypto.fractional_bits);
  Session plain_session = fed.session();
  plain_session.config.crypto.enabled = false;
  for (int r = 1; r <= rounds; ++r) {
    std::vector<ClientState> replay = fed.clients();
    const PrototypeSet globals_before = fed.server().globals;
    fed.run_round();
    EXPECT_EQ(fed.server().decryption_set.size(), 3u);
    std::vector<PrototypeSet> locals;
    for (auto& c : replay) {
      auto msg = local_training(c, globals_before, plain_session, static_cast<std::uint32_t>(r));
      locals.push_back(std::get<PlainUpdateMsg>(*msg).prototypes);
    }
    const PrototypeSet want = aggregate_uniform(locals, m);
    for (const auto& [cls, p] : want.entries) {
      EXPECT_LE((fed.server().globals.at(cls).vector - p.vector).cwiseAbs().maxCoeff(), tol)
          << "round " << r << " class " << cls;
    }
  }
}

TEST(FederationTest, EncryptedGlobalsMatchPlaintextUniformAggregate) {
  expect_encrypted_matches_plaintext_replay(small_config(Method::kFedPH), 2);
}

TEST(FederationTest, EncryptedGlobalsMatchReplayedNoisyAggregate) {
  ExperimentConfig cfg = small_config(Method::kFedPH);
  cfg.dp = PrivacySettings{};
  cfg.dp->epsilon = 5.0;
  expect_encrypted_matches_plaintext_replay(cfg, 2);
}

TEST(FederationTest, DecryptionSetIsAFreshSortedSubset) {
  ExperimentConfig cfg = small_config(Method::kFedPH);
  cfg.crypto.enabled = true;
  cfg.crypto.bits = 512;
  Federation fed(cfg, data_for(cfg));
  std::vector<std::vector<int>> sets;
  for (int r = 0; r < 3; ++r) {
    fed.run_round();
    const auto& p = fed.server().decryption_set;
    EXPECT_TRUE(std::is_sorted(p.begin(), p.end()));
    EXPECT_EQ(std::adjacent_find(p.begin(), p.end()), p.end());
    for (int i : p) EXPECT_TRUE(i >= 0 && i < 5);
    sets.push_back(p);
  }
}

TEST(FederationTest, ZeroRoundsGiveOnlyTheInitialRow) {
  ExperimentConfig cfg = small_config(Method::kFedPH);
  cfg.rounds = 0;
  const MetricsTable t = run_experiment(cfg);
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t[0].round, 0);
  EXPECT_EQ(t[0].uplink_bytes, 0.0);
}

TEST(FederationTest, RowsAreWellFormed) {
  for (Method m : {Method::kSolo, Method::kFedAvg, Method::kFedProx, Method::kFedProto,
                   Method::kFedPH}) {
    const ExperimentConfig cfg = small_config(m);
    const MetricsTable t = run_experiment(cfg);
    ASSERT_EQ(t.size(), 4u);
    for (std::size_t r = 0; r < t.size(); ++r) {
      EXPECT_EQ(t[r].round, static_cast<int>(r));
      EXPECT_EQ(t[r].method, m);
      ASSERT_EQ(t[r].client_accuracies.size(), 5u);
      double mean = 0.0;
      for (double a : t[r].client_accuracies) {
        EXPECT_GE(a, 0.0);
        EXPECT_LE(a, 1.0);
        mean += a / 5;
      }
      EXPECT_NEAR(t[r].mean_accuracy, mean, 1e-12);
    }
    if (m == Method::kSolo) {
      EXPECT_EQ(t[1].uplink_bytes, 0.0);
    }
    if (uses_prototypes(m)) {
      EXPECT_EQ(t[1].uplink_values, 6.0 * 8.0);
    }
    if (uses_weight_averaging(m)) {
      EXPECT_EQ(t[1].uplink_values, static_cast<double>(param_count(cfg.head_shape(0))));
    }
  }
}

TEST(FederationTest, ByteCountsMatchEncodedFrames) {
  ExperimentConfig cfg = small_config(Method::kFedPH);
  Federation fed(cfg, data_for(cfg));
  std::vector<double> up(5, 0.0);
  std::vector<double> down(5, 0.0);
  fed.network().set_tap([&](int client, bool from_server, std::span<const std::uint8_t> bytes) {
    (from_server ? down : up)[static_cast<std::size_t>(client)] += static_cast<double>(bytes.size());
  });
  const MetricsRow row = fed.run_round();
  double up_mean = 0.0;
  double down_mean = 0.0;
  for (int i = 0; i < 5; ++i) {
    up_mean += up[static_cast<std::size_t>(i)] / 5;
    down_mean += down[static_cast<std::size_t>(i)] / 5;
  }
  EXPECT_EQ(row.uplink_bytes, up_mean);
  EXPECT_EQ(row.downlink_bytes, down_mean);
}

TEST(FederationTest, DeterministicAcrossRuns) {
  for (Method m : {Method::kFedPH, Method::kFedAvg}) {
    ExperimentConfig cfg = small_config(m, 5);
    if (m == Method::kFedPH) {
      cfg.dp = PrivacySettings{};
      cfg.crypto.enabled = true;
      cfg.crypto.bits = 512;
    }
    expect_same_metrics(run_experiment(cfg), run_experiment(cfg));
  }
}

TEST(FederationTest, StreamTransportMatchesMemoryTransport) {
  ExperimentConfig cfg = small_config(Method::kFedPH);
  cfg.crypto.enabled = true;
  cfg.crypto.bits = 512;
  Federation mem(cfg, data_for(cfg), Network::Kind::kMemory);
  Federation stream(cfg, data_for(cfg), Network::Kind::kStream);
  for (int r = 0; r < 2; ++r) {
    const MetricsRow a = mem.run_round();
    const MetricsRow b = stream.run_round();
    EXPECT_EQ(a.client_accuracies, b.client_accuracies);
    EXPECT_EQ(a.uplink_bytes, b.uplink_bytes);
  }
}

TEST(FederationTest, FedPHWithoutRegularizerEqualsFedProtoWithoutRegularizer) {
  ExperimentConfig ph = small_config(Method::kFedPH);
  ph.loss.lambda = 0.0;
  ph.aggregation = Aggregation::kUniform;
  ExperimentConfig proto = small_config(Method::kFedProto);
  proto.fedproto_reg = 0.0;
  proto.aggregation = Aggregation::kUniform;
  expect_same_metrics(run_experiment(ph), run_experiment(proto));
}

TEST(FederationTest, FedProxWithZeroMuEqualsFedAvg) {
  ExperimentConfig prox = small_config(Method::kFedProx);
  prox.fedprox_mu = 0.0;
  expect_same_metrics(run_experiment(prox), run_experiment(small_config(Method::kFedAvg)));
}

TEST(FederationTest, FedProxTermChangesTraining) {
  ExperimentConfig prox = small_config(Method::kFedProx);
  prox.fedprox_mu = 10.0;
  const MetricsTable a = run_experiment(prox);
  const MetricsTable b = run_experiment(small_config(Method::kFedAvg));
  EXPECT_NE(a.back().mean_supervised_loss, b.back().mean_supervised_loss);
  EXPECT_GT(a.back().mean_regularizer_loss, 0.0);
}

TEST(FederationTest, FedAvgSingleClientKeepsItsWeights) {
  ExperimentConfig cfg = small_config(Method::kFedAvg);
  cfg.data.clients = 1;
  cfg.data.conditions = 1;
  Federation fed(cfg, data_for(cfg));
  fed.run_round();
  EXPECT_EQ(fed.server().global_weights->flatten(), fed.clients()[0].head.weights.flatten());
}

TEST(FederationTest, AverageWeightsBlendsByCount) {
  const Vec64 u = (Vec64(3) << 1, 2, 3).finished();
  const Vec64 v = (Vec64(3) << -1, 0, 7).finished();
  const std::vector<HeadWeightsMsg> updates{HeadWeightsMsg{1, 0, 1, u}, HeadWeightsMsg{1, 1, 3, v}};
  EXPECT_LE((average_weights(updates) - (0.25 * u + 0.75 * v)).cwiseAbs().maxCoeff(), 1e-15);
  const std::vector<HeadWeightsMsg> mixed{HeadWeightsMsg{1, 0, 1, u}, HeadWeightsMsg{1, 1, 1, Vec64(2)}};
  EXPECT_PROTOFED_ERROR(average_weights(mixed), ErrorCode::kModelHeterogeneity);
}

TEST(FederationTest, MixedDepthFedPHRuns) {
  ExperimentConfig cfg = small_config(Method::kFedPH);
  cfg.model.projection_depths = {1, 2, 1, 2, 2};
  Federation fed(cfg, data_for(cfg));
  EXPECT_EQ(fed.clients()[1].head.weights.projection.size(), 2u);
  EXPECT_EQ(fed.clients()[0].head.weights.projection.size(), 1u);
  EXPECT_NO_THROW(fed.run_round());
}

TEST(FederationTest, RoundErrorsCarryTheRoundNumber) {
  ExperimentConfig cfg = small_config(Method::kFedPH);
  cfg.crypto.enabled = true;
  cfg.crypto.bits = 512;
  auto datasets = data_for(cfg);
  auto& train = datasets[3].train;
  train.erase(std::remove_if(train.begin(), train.end(), [](const Sample& s) { return s.y == 4; }),
              train.end());
  recount(datasets[3], 6);
  Federation fed(cfg, datasets);
  try {
    fed.run_round();
    FAIL() << "expected a missing-class error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingClass);
    EXPECT_EQ(std::string(e.what()).rfind("round 1: client 3", 0), 0u) << e.what();
  }
}

bool contains_bytes(std::span<const std::uint8_t> hay, std::span<const std::uint8_t> needle) {
  return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

std::vector<std::uint8_t> big_endian(double a, double b) {
  std::vector<std::uint8_t> out;
  for (double v : {a, b}) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int s = 56; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(bits >> s));
  }
  return out;
}

TEST(FederationTest, RawFeaturesNeverLeaveClients) {
  for (Method m : {Method::kFedPH, Method::kFedAvg}) {
    ExperimentConfig cfg = small_config(m);
    cfg.rounds = 2;
    auto datasets = data_for(cfg);
    Federation fed(cfg, datasets);
    std::vector<std::vector<std::uint8_t>> frames;
    fed.network().set_tap([&](int, bool, std::span<const std::uint8_t> bytes) {
      frames.emplace_back(bytes.begin(), bytes.end());
    });
    fed.run_round();
    fed.run_round();
    ASSERT_FALSE(frames.empty());
    int probes = 0;
    for (const auto& c : fed.clients()) {
      for (std::size_t s = 0; s < c.data.train.size(); s += 7) {
        const Vec64& x = c.data.train[s].x;
        const auto raw = big_endian(x(0), x(1));
        // ReLU zeros are common to every frame, so probe two active units.
        std::vector<double> active;
        const Eigen::Index col = static_cast<Eigen::Index>(s);
        for (Eigen::Index r = 0; r < c.train_features.rows() && active.size() < 2; ++r) {
          if (c.train_features(r, col) != 0.0) active.push_back(c.train_features(r, col));
        }
        ASSERT_EQ(active.size(), 2u);
        const auto feat = big_endian(active[0], active[1]);
        for (const auto& f : frames) {
          ASSERT_FALSE(contains_bytes(f, raw));
          ASSERT_FALSE(contains_bytes(f, feat));
        }
        ++probes;
      }
    }
    EXPECT_GT(probes, 20);
  }
}

// Compile-time: the server's state cannot hold key shares or data, while
// the trait does recognize them.
static_assert(!holds_secret_material<ServerState::FieldTypes>::value);
static_assert(is_secret_material<std::optional<crypto::KeyShare>>::value);
static_assert(is_secret_material<std::vector<Sample>>::value);
static_assert(holds_secret_material<std::tuple<int, ClientDataset>>::value);

TEST(FederationTest, ServerHoldsNoSecretMaterial) {
  ExperimentConfig cfg = small_config(Method::kFedPH);
  cfg.crypto.enabled = true;
  cfg.crypto.bits = 512;
  Federation fed(cfg, data_for(cfg));
  ASSERT_TRUE(fed.server().public_key.has_value());
  for (const auto& c : fed.clients()) {
    ASSERT_TRUE(c.key_share.has_value());
    EXPECT_EQ(c.key_share->key_fingerprint, fed.server().public_key->fingerprint());
  }
}

}  // namespace
}  // namespace protofed
