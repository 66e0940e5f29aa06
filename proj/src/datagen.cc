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

#include "protofed/datagen.h"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <string>
#include <string_view>

namespace protofed {
namespace {

constexpr int kCoverageRetries = 100;
constexpr std::uint64_t kDataStream = 0x100;

[[noreturn]] void invalid(const std::string& what) {
  throw Error(ErrorCode::kInvalidConfig, "data config: " + what);
}

std::vector<int> partition_column(RngStream& rng, double alpha, int clients,
                                  int total) {
  std::vector<double> alphas(static_cast<std::size_t>(clients), alpha);
  return apportion(total, sample_dirichlet(rng, alphas));
}

// Random orthonormal columns via QR of a Gaussian matrix.
Mat64 random_orthonormal(RngStream& rng, int rows, int cols) {
  Mat64 g(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) g(r, c) = rng.normal(0.0, 1.0);
  Eigen::HouseholderQR<Mat64> qr(g);
  Mat64 q = qr.householderQ() * Mat64::Identity(rows, cols);
  // Fix the sign ambiguity so that the result depends only on the draw.
  const Mat64 r = qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
  for (int c = 0; c < cols; ++c) {
    if (r(c, c) < 0.0) q.col(c) = -q.col(c);
  }
  return q;
}

// Orthogonal map via the Cayley transform of a scaled random skew matrix;
// magnitude 0 gives the identity.
Mat64 condition_rotation(RngStream& rng, int dim, double magnitude) {
  Mat64 g(dim, dim);
  for (int c = 0; c < dim; ++c)
    for (int r = 0; r < dim; ++r) g(r, c) = rng.normal(0.0, 1.0);
  const Mat64 skew = (g - g.transpose()) / std::sqrt(2.0 * dim);
  const Mat64 a = 0.5 * magnitude * skew;
  const Mat64 eye = Mat64::Identity(dim, dim);
  return (eye - a).partialPivLu().solve(eye + a);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
}

[[noreturn]] void parse_error(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::kParse,
              "line " + std::to_string(line) + ": " + what);
}

template <typename T>
bool parse_number(std::string_view field, T& out) {
  if (field.empty()) return false;
  if (field.front() == '+') field.remove_prefix(1);
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace

void DataConfig::validate() const {
  if (clients <= 0) invalid("clients must be positive");
  if (classes <= 0) invalid("classes must be positive");
  if (conditions <= 0) invalid("conditions must be positive");
  if (raw_dim <= 0) invalid("raw_dim must be positive");
  if (raw_dim < classes) invalid("raw_dim must be at least the class count");
  if (samples_per_client <= 0) invalid("samples_per_client must be positive");
  if (!(dirichlet_alpha > 0.0)) invalid("dirichlet_alpha must be positive");
  if (!(class_separation >= 0.0)) invalid("class_separation must be >= 0");
  if (!(condition_shift >= 0.0)) invalid("condition_shift must be >= 0");
  if (!(noise_std >= 0.0)) invalid("noise_std must be >= 0");
}

std::vector<int> apportion(int total, const Vec64& weights) {
  const auto n = static_cast<std::size_t>(weights.size());
  std::vector<int> counts(n, 0);
  std::vector<double> remainders(n, 0.0);
  int assigned = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double exact = weights[static_cast<Eigen::Index>(i)] * total;
    counts[i] = static_cast<int>(std::floor(exact));
    remainders[i] = exact - counts[i];
    assigned += counts[i];
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  // Ties resolve to the lower index, keeping the result deterministic.
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return remainders[a] > remainders[b];
  });
  for (std::size_t k = 0; assigned < total; ++k, ++assigned) {
    ++counts[order[k % n]];
  }
  return counts;
}

Eigen::MatrixXi partition_labels(RngStream& rng, double alpha, int clients,
                                 std::span<const int> class_totals) {
  if (!(alpha > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "alpha must be positive");
  }
  if (clients <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "client count must be positive");
  }
  Eigen::MatrixXi counts(clients, static_cast<Eigen::Index>(class_totals.size()));
  for (std::size_t j = 0; j < class_totals.size(); ++j) {
    if (class_totals[j] < 0) {
      throw Error(ErrorCode::kInvalidArgument, "negative class total");
    }
    const auto column = partition_column(rng, alpha, clients, class_totals[j]);
    for (int i = 0; i < clients; ++i) {
      counts(i, static_cast<Eigen::Index>(j)) = column[static_cast<std::size_t>(i)];
    }
  }
  return counts;
}

void recount(ClientDataset& dataset, int classes) {
  if (classes <= 0) {
    classes = 0;
    for (const auto& s : dataset.train) classes = std::max(classes, s.y + 1);
    for (const auto& s : dataset.test) classes = std::max(classes, s.y + 1);
  }
  dataset.class_counts.assign(static_cast<std::size_t>(classes), 0);
  for (const auto& s : dataset.train) {
    ++dataset.class_counts.at(static_cast<std::size_t>(s.y));
  }
}

ClientDataset split_stratified(int client_id, std::vector<Sample> samples,
                               int classes) {
  std::vector<int> totals(static_cast<std::size_t>(classes), 0);
  for (const auto& s : samples) ++totals.at(static_cast<std::size_t>(s.y));
  std::vector<int> seen(totals.size(), 0);
  ClientDataset out;
  out.client_id = client_id;
  for (auto& s : samples) {
    const auto j = static_cast<std::size_t>(s.y);
    const int n_train = totals[j] - totals[j] / 5;
    if (seen[j]++ < n_train) {
      out.train.push_back(std::move(s));
    } else {
      out.test.push_back(std::move(s));
    }
  }
  recount(out, classes);
  return out;
}

std::vector<ClientDataset> generate(const DataConfig& config) {
  config.validate();
  RngStream rng(config.seed, kDataStream);
  const int d = config.raw_dim;
  const int k = config.classes;
  const int m = config.clients;

  // Pairwise distance between orthonormal q_i, q_j is sqrt(2).
  const Mat64 means =
      random_orthonormal(rng, d, k) * (config.class_separation / std::sqrt(2.0));

  std::vector<Mat64> rotations;
  std::vector<Vec64> offsets;
  for (int c = 0; c < config.conditions; ++c) {
    rotations.push_back(condition_rotation(rng, d, config.condition_shift));
    Vec64 dir = sample_gaussian(rng, 0.0, 1.0, d);
    dir.normalize();
    offsets.push_back(config.condition_shift * dir);
  }

  const std::vector<int> class_totals =
      apportion(m * config.samples_per_client, Vec64::Constant(k, 1.0 / k));

  Eigen::MatrixXi counts(m, k);
  for (int j = 0; j < k; ++j) {
    const int total = class_totals[static_cast<std::size_t>(j)];
    std::vector<int> column;
    for (int attempt = 0;; ++attempt) {
      column = partition_column(rng, config.dirichlet_alpha, m, total);
      if (!config.require_all_classes ||
          *std::min_element(column.begin(), column.end()) >= 1) {
        break;
      }
      if (attempt + 1 >= kCoverageRetries) {
        throw Error(ErrorCode::kInvalidConfig,
                    "could not give every client a sample of class " +
                        std::to_string(j) + " after " +
                        std::to_string(kCoverageRetries) + " Dirichlet draws");
      }
    }
    for (int i = 0; i < m; ++i) counts(i, j) = column[static_cast<std::size_t>(i)];
  }

  std::vector<ClientDataset> datasets;
  datasets.reserve(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    const int cond = i % config.conditions;
    const auto& rot = rotations[static_cast<std::size_t>(cond)];
    const auto& off = offsets[static_cast<std::size_t>(cond)];
    std::vector<Sample> samples;
    for (int j = 0; j < k; ++j) {
      const Vec64 center = rot * means.col(j) + off;
      for (int n = 0; n < counts(i, j); ++n) {
        Sample s;
        s.x = center + sample_gaussian(rng, 0.0, config.noise_std, d);
        s.y = j;
        s.condition = cond;
        samples.push_back(std::move(s));
      }
    }
    datasets.push_back(split_stratified(i, std::move(samples), k));
  }
  return datasets;
}

std::vector<ClientDataset> load_features_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot open " + path.string());
  }
  std::string line;
  std::size_t line_no = 0;
  std::size_t dim = 0;
  bool have_header = false;
  std::map<int, std::vector<Sample>> by_client;
  int max_label = -1;

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_commas(line);
    if (!have_header) {
      if (fields.size() < 4 || fields[0] != "client_id" ||
          fields[1] != "condition" || fields[2] != "y") {
        parse_error(line_no, "expected header client_id,condition,y,x0,...");
      }
      for (std::size_t c = 3; c < fields.size(); ++c) {
        if (fields[c] != "x" + std::to_string(c - 3)) {
          parse_error(line_no, "bad feature column name '" +
                                   std::string(fields[c]) + "'");
        }
      }
      dim = fields.size() - 3;
      have_header = true;
      continue;
    }
    if (fields.size() != dim + 3) {
      parse_error(line_no, "dimension inconsistency: expected " +
                               std::to_string(dim + 3) + " fields, got " +
                               std::to_string(fields.size()));
    }
    int client = 0;
    if (!parse_number(fields[0], client) || client < 0) {
      parse_error(line_no, "unknown client id '" + std::string(fields[0]) + "'");
    }
    Sample s;
    if (!parse_number(fields[1], s.condition) || s.condition < 0) {
      parse_error(line_no, "malformed condition '" + std::string(fields[1]) + "'");
    }
    if (!parse_number(fields[2], s.y) || s.y < 0) {
      parse_error(line_no, "malformed label '" + std::string(fields[2]) + "'");
    }
    s.x.resize(static_cast<Eigen::Index>(dim));
    for (std::size_t c = 0; c < dim; ++c) {
      double v = 0.0;
      if (!parse_number(fields[c + 3], v) || !std::isfinite(v)) {
        parse_error(line_no, "malformed value in column x" + std::to_string(c));
      }
      s.x[static_cast<Eigen::Index>(c)] = v;
    }
    max_label = std::max(max_label, s.y);
    by_client[client].push_back(std::move(s));
  }
  if (by_client.empty()) {
    throw Error(ErrorCode::kParse, path.string() + ": empty dataset list");
  }
  std::vector<ClientDataset> out;
  for (auto& [client, samples] : by_client) {
    out.push_back(split_stratified(client, std::move(samples), max_label + 1));
  }
  return out;
}

void write_features_csv(const std::filesystem::path& path,
                        std::span<const ClientDataset> datasets) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  Eigen::Index dim = 0;
  for (const auto& ds : datasets) {
    if (!ds.train.empty()) dim = ds.train.front().x.size();
    else if (!ds.test.empty()) dim = ds.test.front().x.size();
    if (dim > 0) break;
  }
  out << "client_id,condition,y";
  for (Eigen::Index c = 0; c < dim; ++c) out << ",x" << c;
  out << '\n';
  char buf[32];
  auto emit = [&](int client, const Sample& s) {
    if (s.x.size() != dim) {
      throw Error(ErrorCode::kDimensionMismatch, "inconsistent sample dimension");
    }
    out << client << ',' << s.condition << ',' << s.y;
    for (Eigen::Index c = 0; c < dim; ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", s.x[c]);
      out << ',' << buf;
    }
    out << '\n';
  };
  for (const auto& ds : datasets) {
    for (const auto& s : ds.train) emit(ds.client_id, s);
    for (const auto& s : ds.test) emit(ds.client_id, s);
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

}  // namespace protofed
