#include "tfa/contextual.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace tfa {

namespace {

constexpr double kPi = std::numbers::pi;

double norm2(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double dist2(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

std::vector<std::vector<double>> all_tokens(const TokenDataset& data) {
  std::vector<std::vector<double>> toks;
  for (const auto& X : data.sequences)
    for (std::size_t k = 0; k < X.cols(); ++k) toks.push_back(X.col(k));
  return toks;
}

std::vector<std::vector<double>> distinct(const std::vector<std::vector<double>>& v) {
  std::vector<std::vector<double>> out;
  for (const auto& x : v)
    if (std::none_of(out.begin(), out.end(), [&](const auto& y) { return y == x; })) out.push_back(x);
  return out;
}

std::vector<double> random_unit(std::mt19937_64& rng, std::size_t d) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> u(d);
  double nrm = 0;
  while (nrm == 0) {
    for (double& x : u) x = g(rng);
    nrm = norm2(u);
  }
  for (double& x : u) x /= nrm;
  return u;
}

}  // namespace

void TokenDataset::validate() const {
  if (sequences.empty()) throw std::invalid_argument("dataset has no sequences");
  for (const auto& X : sequences)
    if (X.rows() != d || X.cols() != n) throw std::invalid_argument("sequence shape differs from (d, n)");
  const auto toks = distinct(all_tokens(*this));
  for (const auto& t : toks)
    if (norm2(t) > r * (1 + 1e-12)) throw std::invalid_argument("token norm exceeds r");
  for (std::size_t i = 0; i < toks.size(); ++i)
    for (std::size_t j = i + 1; j < toks.size(); ++j)
      if (dist2(toks[i], toks[j]) < phi) throw std::invalid_argument("distinct tokens closer than phi");
}

TokenDataset random_separated_dataset(std::size_t d, std::size_t n, std::size_t N, double r, double phi,
                                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::vector<double>> toks;
  const std::size_t want = n * N;
  int tries = 0;
  while (toks.size() < want) {
    if (++tries > 1000000) throw std::runtime_error("could not draw a phi-separated dataset");
    auto u = random_unit(rng, d);
    const double rad = r * std::pow(unif(rng), 1.0 / static_cast<double>(d));
    for (double& x : u) x *= rad;
    if (std::all_of(toks.begin(), toks.end(), [&](const auto& t) { return dist2(t, u) >= phi; })) toks.push_back(u);
  }
  TokenDataset data{d, n, {}, r, phi};
  for (std::size_t i = 0; i < N; ++i) {
    Matrix X(d, n);
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t q = 0; q < d; ++q) X(q, k) = toks[i * n + k][q];
    data.sequences.push_back(X);
  }
  return data;
}

LabeledDataset random_labeled_dataset(std::size_t d, std::size_t n, std::size_t N, double r, double phi,
                                      double B_y, std::uint64_t seed) {
  LabeledDataset out{random_separated_dataset(d, n, N, r, phi, seed), {}, B_y};
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> unif(-B_y, B_y);
  for (std::size_t i = 0; i < N; ++i) {
    std::vector<double> y(n);
    for (double& v : y) v = unif(rng);
    out.labels.push_back(y);
  }
  return out;
}

nlohmann::json to_json(const LabeledDataset& data) {
  nlohmann::json seqs = nlohmann::json::array();
  for (const auto& X : data.tokens.sequences) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t q = 0; q < X.rows(); ++q) {
      std::vector<double> row(X.cols());
      for (std::size_t k = 0; k < X.cols(); ++k) row[k] = X(q, k);
      rows.push_back(row);
    }
    seqs.push_back(rows);
  }
  return {{"d", data.tokens.d},   {"n", data.tokens.n},   {"N", data.tokens.size()},
          {"r", data.tokens.r},   {"phi", data.tokens.phi}, {"sequences", seqs},
          {"labels", data.labels}, {"B_y", data.B_y}};
}

LabeledDataset labeled_dataset_from_json(const nlohmann::json& j) {
  LabeledDataset data;
  data.tokens.d = j.at("d").get<std::size_t>();
  data.tokens.n = j.at("n").get<std::size_t>();
  data.tokens.r = j.at("r").get<double>();
  data.tokens.phi = j.at("phi").get<double>();
  data.B_y = j.at("B_y").get<double>();
  for (const auto& rows : j.at("sequences")) {
    const auto v = rows.get<std::vector<std::vector<double>>>();
    if (v.size() != data.tokens.d) throw std::invalid_argument("sequence row count != d");
    Matrix X(data.tokens.d, data.tokens.n);
    for (std::size_t q = 0; q < v.size(); ++q) {
      if (v[q].size() != data.tokens.n) throw std::invalid_argument("sequence column count != n");
      for (std::size_t k = 0; k < v[q].size(); ++k) X(q, k) = v[q][k];
    }
    data.tokens.sequences.push_back(X);
  }
  data.labels = j.at("labels").get<std::vector<std::vector<double>>>();
  if (data.tokens.size() != j.at("N").get<std::size_t>() || data.labels.size() != data.tokens.size())
    throw std::invalid_argument("N does not match sequences/labels");
  for (const auto& y : data.labels) {
    if (y.size() != data.tokens.n) throw std::invalid_argument("label length != n");
    for (double v : y)
      if (std::abs(v) > data.B_y) throw std::invalid_argument("label exceeds B_y");
  }
  return data;
}

DirectionSearch find_separating_direction(const std::vector<std::vector<double>>& vectors, std::uint64_t seed,
                                          std::optional<double> required_ratio, int budget) {
  if (vectors.empty()) throw std::invalid_argument("find_separating_direction: no vectors");
  const std::size_t d = vectors.front().size();
  const auto pts = distinct(vectors);
  const double M = static_cast<double>(vectors.size());
  DirectionSearch best;
  best.required_ratio = required_ratio.value_or(std::sqrt(8.0 / (kPi * static_cast<double>(d))) / (M * M));
  best.achieved_ratio = -1.0;
  std::mt19937_64 rng(seed);
  for (int a = 1; a <= budget; ++a) {
    auto u = random_unit(rng, d);
    double ratio = INFINITY;
    for (std::size_t i = 0; i < pts.size(); ++i)
      for (std::size_t j = i + 1; j < pts.size(); ++j) {
        double dot = 0;
        for (std::size_t q = 0; q < d; ++q) dot += u[q] * (pts[i][q] - pts[j][q]);
        ratio = std::min(ratio, std::abs(dot) / dist2(pts[i], pts[j]));
      }
    if (ratio > best.achieved_ratio) {
      best.u = u;
      best.achieved_ratio = ratio;
      best.attempts = a;
    }
    if (ratio >= best.required_ratio) {
      best.verified = true;
      return best;
    }
  }
  best.attempts = budget;
  return best;
}

double token_id_radius(std::size_t d, std::size_t n, std::size_t N, double r, double phi) {
  const double nn = static_cast<double>(n), NN = static_cast<double>(N);
  return std::sqrt(2.0) / 2.0 * nn * nn * NN * NN * std::sqrt(kPi * static_cast<double>(d)) * r / phi;
}

TokenIdMap build_token_id_ffn(const TokenDataset& data, std::uint64_t seed) {
  data.validate();
  const std::size_t d = data.d, n = data.n, N = data.size();
  const double nN = static_cast<double>(n * N);
  TokenIdMap out;
  out.search = find_separating_direction(all_tokens(data), seed,
                                         std::sqrt(8.0 / (kPi * static_cast<double>(d))) / (nN * nN));
  out.r_prime = token_id_radius(d, n, N, data.r, data.phi);
  const double scale = out.r_prime / data.r;
  out.u = out.search.u;
  for (double& x : out.u) x *= scale;
  Matrix W1(2, d);
  for (std::size_t q = 0; q < d; ++q) W1(0, q) = out.u[q];
  Matrix W2(4, 2);
  W2(0, 0) = 1.0;
  W2(1, 1) = 1.0;
  out.block = FeedForwardBlock({AffineLayer{W1, {out.r_prime, 1.0}}, AffineLayer{W2, {0, 0, 0, 0}}});
  return out;
}

double sequence_id_scale(std::size_t n, std::size_t N) {
  const double NN = static_cast<double>(N);
  return 3.0 * std::sqrt(2.0) / 8.0 * NN * NN * std::sqrt(kPi * static_cast<double>(n));
}

std::vector<double> sorted_distinct_ids(const std::vector<double>& ids, std::size_t n) {
  std::vector<double> s = ids;
  std::sort(s.begin(), s.end(), std::greater<>());
  std::vector<double> out;
  for (double v : s)
    if (out.empty() || out.back() - v >= 1.0) out.push_back(v);
  out.resize(n, 0.0);
  return out;
}

SequenceIdParams sequence_id_params(std::size_t n, std::size_t N, double r_prime,
                                    const std::vector<std::vector<double>>& token_ids, std::uint64_t seed) {
  SequenceIdParams p{n, N, r_prime, sequence_id_scale(n, N), {}, {}};
  std::vector<std::vector<double>> sorted;
  for (const auto& ids : token_ids) sorted.push_back(sorted_distinct_ids(ids, n));
  const double NN = static_cast<double>(N);
  p.search = find_separating_direction(sorted, seed, std::sqrt(8.0 / (kPi * static_cast<double>(n))) / (NN * NN));
  p.w = p.search.u;
  for (double& x : p.w) x *= p.P;
  return p;
}

namespace {

// Rows: 0 x, 1 one, 2 y, 3 z, optional 4 carried token id.
// Removes the current maximum from x and accumulates z += w_l y.
FeedForwardBlock sid_stage_ffn(double w_l, double r_prime, bool carry) {
  const std::size_t din = carry ? 5 : 4;
  const std::size_t h1 = carry ? 9 : 8, h2 = carry ? 5 : 4;
  Matrix W1(h1, din), W2(h2, h1), W3(din, h2);
  std::vector<double> b1(h1, 0.0);
  W1(0, 0) = 1.0;
  const double off[4] = {2.0, 1.0, -1.0, -2.0};
  for (int q = 0; q < 4; ++q) {
    W1(1 + q, 0) = 2.0;
    W1(1 + q, 2) = -2.0;
    b1[1 + q] = off[q];
  }
  W1(5, 3) = 1.0;
  W1(5, 2) = w_l;
  W1(6, 3) = -1.0;
  W1(6, 2) = -w_l;
  W1(7, 1) = 1.0;
  if (carry) W1(8, 4) = 1.0;

  W2(0, 0) = 1.0;
  W2(0, 1) = -2.0 * r_prime;
  W2(0, 2) = 2.0 * r_prime;
  W2(0, 3) = 2.0 * r_prime;
  W2(0, 4) = -2.0 * r_prime;
  W2(1, 5) = 1.0;
  W2(1, 6) = -1.0;
  W2(2, 5) = -1.0;
  W2(2, 6) = 1.0;
  W2(3, 7) = 1.0;
  if (carry) W2(4, 8) = 1.0;

  W3(0, 0) = 1.0;
  W3(1, 3) = 1.0;
  W3(3, 1) = 1.0;
  W3(3, 2) = -1.0;
  if (carry) W3(4, 4) = 1.0;
  return FeedForwardBlock({AffineLayer{W1, b1}, AffineLayer{W2, std::vector<double>(h2, 0.0)},
                           AffineLayer{W3, std::vector<double>(din, 0.0)}});
}

// Without carry: z + w_n y. With carry: (2r'+1)(z + w_n y) + x_token.
FeedForwardBlock sid_final_ffn(double w_n, double r_prime, bool carry) {
  const std::size_t din = carry ? 5 : 4;
  const std::size_t h = carry ? 3 : 2;
  Matrix W1(h, din), W2(1, h);
  W1(0, 3) = 1.0;
  W1(0, 2) = w_n;
  W1(1, 3) = -1.0;
  W1(1, 2) = -w_n;
  const double s = carry ? 2.0 * r_prime + 1.0 : 1.0;
  W2(0, 0) = s;
  W2(0, 1) = -s;
  if (carry) {
    W1(2, 4) = 1.0;
    W2(0, 2) = 1.0;
  }
  return FeedForwardBlock({AffineLayer{W1, std::vector<double>(h, 0.0)}, AffineLayer{W2, {0.0}}});
}

SelfAttentionLayer sid_attention(std::size_t n, double r_prime, double P, bool carry) {
  SelfAttentionLayer a = parallel_attention(build_max_attention(n, r_prime, P), build_identity_attention(1));
  if (carry) a = parallel_attention(a, build_identity_attention(1));
  return a;
}

std::vector<std::vector<double>> token_id_rows(const TokenIdMap& tid, const TokenDataset& data) {
  std::vector<std::vector<double>> rows;
  for (const auto& X : data.sequences) {
    const Matrix out = tid.block.eval(X);
    std::vector<double> row(X.cols());
    for (std::size_t k = 0; k < X.cols(); ++k) row[k] = out(0, k);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

Transformer build_sequence_id_transformer(const SequenceIdParams& p) {
  std::vector<FeedForwardBlock> ffns{build_identity_ffn(4)};
  std::vector<SelfAttentionLayer> sas;
  for (std::size_t l = 0; l < p.n; ++l) {
    sas.push_back(sid_attention(p.n, p.r_prime, p.P, false));
    ffns.push_back(l + 1 < p.n ? sid_stage_ffn(p.w[l], p.r_prime, false) : sid_final_ffn(p.w[l], p.r_prime, false));
  }
  return Transformer(identity_embedding(4, p.n), std::move(ffns), std::move(sas));
}

Transformer build_sequence_id_transformer(std::size_t n, std::size_t N, double r_prime,
                                          const std::vector<std::vector<double>>& token_ids, std::uint64_t seed) {
  return build_sequence_id_transformer(sequence_id_params(n, N, r_prime, token_ids, seed));
}

double contextual_radius(std::size_t d, std::size_t n, std::size_t N, double r, double phi) {
  const double dd = static_cast<double>(d), nn = static_cast<double>(n), NN = static_cast<double>(N);
  const double a = std::sqrt(2.0 * kPi * dd) * nn * nn * NN * NN * r / phi + 1.0;
  const double b = 0.75 * kPi * std::sqrt(dd) * nn * nn * nn * NN * NN * NN * NN * r / phi + 1.5;
  return a * b;
}

ContextualMap build_contextual_mapping(const TokenDataset& data, std::uint64_t seed) {
  ContextualMap cm;
  cm.token_ids = build_token_id_ffn(data, seed);
  const auto ids = token_id_rows(cm.token_ids, data);
  cm.sequence_ids = sequence_id_params(data.n, data.size(), cm.token_ids.r_prime, ids, seed + 1);
  cm.R = contextual_radius(data.d, data.n, data.size(), data.r, data.phi);
  cm.guarantees_verified = cm.token_ids.search.verified && cm.sequence_ids.search.verified;

  const auto& p = cm.sequence_ids;
  const double rp = cm.token_ids.r_prime;
  // FFN_0: X -> (x; 1; 0; 0; x) with x = relu(u.X + r').
  Matrix W1(2, data.d);
  for (std::size_t q = 0; q < data.d; ++q) W1(0, q) = cm.token_ids.u[q];
  Matrix W2(5, 2);
  W2(0, 0) = 1.0;
  W2(1, 1) = 1.0;
  W2(4, 0) = 1.0;
  std::vector<FeedForwardBlock> ffns{
      FeedForwardBlock({AffineLayer{W1, {rp, 1.0}}, AffineLayer{W2, std::vector<double>(5, 0.0)}})};
  std::vector<SelfAttentionLayer> sas;
  for (std::size_t l = 0; l < data.n; ++l) {
    sas.push_back(sid_attention(data.n, rp, p.P, true));
    ffns.push_back(l + 1 < data.n ? sid_stage_ffn(p.w[l], rp, true) : sid_final_ffn(p.w[l], rp, true));
  }
  cm.T = Transformer(identity_embedding(data.d, data.n), std::move(ffns), std::move(sas));
  return cm;
}

Matrix positional_encoding(std::size_t d, std::size_t n, double r) {
  Matrix E(d, n);
  const double s = 3.0 * r / std::sqrt(static_cast<double>(d));
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t q = 0; q < d; ++q) E(q, k) = s * static_cast<double>(k + 1);
  return E;
}

namespace {

void check_memorizer_data(const LabeledDataset& data) {
  const TokenDataset& raw = data.tokens;
  raw.validate();
  if (!(raw.r > raw.phi)) throw std::invalid_argument("memorizer: requires r > phi");
  if (data.labels.size() != raw.size()) throw std::invalid_argument("memorizer: label count != N");
  for (std::size_t i = 0; i < raw.size(); ++i)
    for (std::size_t j = i + 1; j < raw.size(); ++j)
      if (raw.sequences[i] == raw.sequences[j]) throw std::invalid_argument("memorizer: sequences must be distinct");
}

}  // namespace

TokenDataset encode_positions(const TokenDataset& raw, const Matrix& E) {
  TokenDataset enc = raw;
  for (auto& X : enc.sequences) X += E;
  enc.r = (3.0 * static_cast<double>(raw.n) + 1.0) * raw.r;
  return enc;
}

Memorizer memorize_with_context(const LabeledDataset& data, const ContextualMap& context, const Matrix& E) {
  const TokenDataset& raw = data.tokens;
  Memorizer mem;
  mem.E = E;
  mem.context = context;
  mem.R_bar = context.R;
  mem.B_y = data.B_y;

  // Node per distinct context id; equal ids must carry equal labels.
  std::vector<std::pair<double, double>> nodes;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const Matrix a = context.T.eval(raw.sequences[i] + E);
    for (std::size_t k = 0; k < raw.n; ++k) {
      const double id = a(0, k), y = data.labels[i][k];
      auto it = std::find_if(nodes.begin(), nodes.end(), [&](const auto& p) { return std::abs(p.first - id) < 1.0; });
      if (it == nodes.end()) {
        nodes.emplace_back(id, y);
      } else if (it->second != y) {
        throw std::invalid_argument("memorizer: labels violate the consistency condition");
      }
    }
  }
  double bx = mem.R_bar;
  for (const auto& node : nodes) bx = std::max(bx, std::abs(node.first));
  mem.T = append_ffn(context.T, build_interpolating_memorizer(nodes, 1.0, bx, data.B_y));
  return mem;
}

Memorizer build_memorizing_transformer(const LabeledDataset& data, bool use_positional_encoding, std::uint64_t seed) {
  check_memorizer_data(data);
  const TokenDataset& raw = data.tokens;
  if (!use_positional_encoding) return memorize_with_context(data, build_contextual_mapping(raw, seed), Matrix(raw.d, raw.n));
  const Matrix E = positional_encoding(raw.d, raw.n, raw.r);
  return memorize_with_context(data, build_contextual_mapping(encode_positions(raw, E), seed), E);
}

namespace {

std::vector<std::vector<double>> sorted_columns(const Matrix& X) {
  std::vector<std::vector<double>> cols;
  for (std::size_t k = 0; k < X.cols(); ++k) cols.push_back(X.col(k));
  std::sort(cols.begin(), cols.end());
  return cols;
}

}  // namespace

SeparationReport check_context_separation(const Transformer& T, const TokenDataset& data, double R,
                                          double tolerance) {
  SeparationReport rep;
  const std::size_t N = data.size(), n = data.n;
  std::vector<Matrix> ids;
  std::vector<std::vector<std::vector<double>>> contexts;
  for (const Matrix& X : data.sequences) {
    ids.push_back(T.eval(X));
    contexts.push_back(sorted_columns(X));
    for (std::size_t k = 0; k < n; ++k) {
      const double v = std::abs(ids.back()(0, k));
      rep.max_abs_id = std::max(rep.max_abs_id, v);
      if (v > R) ++rep.radius_violations;
    }
  }
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = i; j < N; ++j) {
      const bool same_context = contexts[i] == contexts[j];
      for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t l = (i == j ? k + 1 : 0); l < n; ++l) {
          if (same_context && data.sequences[i].col(k) == data.sequences[j].col(l)) continue;
          const double gap = std::abs(ids[i](0, k) - ids[j](0, l));
          ++rep.pairs_checked;
          rep.min_gap = std::min(rep.min_gap, gap);
          if (gap < 2.0 - tolerance) ++rep.gap_violations;
        }
      }
    }
  }
  return rep;
}

double memorization_error(const Transformer& T, const LabeledDataset& data, const Matrix& E) {
  double worst = 0;
  for (std::size_t i = 0; i < data.tokens.size(); ++i) {
    Matrix X = data.tokens.sequences[i];
    if (E.size() != 0) X += E;
    const Matrix Y = T.eval(X);
    for (std::size_t k = 0; k < data.tokens.n; ++k) worst = std::max(worst, std::abs(Y(0, k) - data.labels[i][k]));
  }
  return worst;
}

}  // namespace tfa
