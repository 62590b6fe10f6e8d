#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tfa/ffn.hpp"
#include "tfa/transformer.hpp"

namespace tfa {

struct TokenDataset {
  std::size_t d = 0, n = 0;
  std::vector<Matrix> sequences;  // each d x n
  double r = 1.0;
  double phi = 0.1;

  std::size_t size() const { return sequences.size(); }
  // Throws std::invalid_argument if norms exceed r or distinct tokens are closer than phi.
  void validate() const;
};

struct LabeledDataset {
  TokenDataset tokens;
  std::vector<std::vector<double>> labels;  // each of length n
  double B_y = 1.0;
};

// Draws N sequences with tokens uniform in the radius-r ball and pairwise gap >= phi.
TokenDataset random_separated_dataset(std::size_t d, std::size_t n, std::size_t N, double r, double phi,
                                      std::uint64_t seed);
LabeledDataset random_labeled_dataset(std::size_t d, std::size_t n, std::size_t N, double r, double phi,
                                      double B_y, std::uint64_t seed);

nlohmann::json to_json(const LabeledDataset& data);
LabeledDataset labeled_dataset_from_json(const nlohmann::json& j);

struct DirectionSearch {
  std::vector<double> u;
  double required_ratio = 0;
  double achieved_ratio = 0;  // min over distinct pairs of |u.(x_i - x_j)| / |x_i - x_j|
  int attempts = 0;
  bool verified = false;
};

// Seeded rejection sampling of unit directions. Default ratio is (1/M^2) sqrt(8/(pi d)).
DirectionSearch find_separating_direction(const std::vector<std::vector<double>>& vectors, std::uint64_t seed,
                                          std::optional<double> required_ratio = std::nullopt,
                                          int budget = 10000);

struct TokenIdMap {
  FeedForwardBlock block;  // d -> (x; 1; 0; 0)
  double r_prime = 0;
  std::vector<double> u;   // scaled direction
  DirectionSearch search;
};

double token_id_radius(std::size_t d, std::size_t n, std::size_t N, double r, double phi);
TokenIdMap build_token_id_ffn(const TokenDataset& data, std::uint64_t seed);

struct SequenceIdParams {
  std::size_t n = 0, N = 0;
  double r_prime = 0;
  double P = 0;
  std::vector<double> w;  // P * w'
  DirectionSearch search;
};

double sequence_id_scale(std::size_t n, std::size_t N);
// Distinct ids (gap threshold 1) in descending order, zero-padded to n.
std::vector<double> sorted_distinct_ids(const std::vector<double>& ids, std::size_t n);
SequenceIdParams sequence_id_params(std::size_t n, std::size_t N, double r_prime,
                                    const std::vector<std::vector<double>>& token_ids, std::uint64_t seed);
// (x; 1; 0; 0) -> z 1^T
Transformer build_sequence_id_transformer(std::size_t n, std::size_t N, double r_prime,
                                          const std::vector<std::vector<double>>& token_ids, std::uint64_t seed);
Transformer build_sequence_id_transformer(const SequenceIdParams& p);

struct ContextualMap {
  Transformer T;  // d x n -> 1 x n
  TokenIdMap token_ids;
  SequenceIdParams sequence_ids;
  double R = 0;
  bool guarantees_verified = false;
};

double contextual_radius(std::size_t d, std::size_t n, std::size_t N, double r, double phi);
ContextualMap build_contextual_mapping(const TokenDataset& data, std::uint64_t seed);

struct Memorizer {
  Transformer T;
  Matrix E;  // positional encoding, zero when disabled
  ContextualMap context;
  double R_bar = 0;
  double B_y = 0;
};

Matrix positional_encoding(std::size_t d, std::size_t n, double r);
Memorizer build_memorizing_transformer(const LabeledDataset& data, bool use_positional_encoding, std::uint64_t seed);
// Adds E to every sequence; the radius grows to (3n+1) r.
TokenDataset encode_positions(const TokenDataset& raw, const Matrix& E);
// Reuses a contextual map built on the encoded tokens.
Memorizer memorize_with_context(const LabeledDataset& data, const ContextualMap& context, const Matrix& E);

struct SeparationReport {
  std::size_t pairs_checked = 0;
  std::size_t gap_violations = 0;
  std::size_t radius_violations = 0;
  double min_gap = INFINITY;  // over pairs that must be separated
  double max_abs_id = 0;
  bool passed() const { return gap_violations == 0 && radius_violations == 0; }
};

// ids = T(X) (1 x n per sequence). Pairs must differ by >= 2 unless the token and its
// sequence (up to permutation) coincide.
SeparationReport check_context_separation(const Transformer& T, const TokenDataset& data, double R,
                                          double tolerance = 1e-9);
// Max over sequences and tokens of |T(X + E) - y|.
double memorization_error(const Transformer& T, const LabeledDataset& data, const Matrix& E);

}  // namespace tfa
