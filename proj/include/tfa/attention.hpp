#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "tfa/matrix.hpp"

namespace tfa {

struct AttentionHead {
  Matrix W_O;  // d x S
  Matrix W_V;  // S x d
  Matrix W_K;  // S x d
  Matrix W_Q;  // S x d

  bool operator==(const AttentionHead&) const = default;
};

// X + sum_h W_O W_V X softmax_cols(X^T W_K^T W_Q X)
class SelfAttentionLayer {
 public:
  SelfAttentionLayer() = default;
  explicit SelfAttentionLayer(std::vector<AttentionHead> heads);

  Matrix eval(const Matrix& X) const;
  Matrix eval_serial(const Matrix& X) const;
  Matrix eval_parallel(const Matrix& X) const;

  std::size_t dim() const { return heads_.front().W_O.rows(); }
  std::size_t head_count() const { return heads_.size(); }
  std::size_t head_size() const { return heads_.front().W_V.rows(); }
  double weight_bound() const;
  std::size_t param_count() const;

  const std::vector<AttentionHead>& heads() const { return heads_; }
  std::vector<AttentionHead>& mutable_heads() { return heads_; }

  // Inverse temperature of a max-attention head, kept for auditing.
  std::optional<double> temperature;

  bool operator==(const SelfAttentionLayer&) const = default;

 private:
  std::vector<AttentionHead> heads_;
};

Matrix attention_eval(const SelfAttentionLayer& layer, const Matrix& X);

SelfAttentionLayer build_identity_attention(std::size_t d);
SelfAttentionLayer build_max_attention(std::size_t n, double r_prime, double P);
double max_attention_temperature(std::size_t n, double r_prime, double P);
SelfAttentionLayer build_broadcast_attention(std::size_t dn, std::size_t n);
SelfAttentionLayer parallel_attention(const SelfAttentionLayer& a, const SelfAttentionLayer& b);

}  // namespace tfa
