#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "tfa/attention.hpp"
#include "tfa/ffn.hpp"
#include "tfa/matrix.hpp"

namespace tfa {

struct EmbeddingLayer {
  Matrix W;  // d_EB x d_in
  Matrix B;  // d_EB x n

  Matrix eval(const Matrix& X) const;
  double weight_bound() const { return std::max(W.max_abs(), B.max_abs()); }
  std::size_t param_count() const { return W.size() + B.size(); }
  bool operator==(const EmbeddingLayer&) const = default;
};

EmbeddingLayer identity_embedding(std::size_t d, std::size_t n);

struct SizeTuple {
  std::vector<std::pair<std::size_t, std::size_t>> ffn;  // (depth, width) for FFN_0..FFN_K
  std::vector<std::pair<std::size_t, std::size_t>> sa;   // (heads, head size) for SA_1..SA_K
};

struct SizeReport {
  SizeTuple sizes;
  std::vector<std::size_t> dims;  // d_in, d_0, ..., d_K, d_out
  double B_EB = 0, B_FF = 0, B_SA = 0;
  std::size_t M_EB = 0, M_FF = 0, M_SA = 0;
};

// Embedding, then FFN_0, then (SA_k, FFN_k) for k = 1..K.
class Transformer {
 public:
  Transformer() = default;
  Transformer(EmbeddingLayer embedding, std::vector<FeedForwardBlock> ffns, std::vector<SelfAttentionLayer> sas);

  Matrix eval(const Matrix& X) const;

  std::size_t length() const { return sas_.size(); }
  std::size_t d_in() const { return embedding_.W.cols(); }
  std::size_t d_out() const { return ffns_.back().d_out(); }
  std::size_t tokens() const { return embedding_.B.cols(); }

  const EmbeddingLayer& embedding() const { return embedding_; }
  const std::vector<FeedForwardBlock>& ffns() const { return ffns_; }
  const std::vector<SelfAttentionLayer>& attentions() const { return sas_; }

  bool operator==(const Transformer&) const = default;

 private:
  EmbeddingLayer embedding_;
  std::vector<FeedForwardBlock> ffns_;
  std::vector<SelfAttentionLayer> sas_;
};

Matrix transformer_eval(const Transformer& T, const Matrix& X);
SizeReport size_report(const Transformer& T);
std::size_t param_count(const Transformer& T);

// Wraps a single FFN as a length-0 transformer with identity embedding.
Transformer ffn_transformer(const FeedForwardBlock& f, std::size_t n);

// Appends identity attention + identity FFN stages until length K_target.
Transformer pad_length(const Transformer& T, std::size_t K_target);

// b after a; b's embedding bias must be constant across columns.
Transformer compose_transformers(const Transformer& a, const Transformer& b);

// Output map folded into the final FFN: A T(X) + c 1^T.
Transformer postcompose_affine(const Transformer& T, const Matrix& A, const std::vector<double>& c);
Transformer append_ffn(const Transformer& T, const FeedForwardBlock& f);

// Acts on stacked inputs [X; Y] -> [a(X); b(Y)].
Transformer parallel_transformer(const Transformer& a, const Transformer& b);
Transformer parallel_transformer(const std::vector<Transformer>& ts);
// Both act on the same input X -> [a(X); b(X)].
Transformer parallel_shared_input(const std::vector<Transformer>& ts);

// Lifts f: R^{dn} -> R^m to a transformer on (X; I - 1) returning f(flatten(X)) in every column.
Transformer lift_ffn_to_transformer(const FeedForwardBlock& f, std::size_t d, std::size_t n);
Matrix lift_augment(const Matrix& X);

}  // namespace tfa
