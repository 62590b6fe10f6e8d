#include "tfa/transformer.hpp"

#include <algorithm>
#include <stdexcept>

namespace tfa {

Matrix EmbeddingLayer::eval(const Matrix& X) const {
  require_shape(X.rows() == W.cols(), "embedding: input rows != d_in");
  require_shape(X.cols() == B.cols(), "embedding: input columns != n");
  return matmul(W, X) + B;
}

EmbeddingLayer identity_embedding(std::size_t d, std::size_t n) { return {Matrix::identity(d), Matrix(d, n)}; }

Transformer::Transformer(EmbeddingLayer embedding, std::vector<FeedForwardBlock> ffns,
                         std::vector<SelfAttentionLayer> sas)
    : embedding_(std::move(embedding)), ffns_(std::move(ffns)), sas_(std::move(sas)) {
  require_shape(embedding_.W.rows() == embedding_.B.rows(), "embedding W and B row counts differ");
  require_shape(ffns_.size() == sas_.size() + 1, "transformer needs K+1 feedforward blocks for K attentions");
  require_shape(ffns_[0].d_in() == embedding_.W.rows(), "FFN_0 input dim != embedding dim");
  for (std::size_t k = 0; k < sas_.size(); ++k) {
    require_shape(sas_[k].dim() == ffns_[k].d_out(), "attention dim != previous FFN output dim");
    require_shape(ffns_[k + 1].d_in() == sas_[k].dim(), "FFN input dim != attention dim");
  }
}

Matrix Transformer::eval(const Matrix& X) const {
  Matrix H = ffns_[0].eval(embedding_.eval(X));
  for (std::size_t k = 0; k < sas_.size(); ++k) H = ffns_[k + 1].eval(sas_[k].eval(H));
  return H;
}

Matrix transformer_eval(const Transformer& T, const Matrix& X) { return T.eval(X); }

SizeReport size_report(const Transformer& T) {
  SizeReport r;
  r.dims.push_back(T.d_in());
  r.B_EB = T.embedding().weight_bound();
  r.M_EB = T.embedding().param_count();
  for (std::size_t k = 0; k <= T.length(); ++k) {
    const auto& f = T.ffns()[k];
    if (k > 0) {
      const auto& a = T.attentions()[k - 1];
      r.sizes.sa.emplace_back(a.head_count(), a.head_size());
      r.B_SA = std::max(r.B_SA, a.weight_bound());
      r.M_SA += a.param_count();
    }
    r.sizes.ffn.emplace_back(f.depth(), f.width());
    r.dims.push_back(f.d_in());
    r.B_FF = std::max(r.B_FF, f.weight_bound());
    r.M_FF += f.param_count();
  }
  r.dims.push_back(T.d_out());
  return r;
}

std::size_t param_count(const Transformer& T) {
  const SizeReport r = size_report(T);
  return r.M_EB + r.M_FF + r.M_SA;
}

Transformer ffn_transformer(const FeedForwardBlock& f, std::size_t n) {
  return Transformer(identity_embedding(f.d_in(), n), {f}, {});
}

Transformer pad_length(const Transformer& T, std::size_t K_target) {
  if (K_target < T.length()) throw std::invalid_argument("pad_length: target below current length");
  auto ffns = T.ffns();
  auto sas = T.attentions();
  while (sas.size() < K_target) {
    sas.push_back(build_identity_attention(T.d_out()));
    ffns.push_back(build_identity_ffn(T.d_out()));
  }
  return Transformer(T.embedding(), std::move(ffns), std::move(sas));
}

Transformer postcompose_affine(const Transformer& T, const Matrix& A, const std::vector<double>& c) {
  auto ffns = T.ffns();
  ffns.back() = postcompose_affine(ffns.back(), A, c);
  return Transformer(T.embedding(), std::move(ffns), T.attentions());
}

Transformer append_ffn(const Transformer& T, const FeedForwardBlock& f) {
  auto ffns = T.ffns();
  ffns.back() = compose_ffn(ffns.back(), f);
  return Transformer(T.embedding(), std::move(ffns), T.attentions());
}

Transformer compose_transformers(const Transformer& a, const Transformer& b) {
  require_shape(a.d_out() == b.d_in(), "compose_transformers: dimension mismatch");
  const Matrix& Bb = b.embedding().B;
  std::vector<double> c(Bb.rows());
  for (std::size_t i = 0; i < Bb.rows(); ++i) {
    c[i] = Bb(i, 0);
    for (std::size_t j = 1; j < Bb.cols(); ++j)
      if (Bb(i, j) != c[i]) throw std::invalid_argument("compose_transformers: embedding bias is not column-constant");
  }
  auto ffns = a.ffns();
  auto sas = a.attentions();
  ffns.back() = compose_ffn(postcompose_affine(ffns.back(), b.embedding().W, c), b.ffns().front());
  ffns.insert(ffns.end(), b.ffns().begin() + 1, b.ffns().end());
  sas.insert(sas.end(), b.attentions().begin(), b.attentions().end());
  return Transformer(a.embedding(), std::move(ffns), std::move(sas));
}

namespace {

Transformer parallel_stages(EmbeddingLayer emb, const std::vector<Transformer>& ts) {
  const std::size_t K = ts.front().length();
  for (const auto& t : ts)
    if (t.length() != K) throw std::invalid_argument("parallel_transformer: lengths differ");
  std::vector<FeedForwardBlock> ffns;
  std::vector<SelfAttentionLayer> sas;
  for (std::size_t k = 0; k <= K; ++k) {
    std::vector<FeedForwardBlock> blocks;
    for (const auto& t : ts) blocks.push_back(t.ffns()[k]);
    ffns.push_back(parallel_ffn(blocks));
    if (k < K) {
      SelfAttentionLayer acc = ts.front().attentions()[k];
      for (std::size_t i = 1; i < ts.size(); ++i) acc = parallel_attention(acc, ts[i].attentions()[k]);
      sas.push_back(std::move(acc));
    }
  }
  return Transformer(std::move(emb), std::move(ffns), std::move(sas));
}

}  // namespace

Transformer parallel_transformer(const std::vector<Transformer>& ts) {
  require_shape(!ts.empty(), "parallel_transformer: empty list");
  const std::size_t n = ts.front().tokens();
  EmbeddingLayer emb{Matrix(0, 0), Matrix(0, n)};
  std::size_t rows = 0, cols = 0;
  for (const auto& t : ts) {
    require_shape(t.tokens() == n, "parallel_transformer: token counts differ");
    rows += t.embedding().W.rows();
    cols += t.embedding().W.cols();
  }
  emb.W = Matrix(rows, cols);
  emb.B = Matrix(rows, n);
  std::size_t r0 = 0, c0 = 0;
  for (const auto& t : ts) {
    emb.W.set_block(r0, c0, t.embedding().W);
    emb.B.set_block(r0, 0, t.embedding().B);
    r0 += t.embedding().W.rows();
    c0 += t.embedding().W.cols();
  }
  return parallel_stages(std::move(emb), ts);
}

Transformer parallel_transformer(const Transformer& a, const Transformer& b) { return parallel_transformer({a, b}); }

Transformer parallel_shared_input(const std::vector<Transformer>& ts) {
  require_shape(!ts.empty(), "parallel_shared_input: empty list");
  EmbeddingLayer emb = ts.front().embedding();
  for (std::size_t i = 1; i < ts.size(); ++i) {
    require_shape(ts[i].d_in() == ts[0].d_in() && ts[i].tokens() == ts[0].tokens(),
                  "parallel_shared_input: input shapes differ");
    emb.W = vstack(emb.W, ts[i].embedding().W);
    emb.B = vstack(emb.B, ts[i].embedding().B);
  }
  return parallel_stages(std::move(emb), ts);
}

Matrix lift_augment(const Matrix& X) {
  const std::size_t n = X.cols();
  return vstack(X, Matrix::identity(n) - Matrix(n, n, 1.0));
}

Transformer lift_ffn_to_transformer(const FeedForwardBlock& f, std::size_t d, std::size_t n) {
  const std::size_t dn = d * n;
  require_shape(f.d_in() == dn, "lift: f must take d*n inputs");
  // Neuron (i,k) keeps X_ik in column k and is zeroed elsewhere by the -1 offsets.
  Matrix W1(dn, d + n);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t k = 0; k < n; ++k) {
      W1(i * n + k, i) = 1.0;
      W1(i * n + k, d + k) = 1.0;
    }
  Matrix W2(2 * dn, dn);
  for (std::size_t q = 0; q < dn; ++q) W2(q, q) = 1.0;
  FeedForwardBlock spread({AffineLayer{W1, std::vector<double>(dn, 0.0)},
                           AffineLayer{W2, std::vector<double>(2 * dn, 0.0)}});
  Matrix select(dn, 2 * dn);
  for (std::size_t q = 0; q < dn; ++q) select(q, dn + q) = 1.0;
  FeedForwardBlock head = precompose_affine(f, select, std::vector<double>(dn, 0.0));
  return Transformer(identity_embedding(d + n, n), {spread, head}, {build_broadcast_attention(dn, n)});
}

}  // namespace tfa
