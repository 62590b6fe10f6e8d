#include "tfa/attention.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tfa {

SelfAttentionLayer::SelfAttentionLayer(std::vector<AttentionHead> heads) : heads_(std::move(heads)) {
  require_shape(!heads_.empty(), "attention layer needs at least one head");
  const std::size_t d = heads_.front().W_O.rows();
  const std::size_t S = heads_.front().W_V.rows();
  for (const auto& h : heads_) {
    require_shape(h.W_O.rows() == d && h.W_O.cols() == S, "W_O must be d x S");
    require_shape(h.W_V.rows() == S && h.W_V.cols() == d, "W_V must be S x d");
    require_shape(h.W_K.rows() == S && h.W_K.cols() == d, "W_K must be S x d");
    require_shape(h.W_Q.rows() == S && h.W_Q.cols() == d, "W_Q must be S x d");
  }
}

namespace {

// Adds head h's contribution for output column j into out.
void head_column(const Matrix& keys, const Matrix& queries, const Matrix& values, std::size_t j,
                 std::vector<double>& score, Matrix& out) {
  const std::size_t n = keys.cols();
  const std::size_t S = keys.rows();
  double mx = -INFINITY;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t r = 0; r < S; ++r) s += keys(r, i) * queries(r, j);
    score[i] = s;
    mx = std::max(mx, s);
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    score[i] = std::exp(score[i] - mx);
    sum += score[i];
  }
  for (std::size_t i = 0; i < n; ++i) score[i] /= sum;
  for (std::size_t r = 0; r < values.rows(); ++r) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += values(r, i) * score[i];
    out(r, j) += acc;
  }
}

struct HeadProjections {
  Matrix keys, queries, values;
};

std::vector<HeadProjections> project(const std::vector<AttentionHead>& heads, const Matrix& X) {
  std::vector<HeadProjections> p;
  p.reserve(heads.size());
  for (const auto& h : heads)
    p.push_back({matmul_serial(h.W_K, X), matmul_serial(h.W_Q, X), matmul_serial(h.W_O, matmul_serial(h.W_V, X))});
  return p;
}

}  // namespace

Matrix SelfAttentionLayer::eval_serial(const Matrix& X) const {
  require_shape(X.rows() == dim(), "attention_eval: input rows != d_SA");
  Matrix out = X;
  std::vector<double> score(X.cols());
  for (const auto& p : project(heads_, X))
    for (std::size_t j = 0; j < X.cols(); ++j) head_column(p.keys, p.queries, p.values, j, score, out);
  return out;
}

Matrix SelfAttentionLayer::eval_parallel(const Matrix& X) const {
  require_shape(X.rows() == dim(), "attention_eval: input rows != d_SA");
  Matrix out = X;
  const auto proj = project(heads_, X);
  const long n = static_cast<long>(X.cols());
#pragma omp parallel
  {
    std::vector<double> score(X.cols());
#pragma omp for schedule(static)
    for (long j = 0; j < n; ++j)
      for (const auto& p : proj) head_column(p.keys, p.queries, p.values, static_cast<std::size_t>(j), score, out);
  }
  return out;
}

Matrix SelfAttentionLayer::eval(const Matrix& X) const {
  if (X.cols() * X.cols() * heads_.size() >= 4096) return eval_parallel(X);
  return eval_serial(X);
}

double SelfAttentionLayer::weight_bound() const {
  double m = 0.0;
  for (const auto& h : heads_)
    m = std::max({m, h.W_O.max_abs(), h.W_V.max_abs(), h.W_K.max_abs(), h.W_Q.max_abs()});
  return m;
}

std::size_t SelfAttentionLayer::param_count() const {
  std::size_t c = 0;
  for (const auto& h : heads_) c += h.W_O.size() + h.W_V.size() + h.W_K.size() + h.W_Q.size();
  return c;
}

Matrix attention_eval(const SelfAttentionLayer& layer, const Matrix& X) { return layer.eval(X); }

SelfAttentionLayer build_identity_attention(std::size_t d) {
  return SelfAttentionLayer({AttentionHead{Matrix(d, 1), Matrix(1, d), Matrix(1, d), Matrix(1, d)}});
}

double max_attention_temperature(std::size_t n, double r_prime, double P) {
  return 0.5 * std::log(8.0 * std::pow(static_cast<double>(n), 1.5) * r_prime * P);
}

SelfAttentionLayer build_max_attention(std::size_t n, double r_prime, double P) {
  if (n == 0) throw std::invalid_argument("max attention: n must be positive");
  if (!(r_prime > 1.0 && P > 1.0)) throw std::invalid_argument("max attention: r' and P must exceed 1");
  const double t = max_attention_temperature(n, r_prime, P);
  AttentionHead h{Matrix(3, 3), Matrix(3, 3), Matrix(3, 3), Matrix(3, 3)};
  h.W_O(2, 0) = 1.0;
  h.W_V(0, 0) = 1.0;
  h.W_K(0, 0) = t;
  h.W_Q(0, 1) = 1.0;
  SelfAttentionLayer layer({h});
  layer.temperature = t;
  return layer;
}

SelfAttentionLayer build_broadcast_attention(std::size_t dn, std::size_t n) {
  AttentionHead h{Matrix(2 * dn, dn), Matrix(dn, 2 * dn), Matrix(dn, 2 * dn), Matrix(dn, 2 * dn)};
  for (std::size_t i = 0; i < dn; ++i) {
    h.W_O(dn + i, i) = static_cast<double>(n);
    h.W_V(i, i) = 1.0;
  }
  return SelfAttentionLayer({h});
}

namespace {

AttentionHead embed_head(const AttentionHead& h, std::size_t offset, std::size_t total, std::size_t S) {
  AttentionHead e{Matrix(total, S), Matrix(S, total), Matrix(S, total), Matrix(S, total)};
  e.W_O.set_block(offset, 0, h.W_O);
  e.W_V.set_block(0, offset, h.W_V);
  e.W_K.set_block(0, offset, h.W_K);
  e.W_Q.set_block(0, offset, h.W_Q);
  return e;
}

}  // namespace

SelfAttentionLayer parallel_attention(const SelfAttentionLayer& a, const SelfAttentionLayer& b) {
  const std::size_t total = a.dim() + b.dim();
  const std::size_t S = std::max(a.head_size(), b.head_size());
  std::vector<AttentionHead> heads;
  heads.reserve(a.head_count() + b.head_count());
  for (const auto& h : a.heads()) heads.push_back(embed_head(h, 0, total, S));
  for (const auto& h : b.heads()) heads.push_back(embed_head(h, a.dim(), total, S));
  return SelfAttentionLayer(std::move(heads));
}

}  // namespace tfa
