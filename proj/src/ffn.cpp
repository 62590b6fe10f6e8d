#include "tfa/ffn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tfa {

FeedForwardBlock::FeedForwardBlock(std::vector<AffineLayer> layers) : layers_(std::move(layers)) {
  require_shape(!layers_.empty(), "feedforward block needs at least one layer");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    require_shape(layers_[l].b.size() == layers_[l].W.rows(), "bias length must equal weight rows");
    if (l > 0) require_shape(layers_[l].W.cols() == layers_[l - 1].W.rows(), "layer shapes do not chain");
  }
}

Matrix FeedForwardBlock::eval(const Matrix& X) const {
  require_shape(X.rows() == d_in(), "ffn_eval: input rows != d_in");
  Matrix H = X;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Matrix Z = matmul(layers_[l].W, H);
    const auto& b = layers_[l].b;
    for (std::size_t i = 0; i < Z.rows(); ++i)
      for (std::size_t j = 0; j < Z.cols(); ++j) Z(i, j) += b[i];
    H = (l + 1 < layers_.size()) ? relu_apply(Z) : std::move(Z);
  }
  return H;
}

std::vector<double> FeedForwardBlock::eval_vector(const std::vector<double>& x) const {
  return eval(Matrix::column(x)).values();
}

double FeedForwardBlock::eval_scalar(double x) const { return eval(Matrix{{x}})(0, 0); }

std::size_t FeedForwardBlock::width() const {
  std::size_t w = 0;
  for (std::size_t l = 0; l + 1 < layers_.size(); ++l) w = std::max(w, layers_[l].W.rows());
  return w;
}

double FeedForwardBlock::weight_bound() const {
  double m = 0.0;
  for (const auto& layer : layers_) {
    m = std::max(m, layer.W.max_abs());
    for (double v : layer.b) m = std::max(m, std::abs(v));
  }
  return m;
}

std::size_t FeedForwardBlock::param_count() const {
  std::size_t c = 0;
  for (const auto& layer : layers_) c += layer.W.size() + layer.b.size();
  return c;
}

Matrix ffn_eval(const FeedForwardBlock& block, const Matrix& X) { return block.eval(X); }

namespace {

std::vector<double> matvec(const Matrix& A, const std::vector<double>& x) {
  std::vector<double> y(A.rows(), 0.0);
  for (std::size_t i = 0; i < A.rows(); ++i)
    for (std::size_t j = 0; j < A.cols(); ++j) y[i] += A(i, j) * x[j];
  return y;
}

std::vector<double> add(std::vector<double> a, const std::vector<double>& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  return a;
}

std::vector<double> concat(std::vector<double> a, const std::vector<double>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

FeedForwardBlock affine_ffn(const Matrix& W, const std::vector<double>& b) {
  return FeedForwardBlock({AffineLayer{W, b}});
}

FeedForwardBlock constant_ffn(std::size_t d_in, const std::vector<double>& values) {
  return affine_ffn(Matrix(values.size(), d_in), values);
}

FeedForwardBlock compose_ffn(const FeedForwardBlock& first, const FeedForwardBlock& second) {
  require_shape(first.d_out() == second.d_in(), "compose_ffn: dimension mismatch");
  std::vector<AffineLayer> layers(first.layers().begin(), first.layers().end() - 1);
  const AffineLayer& last = first.layers().back();
  const AffineLayer& head = second.layers().front();
  layers.push_back(AffineLayer{matmul(head.W, last.W), add(matvec(head.W, last.b), head.b)});
  layers.insert(layers.end(), second.layers().begin() + 1, second.layers().end());
  return FeedForwardBlock(std::move(layers));
}

FeedForwardBlock precompose_affine(const FeedForwardBlock& block, const Matrix& A, const std::vector<double>& c) {
  return compose_ffn(affine_ffn(A, c), block);
}

FeedForwardBlock postcompose_affine(const FeedForwardBlock& block, const Matrix& A, const std::vector<double>& c) {
  return compose_ffn(block, affine_ffn(A, c));
}

FeedForwardBlock parallel_ffn(const FeedForwardBlock& a, const FeedForwardBlock& b) {
  if (a.depth() != b.depth()) {
    const std::size_t L = std::max(a.depth(), b.depth());
    return parallel_ffn(pad_depth(a, L), pad_depth(b, L));
  }
  std::vector<AffineLayer> layers;
  for (std::size_t l = 0; l < a.depth(); ++l) {
    const auto& la = a.layers()[l];
    const auto& lb = b.layers()[l];
    layers.push_back(AffineLayer{block_diag(la.W, lb.W), concat(la.b, lb.b)});
  }
  return FeedForwardBlock(std::move(layers));
}

FeedForwardBlock parallel_ffn(const std::vector<FeedForwardBlock>& blocks) {
  require_shape(!blocks.empty(), "parallel_ffn: empty list");
  std::size_t L = 0;
  for (const auto& b : blocks) L = std::max(L, b.depth());
  std::vector<AffineLayer> layers(L);
  std::vector<std::size_t> rows(L, 0), cols(L, 0);
  std::vector<FeedForwardBlock> padded;
  padded.reserve(blocks.size());
  for (const auto& b : blocks) {
    padded.push_back(pad_depth(b, L));
    for (std::size_t l = 0; l < L; ++l) {
      rows[l] += padded.back().layers()[l].W.rows();
      cols[l] += padded.back().layers()[l].W.cols();
    }
  }
  for (std::size_t l = 0; l < L; ++l) {
    layers[l].W = Matrix(rows[l], cols[l]);
    layers[l].b.reserve(rows[l]);
    std::size_t r0 = 0, c0 = 0;
    for (const auto& p : padded) {
      const auto& pl = p.layers()[l];
      layers[l].W.set_block(r0, c0, pl.W);
      layers[l].b.insert(layers[l].b.end(), pl.b.begin(), pl.b.end());
      r0 += pl.W.rows();
      c0 += pl.W.cols();
    }
  }
  return FeedForwardBlock(std::move(layers));
}

FeedForwardBlock pad_depth(const FeedForwardBlock& block, std::size_t L_target) {
  if (L_target < block.depth()) throw std::invalid_argument("pad_depth: target below current depth");
  FeedForwardBlock out = block;
  while (out.depth() < L_target) out = compose_ffn(out, build_identity_ffn(out.d_out()));
  return out;
}

FeedForwardBlock build_identity_ffn(std::size_t dim) {
  Matrix W1(2 * dim, dim), W2(dim, 2 * dim);
  for (std::size_t i = 0; i < dim; ++i) {
    W1(i, i) = 1.0;
    W1(dim + i, i) = -1.0;
    W2(i, i) = 1.0;
    W2(i, dim + i) = -1.0;
  }
  return FeedForwardBlock({AffineLayer{W1, std::vector<double>(2 * dim, 0.0)},
                           AffineLayer{W2, std::vector<double>(dim, 0.0)}});
}

FeedForwardBlock build_discretization_ffn(std::size_t K, double delta, bool absorb_top_cell) {
  if (K == 0) throw std::invalid_argument("discretization: K must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("discretization: delta must lie in (0,1)");
  const std::size_t ramps = absorb_top_cell ? K - 1 : K;
  if (ramps == 0) return constant_ffn(1, {0.0});
  const double Kd = static_cast<double>(K);
  Matrix W1(ramps, 1), W2(ramps, ramps), W3(1, ramps);
  std::vector<double> b1(ramps), b2(ramps, 1.0);
  for (std::size_t k = 0; k < ramps; ++k) {
    W1(k, 0) = -Kd;
    b1[k] = static_cast<double>(k) + 1.0;
    W2(k, k) = -1.0 / delta;
    W3(0, k) = 1.0 / Kd;
  }
  return FeedForwardBlock({AffineLayer{W1, b1}, AffineLayer{W2, b2}, AffineLayer{W3, {0.0}}});
}

FeedForwardBlock build_middle_ffn() {
  // hidden 1: s(x1-x2), s(+-x1), s(+-x2), s(+-x3)
  Matrix W1{{1, -1, 0}, {1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  // hidden 2: s(max12 - x3), s(x3 - min12), s(T), s(-T) with T = x1 + x2 - x3
  Matrix W2{{1, 0, 0, 1, -1, -1, 1},
            {1, -1, 1, 0, 0, 1, -1},
            {0, 1, -1, 1, -1, -1, 1},
            {0, -1, 1, -1, 1, 1, -1}};
  Matrix W3{{-1, 1, 1, -1}};
  return FeedForwardBlock({AffineLayer{W1, std::vector<double>(7, 0.0)},
                           AffineLayer{W2, std::vector<double>(4, 0.0)}, AffineLayer{W3, {0.0}}});
}

FeedForwardBlock build_eliminate_ffn(double r_prime) {
  Matrix W1{{2, -2}, {2, -2}, {2, -2}, {2, -2}};
  Matrix W2{{r_prime, -r_prime, -r_prime, r_prime}};
  return FeedForwardBlock({AffineLayer{W1, {2.0, 1.0, -1.0, -2.0}}, AffineLayer{W2, {0.0}}});
}

FeedForwardBlock build_interpolating_memorizer(std::vector<std::pair<double, double>> points, double phi,
                                               double B_x, double B_y) {
  if (points.empty()) throw std::invalid_argument("interpolating memorizer: no points");
  if (!(phi > 0.0)) throw std::invalid_argument("interpolating memorizer: phi must be positive");
  std::sort(points.begin(), points.end());
  for (const auto& [x, y] : points) {
    if (std::abs(x) > B_x || std::abs(y) > B_y)
      throw std::invalid_argument("interpolating memorizer: point outside declared bounds");
  }
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (points[i].first - points[i - 1].first < phi)
      throw std::invalid_argument("interpolating memorizer: inputs duplicated or closer than phi");
  }
  const std::size_t N = points.size();
  if (N == 1) {
    return FeedForwardBlock({AffineLayer{Matrix(1, 1), {0.0}}, AffineLayer{Matrix(1, 1), {points[0].second}}});
  }
  Matrix W1(N - 1, 1, 1.0), W2(1, N - 1);
  std::vector<double> b1(N - 1);
  double prev_slope = 0.0;
  for (std::size_t j = 0; j + 1 < N; ++j) {
    b1[j] = -points[j].first;
    const double slope = (points[j + 1].second - points[j].second) / (points[j + 1].first - points[j].first);
    W2(0, j) = slope - prev_slope;
    prev_slope = slope;
  }
  return FeedForwardBlock({AffineLayer{W1, b1}, AffineLayer{W2, {points[0].second}}});
}

int multiplication_sawtooth_depth(double B, double eps) {
  // Three squares, each within 4^{-m-1}, scaled by 2B^2.
  const double m = std::ceil(std::log(1.5 * B * B / eps) / std::log(4.0));
  return std::max(1, static_cast<int>(m));
}

FeedForwardBlock build_multiplication_ffn(double B, double eps) {
  if (!(B >= 1.0)) throw std::invalid_argument("multiplication: B must be >= 1");
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("multiplication: eps must lie in (0,1)");
  const int m = multiplication_sawtooth_depth(B, eps);
  const double s = 1.0 / (2.0 * B);
  std::vector<AffineLayer> layers;

  // |u| = relu(u) + relu(-u) for u in {(x+y), x, y} / 2B.
  Matrix W1{{s, s}, {-s, -s}, {s, 0}, {-s, 0}, {0, s}, {0, -s}};
  layers.push_back({W1, std::vector<double>(6, 0.0)});

  // Per channel: relu(g), relu(g - 1/2), relu(g - 1), relu(S), starting from g = S = |u|.
  Matrix W2(12, 6);
  std::vector<double> b2(12);
  for (int c = 0; c < 3; ++c) {
    for (int q = 0; q < 4; ++q) {
      W2(4 * c + q, 2 * c) = 1.0;
      W2(4 * c + q, 2 * c + 1) = 1.0;
    }
    b2[4 * c + 0] = 0.0;
    b2[4 * c + 1] = -0.5;
    b2[4 * c + 2] = -1.0;
    b2[4 * c + 3] = 0.0;
  }
  layers.push_back({W2, b2});

  // Tooth: g_k = 2p - 4q + 2r; partial sum S_k = S_{k-1} - g_k / 4^k.
  for (int k = 1; k < m; ++k) {
    const double w = std::pow(4.0, -k);
    Matrix W(12, 12);
    std::vector<double> b(12);
    for (int c = 0; c < 3; ++c) {
      const int o = 4 * c;
      for (int q = 0; q < 3; ++q) {
        W(o + q, o + 0) = 2.0;
        W(o + q, o + 1) = -4.0;
        W(o + q, o + 2) = 2.0;
      }
      b[o + 0] = 0.0;
      b[o + 1] = -0.5;
      b[o + 2] = -1.0;
      W(o + 3, o + 0) = -2.0 * w;
      W(o + 3, o + 1) = 4.0 * w;
      W(o + 3, o + 2) = -2.0 * w;
      W(o + 3, o + 3) = 1.0;
      b[o + 3] = 0.0;
    }
    layers.push_back({W, b});
  }

  // Output: 2B^2 (S^{x+y} - S^x - S^y) with the final tooth folded in.
  const double w = std::pow(4.0, -m);
  const double scale = 2.0 * B * B;
  Matrix Wout(1, 12);
  const double sign[3] = {1.0, -1.0, -1.0};
  for (int c = 0; c < 3; ++c) {
    const int o = 4 * c;
    Wout(0, o + 0) = sign[c] * scale * (-2.0 * w);
    Wout(0, o + 1) = sign[c] * scale * (4.0 * w);
    Wout(0, o + 2) = sign[c] * scale * (-2.0 * w);
    Wout(0, o + 3) = sign[c] * scale;
  }
  layers.push_back({Wout, {0.0}});
  return FeedForwardBlock(std::move(layers));
}

namespace {

std::size_t ceil_log2(std::size_t d) {
  std::size_t k = 0;
  while ((std::size_t{1} << k) < d) ++k;
  return k;
}

// Binary tree of multiplications over 2^levels inputs; per-node tolerance node_eps.
FeedForwardBlock product_tree(std::size_t levels, double node_eps) {
  FeedForwardBlock leaf = build_multiplication_ffn(1.0, node_eps);
  if (levels == 1) return leaf;
  FeedForwardBlock sub = product_tree(levels - 1, node_eps);
  FeedForwardBlock both = parallel_ffn(sub, sub);
  return compose_ffn(both, build_multiplication_ffn(2.0, node_eps));
}

}  // namespace

FeedForwardBlock build_product_chain_ffn(std::size_t d, double eps) {
  if (d < 2) throw std::invalid_argument("product chain: d must be >= 2");
  const std::size_t levels = ceil_log2(d);
  const double max_eps = (std::pow(3.0, static_cast<double>(levels)) - 1.0) / 2.0;
  if (!(eps > 0.0 && eps < max_eps)) throw std::invalid_argument("product chain: eps out of admissible range");
  const double node_eps = 2.0 * eps / (std::pow(3.0, static_cast<double>(levels)) - 1.0);
  FeedForwardBlock tree = product_tree(levels, node_eps);
  const std::size_t width = std::size_t{1} << levels;
  if (width == d) return tree;
  Matrix A(width, d);
  std::vector<double> c(width, 0.0);
  for (std::size_t i = 0; i < d; ++i) A(i, i) = 1.0;
  for (std::size_t i = d; i < width; ++i) c[i] = 1.0;
  return precompose_affine(tree, A, c);
}

FeedForwardBlock build_monomial_ffn(const std::vector<int>& alpha, double eps) {
  const std::size_t d = alpha.size();
  const int total = std::accumulate(alpha.begin(), alpha.end(), 0);
  if (total == 0) return constant_ffn(d, {1.0});
  Matrix A(static_cast<std::size_t>(total), d);
  std::size_t r = 0;
  for (std::size_t i = 0; i < d; ++i)
    for (int k = 0; k < alpha[i]; ++k) A(r++, i) = 1.0;
  if (total == 1) return affine_ffn(A, {0.0});
  return precompose_affine(build_product_chain_ffn(static_cast<std::size_t>(total), eps), A,
                           std::vector<double>(static_cast<std::size_t>(total), 0.0));
}

}  // namespace tfa
