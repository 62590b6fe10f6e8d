#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "helpers.hpp"
#include "tfa/analysis.hpp"
#include "tfa/attention.hpp"

using tfa::Matrix;
using tfa::SelfAttentionLayer;

namespace {

// X + sum_h W_O W_V X softmax(X^T W_K^T W_Q X), computed with plain loops.
Matrix attention_oracle(const SelfAttentionLayer& a, const Matrix& X) {
  const std::size_t n = X.cols();
  Matrix out = X;
  for (const auto& h : a.heads()) {
    const Matrix K = tfa::matmul(h.W_K, X), Q = tfa::matmul(h.W_Q, X), V = tfa::matmul(h.W_V, X);
    Matrix A(n, n);
    for (std::size_t j = 0; j < n; ++j) {
      std::vector<double> s(n);
      double mx = -INFINITY;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t r = 0; r < K.rows(); ++r) s[i] += K(r, i) * Q(r, j);
        mx = std::max(mx, s[i]);
      }
      double z = 0;
      for (double& v : s) z += (v = std::exp(v - mx));
      for (std::size_t i = 0; i < n; ++i) A(i, j) = s[i] / z;
    }
    out += tfa::matmul(h.W_O, tfa::matmul(V, A));
  }
  return out;
}

}  // namespace

TEST(AttentionEval, MatchesLoopOracle) {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 20; ++t) {
    const SelfAttentionLayer a = testing_util::random_attention(3, 2, 2, rng);
    const Matrix X = testing_util::random_matrix(3, 5, rng, 2.0);
    EXPECT_LE(tfa::max_abs_diff(a.eval(X), attention_oracle(a, X)), 1e-13);
  }
}

TEST(AttentionEval, UniformScoresAddRowSums) {
  // W_K = W_Q = 0 gives softmax 1/n everywhere; W_O W_V = n I makes each column gain the row sums.
  const std::size_t d = 2, n = 3;
  tfa::AttentionHead h{Matrix::identity(d) * static_cast<double>(n), Matrix::identity(d), Matrix(d, d), Matrix(d, d)};
  const SelfAttentionLayer a({h});
  const Matrix X{{1, 2, 3}, {-1, 0, 4}};
  const Matrix expected{{7, 8, 9}, {2, 3, 7}};
  EXPECT_LE(tfa::max_abs_diff(a.eval(X), expected), 1e-14);
}

TEST(AttentionEval, SingleTokenSoftmaxIsOne) {
  std::mt19937_64 rng(32);
  const SelfAttentionLayer a = testing_util::random_attention(3, 2, 4, rng);
  const Matrix X = testing_util::random_matrix(3, 1, rng);
  Matrix expected = X;
  for (const auto& h : a.heads()) expected += tfa::matmul(h.W_O, tfa::matmul(h.W_V, X));
  EXPECT_LE(tfa::max_abs_diff(a.eval(X), expected), 1e-14);
}

TEST(AttentionEval, SerialAndParallelAreBitwiseEqual) {
  std::mt19937_64 rng(33);
  for (std::size_t n : {1, 4, 40, 90}) {
    const SelfAttentionLayer a = testing_util::random_attention(4, 3, 2, rng);
    const Matrix X = testing_util::random_matrix(4, n, rng);
    EXPECT_EQ(a.eval_serial(X), a.eval_parallel(X));
    EXPECT_EQ(a.eval(X), a.eval_serial(X));
  }
}

TEST(AttentionEval, ZeroOutputWeightsGiveIdentity) {
  std::mt19937_64 rng(34);
  SelfAttentionLayer a = testing_util::random_attention(3, 2, 2, rng);
  for (auto& h : a.mutable_heads()) h.W_O = Matrix(3, 2);
  const Matrix X = testing_util::random_matrix(3, 4, rng, 5.0);
  EXPECT_EQ(a.eval(X), X);
}

TEST(IdentityAttention, IsIdentityWithUnitSize) {
  const SelfAttentionLayer a = tfa::build_identity_attention(3);
  EXPECT_EQ(a.head_count(), 1u);
  EXPECT_EQ(a.head_size(), 1u);
  EXPECT_LE(a.weight_bound(), 1.0);
  std::mt19937_64 rng(35);
  const Matrix X = testing_util::random_matrix(3, 6, rng, 10.0);
  EXPECT_EQ(a.eval(X), X);
  EXPECT_EQ(a.eval(a.eval(a.eval(X))), X);
}

TEST(MaxAttention, ZeroRowStaysZero) {
  const SelfAttentionLayer a = tfa::build_max_attention(3, 2, 10);
  const Matrix X{{0, 0, 0}, {1, 1, 1}, {0, 0, 0}};
  const Matrix Y = a.eval(X);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(Y(2, k), 0.0);
}

TEST(MaxAttention, ApproximatesMaximumWithinBand) {
  const double r = 2, P = 10;
  const SelfAttentionLayer a = tfa::build_max_attention(3, r, P);
  ASSERT_TRUE(a.temperature.has_value());
  EXPECT_NEAR(*a.temperature, 0.5 * std::log(8 * std::pow(3.0, 1.5) * r * P), 1e-14);
  const Matrix Y = a.eval(Matrix{{0, 4, 0}, {1, 1, 1}, {0, 0, 0}});
  const double lo = 4 - 1 / (2 * P * std::sqrt(3.0));
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_GE(Y(2, k), lo);
    EXPECT_LE(Y(2, k), 4.0);
    EXPECT_EQ(Y(2, k), Y(2, 0));
    EXPECT_EQ(Y(0, k), (k == 1 ? 4.0 : 0.0));
    EXPECT_EQ(Y(1, k), 1.0);
  }
}

TEST(MaxAttention, RandomSeparatedInputs) {
  std::mt19937_64 rng(36);
  std::uniform_real_distribution<double> u(-3, 3);
  const std::size_t n = 5;
  const double r = 30, P = 4;
  const SelfAttentionLayer a = tfa::build_max_attention(n, r, P);
  for (int t = 0; t < 200; ++t) {
    Matrix X(3, n);
    std::vector<double> x(n);
    const double top = u(rng) * 10;
    for (std::size_t k = 0; k < n; ++k) x[k] = top - 2 - std::abs(u(rng)) * 8;
    x[rng() % n] = top;
    for (std::size_t k = 0; k < n; ++k) {
      X(0, k) = x[k];
      X(1, k) = 1;
    }
    const Matrix Y = a.eval(X);
    for (std::size_t k = 0; k < n; ++k) {
      ASSERT_GE(Y(2, k), top - 1 / (2 * P * std::sqrt(static_cast<double>(n))) - 1e-12);
      ASSERT_LE(Y(2, k), top + 1e-12);
    }
  }
}

TEST(MaxAttention, SingleTokenIsExact) {
  const SelfAttentionLayer a = tfa::build_max_attention(1, 5, 5);
  EXPECT_EQ(a.eval(Matrix{{3.25}, {1}, {0}})(2, 0), 3.25);
}

TEST(BroadcastAttention, CopiesRowSumsDown) {
  const std::size_t dn = 2, n = 2;
  const SelfAttentionLayer a = tfa::build_broadcast_attention(dn, n);
  // Spread layout: column k holds entry values of token k in the top rows.
  const Matrix X{{0.2, 0}, {0, 0.7}, {0, 0}, {0, 0}};
  const Matrix Y = a.eval(X);
  for (std::size_t k = 0; k < n; ++k) {
    EXPECT_NEAR(Y(2, k), 0.2, 1e-15);
    EXPECT_NEAR(Y(3, k), 0.7, 1e-15);
  }
  const Matrix Z = a.eval(Matrix(4, 2));
  EXPECT_EQ(Z, Matrix(4, 2));
  const Matrix one = tfa::build_broadcast_attention(3, 1).eval(Matrix{{1}, {2}, {3}, {0}, {0}, {0}});
  EXPECT_EQ(one, (Matrix{{1}, {2}, {3}, {1}, {2}, {3}}));
}

TEST(ParallelAttention, StackedExactness) {
  std::mt19937_64 rng(37);
  for (int t = 0; t < 30; ++t) {
    const SelfAttentionLayer a = testing_util::random_attention(2, 1 + t % 3, 2, rng);
    const SelfAttentionLayer b = testing_util::random_attention(3, 2, 1 + t % 4, rng);
    const SelfAttentionLayer ab = tfa::parallel_attention(a, b);
    EXPECT_EQ(ab.head_count(), a.head_count() + b.head_count());
    EXPECT_EQ(ab.head_size(), std::max(a.head_size(), b.head_size()));
    const Matrix X = testing_util::random_matrix(2, 4, rng), Y = testing_util::random_matrix(3, 4, rng);
    EXPECT_LE(tfa::max_abs_diff(ab.eval(tfa::vstack(X, Y)), tfa::vstack(a.eval(X), b.eval(Y))), 1e-13);
  }
  const SelfAttentionLayer ii = tfa::parallel_attention(tfa::build_identity_attention(1), tfa::build_identity_attention(2));
  const Matrix X = testing_util::random_matrix(3, 3, rng);
  EXPECT_EQ(ii.eval(X), X);
}

TEST(AttentionBounds, GrowthLipschitzAndPerturbationHold) {
  std::mt19937_64 rng(38);
  for (int t = 0; t < 30; ++t) {
    const SelfAttentionLayer a = testing_util::random_attention(1 + t % 3, 1 + t % 2, 1 + t % 3, rng, 1.5);
    const auto rep = tfa::check_norm_bounds(a, 1 + t % 4, 50, 2000 + t);
    EXPECT_TRUE(rep.passed()) << rep.first_violation;
  }
}
