#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "helpers.hpp"
#include "tfa/analysis.hpp"
#include "tfa/ffn.hpp"

using tfa::FeedForwardBlock;
using tfa::Matrix;

namespace {

// Piecewise definition of the discretization map, written independently of the builder.
double discretize_oracle(double x, std::size_t K, double delta) {
  const double Kd = static_cast<double>(K);
  const double k = std::min(std::floor(x * Kd), Kd - 1);
  if (x < (k + 1 - delta) / Kd) return k / Kd;
  return (k + 1) / Kd - (k + 1 - Kd * x) / (Kd * delta);
}

double interpolate_oracle(const std::vector<std::pair<double, double>>& pts, double x) {
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const auto [x0, y0] = pts[i];
    const auto [x1, y1] = pts[i + 1];
    if (x >= x0 && x <= x1) return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
  }
  return NAN;
}

}  // namespace

TEST(FfnEval, SingleAffineLayerHasNoRelu) {
  const FeedForwardBlock f = tfa::affine_ffn(Matrix{{2}}, {1});
  EXPECT_EQ(f.eval(Matrix{{3, -1}}), (Matrix{{7, -1}}));
}

TEST(FfnEval, ColumnwiseMatchesVectorEvaluation) {
  std::mt19937_64 rng(11);
  const FeedForwardBlock f = testing_util::random_ffn({3, 5, 4, 2}, rng);
  const Matrix X = testing_util::random_matrix(3, 6, rng);
  const Matrix Y = f.eval(X);
  for (std::size_t c = 0; c < X.cols(); ++c) {
    const auto y = f.eval_vector(X.col(c));
    for (std::size_t r = 0; r < y.size(); ++r) EXPECT_EQ(Y(r, c), y[r]);
  }
}

TEST(FfnEval, InputShapeMismatchThrows) {
  const FeedForwardBlock f = tfa::build_identity_ffn(2);
  EXPECT_THROW(f.eval(Matrix(3, 1)), tfa::ShapeError);
}

TEST(IdentityFfn, ReproducesInput) {
  EXPECT_EQ(tfa::build_identity_ffn(1).eval_scalar(-3.5), -3.5);
  std::mt19937_64 rng(12);
  const auto v = testing_util::random_vector(3, rng, 10.0);
  const auto out = tfa::build_identity_ffn(3).eval_vector(v);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(out[i], v[i], 1e-15);
}

TEST(IdentityFfn, Size) {
  const FeedForwardBlock f = tfa::build_identity_ffn(3);
  EXPECT_EQ(f.depth(), 2u);
  EXPECT_EQ(f.width(), 6u);
  EXPECT_EQ(f.weight_bound(), 1.0);
}

TEST(Discretization, Examples) {
  const FeedForwardBlock f = tfa::build_discretization_ffn(4, 0.1);
  EXPECT_NEAR(f.eval_scalar(0.3), 0.25, 1e-12);
  EXPECT_NEAR(f.eval_scalar(0.49), discretize_oracle(0.49, 4, 0.1), 1e-12);
  EXPECT_NEAR(f.eval_scalar(0.49), 0.4, 1e-12);
  EXPECT_EQ(tfa::build_discretization_ffn(4, 0.2).eval_scalar(0.0), 0.0);
}

TEST(Discretization, MatchesPiecewiseDefinition) {
  for (std::size_t K : {1, 3, 4, 9}) {
    const double delta = 0.5 / static_cast<double>(K);
    const FeedForwardBlock f = tfa::build_discretization_ffn(K, delta);
    for (int i = 0; i <= 1000; ++i) {
      const double x = i / 1000.0;
      ASSERT_NEAR(f.eval_scalar(x), discretize_oracle(x, K, delta), 1e-12) << "K=" << K << " x=" << x;
    }
  }
}

TEST(Discretization, SizeAndWeightBound) {
  const FeedForwardBlock f = tfa::build_discretization_ffn(4, 0.1);
  EXPECT_EQ(f.depth(), 3u);
  EXPECT_EQ(f.width(), 4u);
  EXPECT_NEAR(f.weight_bound(), 10.0, 1e-12);
}

TEST(Discretization, AbsorbTopCellSaturates) {
  const FeedForwardBlock f = tfa::build_discretization_ffn(4, 0.1, true);
  EXPECT_EQ(f.width(), 3u);
  EXPECT_NEAR(f.eval_scalar(0.999), 0.75, 1e-12);
  EXPECT_NEAR(f.eval_scalar(1.05), 0.75, 1e-12);
  EXPECT_NEAR(f.eval_scalar(0.3), 0.25, 1e-12);
}

TEST(Middle, ReturnsMedian) {
  const FeedForwardBlock f = tfa::build_middle_ffn();
  EXPECT_NEAR(f.eval_vector({1, 5, 3})[0], 3, 1e-12);
  EXPECT_NEAR(f.eval_vector({2, 2, 7})[0], 2, 1e-12);
  EXPECT_NEAR(f.eval_vector({-1, -4, 0})[0], -1, 1e-12);
  std::mt19937_64 rng(13);
  for (int t = 0; t < 1000; ++t) {
    auto v = testing_util::random_vector(3, rng, 50.0);
    const double got = f.eval_vector(v)[0];
    std::sort(v.begin(), v.end());
    ASSERT_NEAR(got, v[1], 1e-12);
  }
}

TEST(Middle, Size) {
  const FeedForwardBlock f = tfa::build_middle_ffn();
  EXPECT_EQ(f.depth(), 3u);
  EXPECT_EQ(f.width(), 7u);
  EXPECT_EQ(f.weight_bound(), 1.0);
}

TEST(Eliminate, Examples) {
  const FeedForwardBlock f = tfa::build_eliminate_ffn(5);
  EXPECT_NEAR(f.eval_vector({3.0, 3.1})[0], 5, 1e-12);
  EXPECT_NEAR(f.eval_vector({0, 2})[0], 0, 1e-12);
  const FeedForwardBlock z = tfa::build_eliminate_ffn(0);
  EXPECT_EQ(z.eval_vector({1, 1.2})[0], 0);
  EXPECT_EQ(z.eval_vector({4, -9})[0], 0);
}

TEST(Eliminate, SizeAndRange) {
  const FeedForwardBlock f = tfa::build_eliminate_ffn(5);
  EXPECT_EQ(f.depth(), 2u);
  EXPECT_EQ(f.width(), 4u);
  EXPECT_EQ(f.weight_bound(), 5.0);
  EXPECT_EQ(tfa::build_eliminate_ffn(1).weight_bound(), 2.0);
  for (int i = 0; i <= 400; ++i) {
    const double gap = -2 + i / 100.0;
    const double y = f.eval_vector({gap, 0})[0];
    EXPECT_GE(y, -1e-12);
    EXPECT_LE(y, 5 + 1e-12);
  }
}

TEST(Interpolator, Examples) {
  const std::vector<std::pair<double, double>> pts{{0, 1}, {2, 3}, {4, -1}};
  const FeedForwardBlock f = tfa::build_interpolating_memorizer(pts, 2, 4, 3);
  EXPECT_EQ(f.eval_scalar(2), 3);
  EXPECT_EQ(f.eval_scalar(4), -1);
  EXPECT_NEAR(f.eval_scalar(3), interpolate_oracle(pts, 3), 1e-12);
  EXPECT_NEAR(f.eval_scalar(3), 1, 1e-12);

  const FeedForwardBlock zero = tfa::build_interpolating_memorizer({{0, 0}, {1, 0}}, 1, 1, 1);
  for (int i = 0; i <= 10; ++i) EXPECT_EQ(zero.eval_scalar(i / 10.0), 0);
}

TEST(Interpolator, SizeAndWeightBound) {
  std::mt19937_64 rng(14);
  std::vector<std::pair<double, double>> pts;
  for (int i = 0; i < 9; ++i) pts.push_back({-4.0 + i, std::uniform_real_distribution<double>(-2, 2)(rng)});
  const FeedForwardBlock f = tfa::build_interpolating_memorizer(pts, 1, 4, 2);
  EXPECT_EQ(f.depth(), 2u);
  EXPECT_EQ(f.width(), pts.size() - 1);
  EXPECT_LE(f.weight_bound(), std::max({1.0, 4.0, 2.0, 4 * 2.0 / 1}));
  for (const auto& [x, y] : pts) EXPECT_NEAR(f.eval_scalar(x), y, 1e-12);
  for (int i = 0; i <= 80; ++i) {
    const double x = -4 + i / 10.0;
    EXPECT_NEAR(f.eval_scalar(x), interpolate_oracle(pts, x), 1e-12);
  }
}

TEST(Interpolator, RejectsUnderSeparatedNodes) {
  EXPECT_THROW(tfa::build_interpolating_memorizer({{0, 0}, {0.05, 1}}, 0.1, 1, 1), std::invalid_argument);
  EXPECT_THROW(tfa::build_interpolating_memorizer({{0, 0}, {0, 1}}, 0.1, 1, 1), std::invalid_argument);
}

TEST(Multiplication, Examples) {
  const FeedForwardBlock f = tfa::build_multiplication_ffn(1, 1e-3);
  EXPECT_NEAR(f.eval_vector({0.5, 0.5})[0], 0.25, 1e-3);
  EXPECT_NEAR(f.eval_vector({1, 1})[0], 1, 1e-3);
  for (double y : {-1.0, -0.3, 0.0, 0.7, 1.0}) EXPECT_NEAR(f.eval_vector({0, y})[0], 0, 1e-3);
  const FeedForwardBlock g = tfa::build_multiplication_ffn(3, 1e-2);
  EXPECT_NEAR(g.eval_vector({3, 3})[0], 9, 1e-2);
}

TEST(Multiplication, GridErrorWithinEps) {
  for (double B : {1.0, 2.0}) {
    const double eps = 1e-3;
    const FeedForwardBlock f = tfa::build_multiplication_ffn(B, eps);
    double worst = 0;
    for (int i = 0; i < 200; ++i)
      for (int j = 0; j < 200; ++j) {
        const double x = -B + 2 * B * i / 199.0, y = -B + 2 * B * j / 199.0;
        worst = std::max(worst, std::abs(f.eval_vector({x, y})[0] - x * y));
      }
    EXPECT_LE(worst, eps) << "B=" << B;
  }
}

TEST(Multiplication, Size) {
  const FeedForwardBlock f = tfa::build_multiplication_ffn(1, 1e-3);
  const int m = tfa::multiplication_sawtooth_depth(1, 1e-3);
  EXPECT_EQ(m, static_cast<int>(std::ceil(std::log(1.5 / 1e-3) / std::log(4.0))));
  EXPECT_EQ(f.depth(), static_cast<std::size_t>(m + 2));
  EXPECT_EQ(f.width(), 12u);
  EXPECT_EQ(f.weight_bound(), 4.0);
  EXPECT_EQ(tfa::build_multiplication_ffn(2, 1e-3).weight_bound(), 8.0);
}

TEST(Multiplication, OutputRangeOnLargerBox) {
  const double B = 1, Bp = 3;
  const FeedForwardBlock f = tfa::build_multiplication_ffn(B, 1e-2);
  for (int i = 0; i <= 60; ++i)
    for (int j = 0; j <= 60; ++j) {
      const double x = -Bp + i * 0.1, y = -Bp + j * 0.1;
      ASSERT_LE(std::abs(f.eval_vector({x, y})[0]), std::max(12 * B * B, 4 * B * Bp) + 1e-9);
    }
}

TEST(ProductChain, TwoFactorsIsMultiplication) {
  EXPECT_EQ(tfa::build_product_chain_ffn(2, 0.01), tfa::build_multiplication_ffn(1, 0.01));
}

TEST(ProductChain, Examples) {
  EXPECT_NEAR(tfa::build_product_chain_ffn(4, 0.01).eval_vector({1, 1, 1, 1})[0], 1, 0.01);
  EXPECT_NEAR(tfa::build_product_chain_ffn(3, 0.01).eval_vector({0.5, 0.5, 0.5})[0], 0.125, 0.01);
}

TEST(ProductChain, RandomPointsWithinEps) {
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> u(0, 1);
  for (std::size_t d : {3, 5, 8}) {
    const FeedForwardBlock f = tfa::build_product_chain_ffn(d, 0.02);
    const std::size_t half = std::size_t{1} << (static_cast<int>(std::ceil(std::log2(d))) - 1);
    EXPECT_LE(f.width(), 21 * half);
    for (int t = 0; t < 300; ++t) {
      std::vector<double> x(d);
      double prod = 1;
      for (double& v : x) prod *= (v = u(rng));
      ASSERT_NEAR(f.eval_vector(x)[0], prod, 0.02);
    }
  }
}

TEST(ProductChain, RejectsInadmissibleEps) {
  EXPECT_THROW(tfa::build_product_chain_ffn(4, 100), std::invalid_argument);
}

TEST(Monomial, Examples) {
  const FeedForwardBlock lin = tfa::build_monomial_ffn({1}, 0.01);
  for (double x : {0.0, 0.3, 1.0}) EXPECT_EQ(lin.eval_scalar(x), x);
  EXPECT_NEAR(tfa::build_monomial_ffn({2, 1}, 1e-2).eval_vector({0.5, 0.5})[0], 0.125, 1e-2);
  EXPECT_NEAR(tfa::build_monomial_ffn({3}, 1e-2).eval_scalar(1), 1, 1e-2);
  EXPECT_EQ(tfa::build_monomial_ffn({0, 0}, 1e-2).eval_vector({0.4, 0.9})[0], 1);
}

TEST(Monomial, RandomPointsWithinEps) {
  std::mt19937_64 rng(16);
  std::uniform_real_distribution<double> u(0, 1);
  const std::vector<int> alpha{2, 0, 3};
  const FeedForwardBlock f = tfa::build_monomial_ffn(alpha, 1e-2);
  for (int t = 0; t < 300; ++t) {
    const std::vector<double> x{u(rng), u(rng), u(rng)};
    ASSERT_NEAR(f.eval_vector(x)[0], x[0] * x[0] * x[2] * x[2] * x[2], 1e-2);
  }
}

TEST(ParallelFfn, BlockDiagonalExactness) {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 20; ++t) {
    const FeedForwardBlock a = testing_util::random_ffn({2, 3, 2}, rng);
    const FeedForwardBlock b = testing_util::random_ffn({3, 5, 1}, rng);
    const FeedForwardBlock ab = tfa::parallel_ffn(a, b);
    EXPECT_EQ(ab.width(), a.width() + b.width());
    EXPECT_EQ(ab.weight_bound(), std::max(a.weight_bound(), b.weight_bound()));
    const Matrix X = testing_util::random_matrix(2, 4, rng), Y = testing_util::random_matrix(3, 4, rng);
    EXPECT_LE(tfa::max_abs_diff(ab.eval(tfa::vstack(X, Y)), tfa::vstack(a.eval(X), b.eval(Y))), 1e-15);
  }
}

TEST(ParallelFfn, IdentitiesStackToIdentity) {
  const FeedForwardBlock f = tfa::parallel_ffn(tfa::build_identity_ffn(2), tfa::build_identity_ffn(1));
  const Matrix X{{1, -2}, {3, 0.5}, {-7, 4}};
  EXPECT_EQ(f.eval(X), X);
}

TEST(ParallelFfn, DifferentDepthsArePadded) {
  std::mt19937_64 rng(18);
  const FeedForwardBlock a = testing_util::random_ffn({2, 3, 2}, rng);
  const FeedForwardBlock b = testing_util::random_ffn({1, 4, 4, 4, 1}, rng);
  const FeedForwardBlock ab = tfa::parallel_ffn(a, b);
  EXPECT_EQ(ab.depth(), 4u);
  const Matrix X = testing_util::random_matrix(2, 3, rng), Y = testing_util::random_matrix(1, 3, rng);
  EXPECT_LE(tfa::max_abs_diff(ab.eval(tfa::vstack(X, Y)), tfa::vstack(a.eval(X), b.eval(Y))), 1e-14);
}

TEST(PadDepth, PreservesFunction) {
  const FeedForwardBlock id = tfa::pad_depth(tfa::build_identity_ffn(1), 4);
  EXPECT_EQ(id.depth(), 4u);
  EXPECT_EQ(id.eval_scalar(-2.5), -2.5);

  std::mt19937_64 rng(19);
  const FeedForwardBlock f = testing_util::random_ffn({3, 4, 2}, rng);
  EXPECT_EQ(tfa::pad_depth(f, f.depth()), f);
  const FeedForwardBlock g = tfa::pad_depth(f, 5);
  EXPECT_LE(g.width(), 2 * std::max(f.width(), f.d_out()) + f.width());
  for (int t = 0; t < 20; ++t) {
    const Matrix X = testing_util::random_matrix(3, 5, rng, 4.0);
    EXPECT_LE(tfa::max_abs_diff(f.eval(X), g.eval(X)), 1e-15);
  }
  EXPECT_THROW(tfa::pad_depth(f, 1), std::invalid_argument);
}

TEST(Compose, DepthAddsMinusOne) {
  std::mt19937_64 rng(20);
  const FeedForwardBlock a = testing_util::random_ffn({2, 3, 4}, rng);
  const FeedForwardBlock b = testing_util::random_ffn({4, 5, 5, 1}, rng);
  const FeedForwardBlock ab = tfa::compose_ffn(a, b);
  EXPECT_EQ(ab.depth(), a.depth() + b.depth() - 1);
  const Matrix X = testing_util::random_matrix(2, 6, rng);
  EXPECT_LE(tfa::max_abs_diff(ab.eval(X), b.eval(a.eval(X))), 1e-12);
}

TEST(FfnBounds, GrowthLipschitzAndPerturbationHold) {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 30; ++t) {
    const std::size_t L = 1 + t % 4;
    std::vector<std::size_t> sizes{1 + rng() % 3};
    for (std::size_t l = 0; l < L; ++l) sizes.push_back(1 + rng() % 4);
    const FeedForwardBlock f = testing_util::random_ffn(sizes, rng, 2.0);
    const auto rep = tfa::check_norm_bounds(f, 1 + t % 3, 50, 1000 + t);
    EXPECT_TRUE(rep.passed()) << rep.first_violation;
  }
}
