#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "tfa/matrix.hpp"

namespace tfa {

struct AffineLayer {
  Matrix W;
  std::vector<double> b;

  bool operator==(const AffineLayer&) const = default;
};

// Token-wise ReLU network: ReLU after every layer except the last.
class FeedForwardBlock {
 public:
  FeedForwardBlock() = default;
  explicit FeedForwardBlock(std::vector<AffineLayer> layers);

  Matrix eval(const Matrix& X) const;
  std::vector<double> eval_vector(const std::vector<double>& x) const;
  double eval_scalar(double x) const;

  std::size_t depth() const { return layers_.size(); }
  std::size_t width() const;
  std::size_t d_in() const { return layers_.front().W.cols(); }
  std::size_t d_out() const { return layers_.back().W.rows(); }
  double weight_bound() const;
  std::size_t param_count() const;

  const std::vector<AffineLayer>& layers() const { return layers_; }
  std::vector<AffineLayer>& mutable_layers() { return layers_; }

  bool operator==(const FeedForwardBlock&) const = default;

 private:
  std::vector<AffineLayer> layers_;
};

Matrix ffn_eval(const FeedForwardBlock& block, const Matrix& X);

// Combinators.
FeedForwardBlock affine_ffn(const Matrix& W, const std::vector<double>& b);
FeedForwardBlock constant_ffn(std::size_t d_in, const std::vector<double>& values);
FeedForwardBlock compose_ffn(const FeedForwardBlock& first, const FeedForwardBlock& second);
FeedForwardBlock precompose_affine(const FeedForwardBlock& block, const Matrix& A, const std::vector<double>& c);
FeedForwardBlock postcompose_affine(const FeedForwardBlock& block, const Matrix& A, const std::vector<double>& c);
FeedForwardBlock parallel_ffn(const FeedForwardBlock& a, const FeedForwardBlock& b);
FeedForwardBlock parallel_ffn(const std::vector<FeedForwardBlock>& blocks);
FeedForwardBlock pad_depth(const FeedForwardBlock& block, std::size_t L_target);

// Gadgets.
FeedForwardBlock build_identity_ffn(std::size_t dim);
FeedForwardBlock build_discretization_ffn(std::size_t K, double delta, bool absorb_top_cell = false);
FeedForwardBlock build_middle_ffn();
FeedForwardBlock build_eliminate_ffn(double r_prime);
FeedForwardBlock build_interpolating_memorizer(std::vector<std::pair<double, double>> points, double phi,
                                               double B_x, double B_y);
FeedForwardBlock build_multiplication_ffn(double B, double eps);
int multiplication_sawtooth_depth(double B, double eps);
FeedForwardBlock build_product_chain_ffn(std::size_t d, double eps);
FeedForwardBlock build_monomial_ffn(const std::vector<int>& alpha, double eps);

}  // namespace tfa
