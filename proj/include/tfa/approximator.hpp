#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tfa/contextual.hpp"
#include "tfa/transformer.hpp"

namespace tfa {

using MultiIndex = std::vector<int>;  // over the d*n entries in row-major order

struct HolderTarget {
  std::string name;
  std::size_t d = 1, n = 1;
  int s = 0;
  double lambda = 1.0;
  double holder_norm_bound = 1.0;
  std::function<Matrix(const Matrix&)> eval;
  // D^alpha f_pq at X.
  std::function<double(const MultiIndex&, const Matrix&, std::size_t p, std::size_t q)> derivative;
  // Worst change of any f_pq when one entry moves by at most delta.
  std::function<double(double)> modulus;

  double gamma() const { return static_cast<double>(s) + lambda; }
};

// "sin2pi", "poly:c0,c1,...", "const:c", "gauss-bump".
HolderTarget make_target(const std::string& spec, std::size_t d, std::size_t n, int s, double lambda = 1.0);

std::vector<MultiIndex> enumerate_multi_indices(std::size_t d, std::size_t n, int s);

struct CoefficientTable {
  std::vector<MultiIndex> indices;
  // coeff[i][p][q] = D^alpha_i f_pq(X) / alpha_i!
  std::vector<std::vector<std::vector<double>>> coeff;
};

CoefficientTable taylor_coefficients(const HolderTarget& target, const Matrix& grid_point,
                                     const std::vector<MultiIndex>& indices, bool allow_finite_differences = true);
double finite_difference_derivative(const std::function<Matrix(const Matrix&)>& f, const MultiIndex& alpha,
                                    const Matrix& X, std::size_t p, std::size_t q, double h = 1e-3);
// Sum_i c_i (X - X0)^alpha_i for output (p, q).
double taylor_polynomial(const CoefficientTable& table, const Matrix& X, const Matrix& X0, std::size_t p, std::size_t q);

struct GridSpec {
  std::size_t K = 1;
  double delta = 0.1;
};

struct RegionInfo {
  bool flaw = false;
  std::vector<std::size_t> beta;  // per entry, row-major
  std::size_t index = 0;          // lexicographic over beta
};

RegionInfo flaw_region_indicator(const Matrix& X, const GridSpec& grid);
Matrix grid_point_of(const std::vector<std::size_t>& beta, std::size_t d, std::size_t n, std::size_t K);

struct BuildBudget {
  std::size_t max_grid_points = 10000;
  std::size_t max_params = 5000000;
};

class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GridApproximator {
  Transformer T;
  GridSpec grid;
  double eps = 0;
  double eps_taylor = 0, eps_monomial = 0, eps_multiplication = 0;
  double coefficient_bound = 0;  // C(f)
  double multiplication_B = 0;
  std::vector<MultiIndex> indices;
  std::vector<Matrix> grid_points;       // as produced by the discretization block
  std::vector<CoefficientTable> tables;  // per grid point
  bool projections_verified = true;
};

struct GridOptions {
  BuildBudget budget;
  bool absorb_top_cell = false;  // saturate the discretization at (K-1)/K
  Matrix input_shift;            // added to X inside the embedding (empty = none)
};

double taylor_constant(const HolderTarget& target);
// Smallest K with C K^{-gamma} <= eps/3.
std::size_t grid_size_for(const HolderTarget& target, double eps);
// Default delta: min(eps^{1/lambda}, 1/(3K)).
double default_delta(const HolderTarget& target, double eps, std::size_t K);

GridApproximator build_grid_approximator(const HolderTarget& target, double eps, const GridSpec& grid,
                                         std::uint64_t seed, const GridOptions& options = {});

struct UniformApproximator {
  Transformer T;
  GridSpec grid;
  double eps = 0;
  std::size_t copies = 0;
  std::vector<GridApproximator> shifted;
};

UniformApproximator build_uniform_approximator(const HolderTarget& target, double eps, std::uint64_t seed,
                                               std::optional<GridSpec> grid = std::nullopt,
                                               const BuildBudget& budget = {});

}  // namespace tfa
