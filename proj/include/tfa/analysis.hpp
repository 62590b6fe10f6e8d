#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "tfa/approximator.hpp"
#include "tfa/transformer.hpp"

namespace tfa {

struct StructureConfig {
  std::size_t K = 0, L = 1, W = 1, H = 1, S = 1;
  std::size_t d_in = 1, d_out = 1, n = 1;
  std::vector<std::size_t> d;  // d_0, d_1, ..., d_K
  double B_EB = 1, B_FF = 1, B_SA = 1;
  double M_EB = 0, M_FF = 0, M_SA = 0;
};

StructureConfig structure_of(const Transformer& T);

struct BoundValue {
  long double log_value = 0;  // natural log
  double log10() const { return static_cast<double>(log_value / 2.302585092994045684L); }
  // exp(log_value) when finite as a double, +inf otherwise.
  double value() const;
};

// Closed-form constant bounding output change per unit parameter perturbation.
BoundValue theoretical_lipschitz_bound(const StructureConfig& cfg);
// log of the covering-number bound, clamped at 0.
long double covering_number_log_bound(const StructureConfig& cfg, double varsigma);
long double covering_number_log_bound_unclamped(const StructureConfig& cfg, double varsigma);

struct GeneralizationTerms {
  double leading = 0, entropy = 0, approximation = 0, dudley = 0;
  double total() const { return leading + entropy + approximation + dudley; }
};

GeneralizationTerms generalization_terms(const StructureConfig& cfg, double m, double sigma, double B_F, double gamma,
                                         double d_eff, double approx_err, std::size_t quadrature_levels = 12);
double generalization_bound(const StructureConfig& cfg, double m, double sigma, double B_F, double gamma,
                            double d_eff, double approx_err);
// int_0^upper sqrt(log(2 N(v)^2)) dv by tanh-sinh quadrature.
double dudley_integral(const StructureConfig& cfg, double upper, std::size_t quadrature_levels = 12);

struct RateConfig {
  StructureConfig cfg;
  double eps = 0;
};
// Architecture sizes that balance approximation and estimation error at sample size m (O-constants set to 1).
RateConfig rate_optimal_config(double m, std::size_t d, std::size_t n, int s, double lambda);

// Per-object formula bounds (B, W taken as max(., 1)).
double ffn_norm_bound(const FeedForwardBlock& f, std::size_t n, double normX);
double attention_norm_bound(const SelfAttentionLayer& a, std::size_t n, double normY);
double embedding_norm_bound(const EmbeddingLayer& e, double normZ);
double ffn_perturbation_bound(const FeedForwardBlock& f, std::size_t n, double normX, double varsigma);
double attention_perturbation_bound(const SelfAttentionLayer& a, std::size_t n, double normY, double varsigma);
double embedding_perturbation_bound(const EmbeddingLayer& e, double normZ, double varsigma);
double ffn_lipschitz_bound(const FeedForwardBlock& f);
double attention_local_lipschitz_bound(const SelfAttentionLayer& a, std::size_t n, double E);

// Every parameter moved by +-varsigma with random signs.
FeedForwardBlock perturb(const FeedForwardBlock& f, double varsigma, std::uint64_t seed);
SelfAttentionLayer perturb(const SelfAttentionLayer& a, double varsigma, std::uint64_t seed);
EmbeddingLayer perturb(const EmbeddingLayer& e, double varsigma, std::uint64_t seed);
Transformer perturb(const Transformer& T, double varsigma, std::uint64_t seed);

struct NormCheckReport {
  std::size_t trials = 0;
  std::size_t violations = 0;
  double worst_ratio = 0;  // max observed / bound
  std::string first_violation;
  bool passed() const { return violations == 0; }
  void merge(const NormCheckReport& o);
};

// Growth, Lipschitz and parameter-perturbation bounds on random inputs with ||input||_F >= 1.
NormCheckReport check_norm_bounds(const FeedForwardBlock& f, std::size_t n, std::size_t trials, std::uint64_t seed);
NormCheckReport check_norm_bounds(const SelfAttentionLayer& a, std::size_t n, std::size_t trials, std::uint64_t seed);
NormCheckReport check_norm_bounds(const EmbeddingLayer& e, std::size_t trials, std::uint64_t seed);

struct ErrorReport {
  double t = 2;  // infinity for the sup norm
  double estimate = 0;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  double max_abs_deviation = 0;
  double cell_max = 0, flaw_max = 0;
  std::size_t cell_samples = 0, flaw_samples = 0;
  std::vector<double> per_cell_max;  // stratified runs only, lexicographic cell order
};

ErrorReport estimate_lt_error(const Transformer& T, const HolderTarget& target, double t, std::size_t samples,
                              std::uint64_t seed, std::optional<GridSpec> grid = std::nullopt);
// Stratified sup error: per_cell samples inside every good cell, plus flaw-band samples when requested.
ErrorReport stratified_sup_error(const Transformer& T, const HolderTarget& target, const GridSpec& grid,
                                 std::size_t per_cell, std::uint64_t seed, bool include_flaw = true);

// max ||T(X') - T(X)||_F / ||X' - X||_F over pairs in the radius-ball (Frobenius).
double empirical_lipschitz(const Transformer& T, double radius, std::size_t probes, std::uint64_t seed);
// Same with pairs drawn from the unit cube [0,1]^{d x n}.
double empirical_lipschitz_cube(const Transformer& T, std::size_t probes, std::uint64_t seed);

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace tfa
