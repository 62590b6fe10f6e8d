#include "tfa/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <boost/math/quadrature/tanh_sinh.hpp>

namespace tfa {

namespace {

long double lg(double x) { return std::log(static_cast<long double>(x)); }
double at_least_one(double x) { return std::max(x, 1.0); }

double binomial(std::size_t a, std::size_t b) {
  if (b > a) return 0.0;
  double r = 1.0;
  for (std::size_t i = 1; i <= b; ++i) r = r * static_cast<double>(a - b + i) / static_cast<double>(i);
  return std::round(r);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 of (seed, index)
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double BoundValue::value() const {
  if (log_value > 709.0L) return std::numeric_limits<double>::infinity();
  return static_cast<double>(std::exp(log_value));
}

StructureConfig structure_of(const Transformer& T) {
  const SizeReport r = size_report(T);
  StructureConfig c;
  c.K = T.length();
  c.n = T.tokens();
  c.d_in = r.dims.front();
  c.d_out = r.dims.back();
  c.d.assign(r.dims.begin() + 1, r.dims.end() - 1);
  c.L = 1;
  c.W = 1;
  for (const auto& [L, W] : r.sizes.ffn) {
    c.L = std::max(c.L, L);
    c.W = std::max(c.W, W);
  }
  c.H = c.S = 1;
  for (const auto& [H, S] : r.sizes.sa) {
    c.H = std::max(c.H, H);
    c.S = std::max(c.S, S);
  }
  c.B_EB = r.B_EB;
  c.B_FF = r.B_FF;
  c.B_SA = r.B_SA;
  c.M_EB = static_cast<double>(r.M_EB);
  c.M_FF = static_cast<double>(r.M_FF);
  c.M_SA = static_cast<double>(r.M_SA);
  return c;
}

BoundValue theoretical_lipschitz_bound(const StructureConfig& c) {
  const long double K = static_cast<long double>(c.K);
  const long double L = static_cast<long double>(std::max<std::size_t>(c.L, 1));
  const double H = c.K == 0 ? 1.0 : at_least_one(static_cast<double>(c.H));
  const double S = c.K == 0 ? 1.0 : at_least_one(static_cast<double>(c.S));
  const long double K2 = K * K;
  long double v = lg(2.0 * static_cast<double>(c.K) + 2.0) + K * lg(6.0) + (K2 + K + 4) * lg(4.0);
  v += (K2 + 2.5L * K + 3) * lg(static_cast<double>(c.n));
  v += (K + 0.5L) * lg(static_cast<double>(c.d_in));
  v += (2 * K + 1) * lg(static_cast<double>(c.d.at(0)));
  for (std::size_t k = 1; k <= c.K; ++k)
    v += (4 * (K - static_cast<long double>(k)) + 6) * lg(static_cast<double>(c.d.at(k)));
  v += 0.5L * lg(static_cast<double>(c.d_out));
  v += (K2 + K - 1) * lg(H) + (K2 + 2 * K + 1) * lg(S) + (K2 + 2 * K + 3) * std::log(L);
  v += (L - 1) * (K2 + 3 * K + 3) * lg(at_least_one(static_cast<double>(c.W)));
  v += (2 * K + 1) * lg(at_least_one(c.B_EB));
  v += L * (K2 + 3 * K + 3) * lg(at_least_one(c.B_FF));
  v += 2 * (K2 + 2 * K + 1) * lg(at_least_one(c.B_SA));
  return BoundValue{v};
}

long double covering_number_log_bound_unclamped(const StructureConfig& c, double varsigma) {
  const long double logL = theoretical_lipschitz_bound(c).log_value;
  const long double ls = lg(varsigma);
  auto term = [&](double M, double B) {
    if (M == 0) return 0.0L;
    return static_cast<long double>(M) * (lg(2.0 * at_least_one(B)) + logL - ls);
  };
  return term(c.M_EB, c.B_EB) + term(c.M_FF, c.B_FF) + term(c.M_SA, c.B_SA);
}

long double covering_number_log_bound(const StructureConfig& c, double varsigma) {
  return std::max(0.0L, covering_number_log_bound_unclamped(c, varsigma));
}

double dudley_integral(const StructureConfig& cfg, double upper, std::size_t quadrature_levels) {
  if (upper <= 0) return 0.0;
  boost::math::quadrature::tanh_sinh<double> integrator(quadrature_levels);
  auto f = [&](double v) {
    if (v <= 0) v = std::numeric_limits<double>::min();
    const double logN = static_cast<double>(covering_number_log_bound(cfg, v));
    return std::sqrt(std::log(2.0) + 2.0 * logN);
  };
  return integrator.integrate(f, 0.0, upper);
}

GeneralizationTerms generalization_terms(const StructureConfig& cfg, double m, double sigma, double B_F, double gamma,
                                         double d_eff, double approx_err, std::size_t quadrature_levels) {
  GeneralizationTerms g;
  const double rate = std::pow(m, -2.0 * gamma / (2.0 * gamma + d_eff));
  const double scale = std::pow(m, -gamma / (2.0 * gamma + d_eff));
  g.leading = (896.0 * B_F * B_F / 3.0 + std::pow(2.0, 17) * sigma * sigma + 20.0) * rate;
  g.entropy = 896.0 * B_F * B_F * static_cast<double>(covering_number_log_bound(cfg, scale)) / (3.0 * m);
  g.approximation = 146.0 * approx_err * approx_err;
  const double I = dudley_integral(cfg, std::pow(2.0, 7) * sigma * scale, quadrature_levels);
  g.dudley = std::pow(2.0, 10) * sigma / std::pow(m, (gamma + d_eff) / (2.0 * gamma + d_eff)) * I * I;
  return g;
}

double generalization_bound(const StructureConfig& cfg, double m, double sigma, double B_F, double gamma,
                            double d_eff, double approx_err) {
  return generalization_terms(cfg, m, sigma, B_F, gamma, d_eff, approx_err).total();
}

RateConfig rate_optimal_config(double m, std::size_t d, std::size_t n, int s, double lambda) {
  const double gamma = s + lambda;
  const std::size_t dn = d * n;
  const double eps = std::pow(m, -gamma / (2.0 * gamma + static_cast<double>(dn)));
  const double log_inv = std::log(1.0 / eps);
  const double copies = std::pow(3.0, static_cast<double>(dn));
  const double C = binomial(static_cast<std::size_t>(s) + dn - 1, dn - 1);
  RateConfig rc;
  rc.eps = eps;
  StructureConfig& c = rc.cfg;
  c.K = n;
  c.n = n;
  c.d_in = d;
  c.d_out = d;
  c.L = std::max<std::size_t>(4, static_cast<std::size_t>(std::ceil(log_inv)));
  const double W_last = std::ceil(std::pow(eps, -static_cast<double>(dn) / gamma));
  const double W_first = std::ceil(std::pow(eps, -1.0 / gamma));
  const double W_mid = n > 1 ? d * copies * C * (4.0 * n + 11.0) : 0.0;
  c.W = static_cast<std::size_t>(std::max({W_first, W_mid, W_last}));
  c.H = static_cast<std::size_t>(std::max((3.0 * d + 1.0) * copies * C, d * copies * 3.0 * C));
  c.S = std::max<std::size_t>(dn, 3);
  c.d.push_back(d + n + 1 + static_cast<std::size_t>(copies));
  for (std::size_t k = 0; k < n; ++k) c.d.push_back(static_cast<std::size_t>((2.0 * dn + 5.0 * d) * copies * C));
  c.B_EB = 1.0;
  c.B_FF = std::pow(eps, -std::max((6.0 * dn + 2.0) / gamma, 1.0 / lambda));
  c.B_SA = std::max(1.0, log_inv);
  c.M_EB = 1.0;
  c.M_FF = std::ceil(std::pow(eps, -static_cast<double>(dn) / gamma));
  c.M_SA = 1.0;
  return rc;
}

double ffn_norm_bound(const FeedForwardBlock& f, std::size_t n, double normX) {
  const double L = static_cast<double>(f.depth());
  const double W = at_least_one(static_cast<double>(f.width()));
  const double B = at_least_one(f.weight_bound());
  return 2.0 * std::sqrt(static_cast<double>(f.d_in() * f.d_out() * n)) * L * std::pow(W, L - 1) * std::pow(B, L) * normX;
}

double attention_norm_bound(const SelfAttentionLayer& a, std::size_t n, double normY) {
  const double B = at_least_one(a.weight_bound());
  return 2.0 * static_cast<double>(a.dim()) * std::sqrt(static_cast<double>(n)) * static_cast<double>(a.head_count()) *
         static_cast<double>(a.head_size()) * B * B * normY;
}

double embedding_norm_bound(const EmbeddingLayer& e, double normZ) {
  const double B = at_least_one(e.weight_bound());
  return 2.0 * std::sqrt(static_cast<double>(e.W.rows() * e.W.cols() * e.B.cols())) * B * normZ;
}

double ffn_perturbation_bound(const FeedForwardBlock& f, std::size_t n, double normX, double varsigma) {
  const double L = static_cast<double>(f.depth());
  const double W = at_least_one(static_cast<double>(f.width()));
  const double B = at_least_one(f.weight_bound());
  const double din = static_cast<double>(f.d_in()), dout = static_cast<double>(f.d_out());
  return 4.0 * din * std::pow(dout, 1.5) * static_cast<double>(n) * L * L * std::pow(W, 2 * L - 1.5) *
         std::pow(B, 2 * L - 1) * normX * varsigma;
}

double attention_perturbation_bound(const SelfAttentionLayer& a, std::size_t n, double normY, double varsigma) {
  const double B = at_least_one(a.weight_bound());
  const double d = static_cast<double>(a.dim()), S = static_cast<double>(a.head_size());
  return 3.0 * d * d * std::sqrt(static_cast<double>(n)) * static_cast<double>(a.head_count()) * S * S * B * B * B *
         normY * normY * normY * varsigma;
}

double embedding_perturbation_bound(const EmbeddingLayer& e, double normZ, double varsigma) {
  return 2.0 * std::sqrt(static_cast<double>(e.W.rows() * e.W.cols() * e.B.cols())) * normZ * varsigma;
}

double ffn_lipschitz_bound(const FeedForwardBlock& f) {
  const double L = static_cast<double>(f.depth());
  const double W = at_least_one(static_cast<double>(f.width()));
  const double B = at_least_one(f.weight_bound());
  return std::sqrt(static_cast<double>(f.d_in() * f.d_out())) * std::pow(W, L - 1) * std::pow(B, L);
}

double attention_local_lipschitz_bound(const SelfAttentionLayer& a, std::size_t n, double E) {
  const double B = at_least_one(a.weight_bound());
  const double d = static_cast<double>(a.dim()), S = static_cast<double>(a.head_size());
  return 6.0 * d * d * std::sqrt(static_cast<double>(n)) * E * E * static_cast<double>(a.head_count()) * S * S *
         std::pow(B, 4);
}

namespace {

void perturb_matrix(Matrix& m, double varsigma, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(0.5);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] += coin(rng) ? varsigma : -varsigma;
}

void perturb_vector(std::vector<double>& v, double varsigma, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(0.5);
  for (double& x : v) x += coin(rng) ? varsigma : -varsigma;
}

Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

// Random matrix rescaled to Frobenius norm in [1, 1 + spread].
Matrix random_input(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  Matrix X = random_matrix(rows, cols, rng, -1.0, 1.0);
  std::uniform_real_distribution<double> u(1.0, 4.0);
  const double nrm = frobenius_norm(X);
  return X * (u(rng) / (nrm > 0 ? nrm : 1.0));
}

void record(NormCheckReport& r, double observed, double bound, const std::string& what) {
  ++r.trials;
  const double ratio = bound > 0 ? observed / bound : (observed > 0 ? INFINITY : 0.0);
  r.worst_ratio = std::max(r.worst_ratio, ratio);
  if (observed > bound) {
    if (r.violations == 0) {
      std::ostringstream os;
      os << what << ": observed " << observed << " > bound " << bound;
      r.first_violation = os.str();
    }
    ++r.violations;
  }
}

}  // namespace

FeedForwardBlock perturb(const FeedForwardBlock& f, double varsigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  FeedForwardBlock g = f;
  for (auto& l : g.mutable_layers()) {
    perturb_matrix(l.W, varsigma, rng);
    perturb_vector(l.b, varsigma, rng);
  }
  return g;
}

SelfAttentionLayer perturb(const SelfAttentionLayer& a, double varsigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  SelfAttentionLayer g = a;
  for (auto& h : g.mutable_heads()) {
    perturb_matrix(h.W_O, varsigma, rng);
    perturb_matrix(h.W_V, varsigma, rng);
    perturb_matrix(h.W_K, varsigma, rng);
    perturb_matrix(h.W_Q, varsigma, rng);
  }
  return g;
}

EmbeddingLayer perturb(const EmbeddingLayer& e, double varsigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  EmbeddingLayer g = e;
  perturb_matrix(g.W, varsigma, rng);
  perturb_matrix(g.B, varsigma, rng);
  return g;
}

Transformer perturb(const Transformer& T, double varsigma, std::uint64_t seed) {
  std::vector<FeedForwardBlock> ffns;
  std::vector<SelfAttentionLayer> sas;
  for (std::size_t k = 0; k < T.ffns().size(); ++k) ffns.push_back(perturb(T.ffns()[k], varsigma, derive_seed(seed, 2 * k + 1)));
  for (std::size_t k = 0; k < T.attentions().size(); ++k)
    sas.push_back(perturb(T.attentions()[k], varsigma, derive_seed(seed, 2 * k + 2)));
  return Transformer(perturb(T.embedding(), varsigma, derive_seed(seed, 0)), std::move(ffns), std::move(sas));
}

void NormCheckReport::merge(const NormCheckReport& o) {
  if (violations == 0 && o.violations > 0) first_violation = o.first_violation;
  trials += o.trials;
  violations += o.violations;
  worst_ratio = std::max(worst_ratio, o.worst_ratio);
}

NormCheckReport check_norm_bounds(const FeedForwardBlock& f, std::size_t n, std::size_t trials, std::uint64_t seed) {
  NormCheckReport r;
  std::mt19937_64 rng(seed);
  const double vs = 1e-6;
  for (std::size_t t = 0; t < trials; ++t) {
    const Matrix X = random_input(f.d_in(), n, rng);
    const Matrix Xt = X + random_matrix(f.d_in(), n, rng, -1e-3, 1e-3);
    const double nx = frobenius_norm(X);
    const Matrix Y = f.eval(X);
    record(r, frobenius_norm(Y), ffn_norm_bound(f, n, nx), "ffn norm growth");
    const double dx = frobenius_norm(Xt - X);
    if (dx > 0) record(r, frobenius_norm(f.eval(Xt) - Y) / dx, ffn_lipschitz_bound(f), "ffn Lipschitz");
    const FeedForwardBlock g = perturb(f, vs, derive_seed(seed, t));
    record(r, frobenius_norm(g.eval(X) - Y), ffn_perturbation_bound(f, n, nx, vs), "ffn parameter perturbation");
  }
  return r;
}

NormCheckReport check_norm_bounds(const SelfAttentionLayer& a, std::size_t n, std::size_t trials, std::uint64_t seed) {
  NormCheckReport r;
  std::mt19937_64 rng(seed);
  const double vs = 1e-6;
  for (std::size_t t = 0; t < trials; ++t) {
    const Matrix Y = random_input(a.dim(), n, rng);
    const Matrix Yt = Y + random_matrix(a.dim(), n, rng, -1e-2, 1e-2);
    const double ny = frobenius_norm(Y);
    const Matrix out = a.eval(Y);
    record(r, frobenius_norm(out), attention_norm_bound(a, n, ny), "attention norm growth");
    const double dy = frobenius_norm(Yt - Y);
    const double E = std::max({1.0, ny, frobenius_norm(Yt)});
    if (dy > 0)
      record(r, frobenius_norm(a.eval(Yt) - out) / dy, attention_local_lipschitz_bound(a, n, E), "attention local Lipschitz");
    // Perturbed weights must respect the same bound B, so use the perturbed layer's B when larger.
    const SelfAttentionLayer g = perturb(a, vs, derive_seed(seed, t));
    const SelfAttentionLayer& ref = g.weight_bound() > a.weight_bound() ? g : a;
    record(r, frobenius_norm(g.eval(Y) - out), attention_perturbation_bound(ref, n, ny, vs), "attention parameter perturbation");
  }
  return r;
}

NormCheckReport check_norm_bounds(const EmbeddingLayer& e, std::size_t trials, std::uint64_t seed) {
  NormCheckReport r;
  std::mt19937_64 rng(seed);
  const double vs = 1e-6;
  for (std::size_t t = 0; t < trials; ++t) {
    const Matrix Z = random_input(e.W.cols(), e.B.cols(), rng);
    const double nz = frobenius_norm(Z);
    const Matrix out = e.eval(Z);
    record(r, frobenius_norm(out), embedding_norm_bound(e, nz), "embedding norm growth");
    const EmbeddingLayer g = perturb(e, vs, derive_seed(seed, t));
    record(r, frobenius_norm(g.eval(Z) - out), embedding_perturbation_bound(e, nz, vs), "embedding parameter perturbation");
  }
  return r;
}

namespace {

struct SampleResult {
  double max_dev = 0;
  std::vector<double> power_sum;  // per output entry
  bool flaw = false;
};

SampleResult evaluate_sample(const Transformer& T, const HolderTarget& target, const Matrix& X, double t,
                             const std::optional<GridSpec>& grid) {
  SampleResult s;
  const Matrix Y = T.eval(X);
  const Matrix F = target.eval(X);
  s.power_sum.resize(Y.size());
  for (std::size_t i = 0; i < Y.size(); ++i) {
    const double e = std::abs(Y.data()[i] - F.data()[i]);
    s.max_dev = std::max(s.max_dev, e);
    if (std::isfinite(t)) s.power_sum[i] = std::pow(e, t);
  }
  if (grid) s.flaw = flaw_region_indicator(X, *grid).flaw;
  return s;
}

ErrorReport summarize(const std::vector<SampleResult>& results, double t, std::uint64_t seed) {
  ErrorReport r;
  r.t = t;
  r.seed = seed;
  r.samples = results.size();
  std::vector<double> sums;
  for (const auto& s : results) {
    r.max_abs_deviation = std::max(r.max_abs_deviation, s.max_dev);
    if (s.flaw) {
      r.flaw_max = std::max(r.flaw_max, s.max_dev);
      ++r.flaw_samples;
    } else {
      r.cell_max = std::max(r.cell_max, s.max_dev);
      ++r.cell_samples;
    }
    if (sums.empty()) sums.assign(s.power_sum.size(), 0.0);
    for (std::size_t i = 0; i < sums.size(); ++i) sums[i] += s.power_sum[i];
  }
  if (!std::isfinite(t)) {
    r.estimate = r.max_abs_deviation;
  } else {
    for (double v : sums) r.estimate = std::max(r.estimate, std::pow(v / static_cast<double>(results.size()), 1.0 / t));
  }
  return r;
}

}  // namespace

ErrorReport estimate_lt_error(const Transformer& T, const HolderTarget& target, double t, std::size_t samples,
                              std::uint64_t seed, std::optional<GridSpec> grid) {
  if (samples == 0) throw std::invalid_argument("estimate_lt_error: samples must be >= 1");
  std::vector<SampleResult> results(samples);
#pragma omp parallel for schedule(static)
  for (long i = 0; i < static_cast<long>(samples); ++i) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Matrix X(target.d, target.n);
    for (std::size_t e = 0; e < X.size(); ++e) X.data()[e] = u(rng);
    results[static_cast<std::size_t>(i)] = evaluate_sample(T, target, X, t, grid);
  }
  return summarize(results, t, seed);
}

ErrorReport stratified_sup_error(const Transformer& T, const HolderTarget& target, const GridSpec& grid,
                                 std::size_t per_cell, std::uint64_t seed, bool include_flaw) {
  const std::size_t dn = target.d * target.n;
  const double K = static_cast<double>(grid.K);
  std::size_t cells = 1;
  for (std::size_t e = 0; e < dn; ++e) cells *= grid.K;
  const std::size_t total = cells * per_cell * (include_flaw ? 2 : 1);
  std::vector<SampleResult> results(total);
#pragma omp parallel for schedule(static)
  for (long i = 0; i < static_cast<long>(total); ++i) {
    const std::size_t idx = static_cast<std::size_t>(i);
    const bool flaw_sample = idx >= cells * per_cell;
    const std::size_t cell = (idx % (cells * per_cell)) / per_cell;
    std::mt19937_64 rng(derive_seed(seed, idx));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Matrix X(target.d, target.n);
    std::size_t rest = cell;
    // Flaw samples put one random entry in its cell's band.
    const std::size_t band_entry = flaw_sample ? static_cast<std::size_t>(u(rng) * static_cast<double>(dn)) % dn : dn;
    for (std::size_t e = dn; e-- > 0;) {
      const double beta = static_cast<double>(rest % grid.K);
      rest /= grid.K;
      if (e == band_entry)
        X.data()[e] = (beta + 1.0 - grid.delta * u(rng)) / K;
      else
        X.data()[e] = (beta + (1.0 - grid.delta) * u(rng)) / K;
      X.data()[e] = std::min(X.data()[e], std::nextafter(1.0, 0.0));
    }
    results[idx] = evaluate_sample(T, target, X, INFINITY, grid);
  }
  ErrorReport r = summarize(results, INFINITY, seed);
  r.per_cell_max.assign(cells, 0.0);
  for (std::size_t i = 0; i < total; ++i) {
    const std::size_t cell = (i % (cells * per_cell)) / per_cell;
    r.per_cell_max[cell] = std::max(r.per_cell_max[cell], results[i].max_dev);
  }
  return r;
}

double empirical_lipschitz(const Transformer& T, double radius, std::size_t probes, std::uint64_t seed) {
  std::vector<double> ratios(probes, 0.0);
  const std::size_t rows = T.d_in(), cols = T.tokens();
#pragma omp parallel for schedule(static)
  for (long i = 0; i < static_cast<long>(probes); ++i) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    auto draw = [&]() {
      Matrix X(rows, cols);
      for (std::size_t e = 0; e < X.size(); ++e) X.data()[e] = u(rng);
      const double nrm = frobenius_norm(X);
      const double target = radius * std::abs(u(rng));
      return nrm > 0 ? X * (target / nrm) : X;
    };
    const Matrix X = draw(), Y = draw();
    const double dx = frobenius_norm(Y - X);
    if (dx > 0) ratios[static_cast<std::size_t>(i)] = frobenius_norm(T.eval(Y) - T.eval(X)) / dx;
  }
  return *std::max_element(ratios.begin(), ratios.end());
}

double empirical_lipschitz_cube(const Transformer& T, std::size_t probes, std::uint64_t seed) {
  std::vector<double> ratios(probes, 0.0);
  const std::size_t rows = T.d_in(), cols = T.tokens();
#pragma omp parallel for schedule(static)
  for (long i = 0; i < static_cast<long>(probes); ++i) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Matrix X(rows, cols), Y(rows, cols);
    for (std::size_t e = 0; e < X.size(); ++e) {
      X.data()[e] = u(rng);
      Y.data()[e] = u(rng);
    }
    const double dx = frobenius_norm(Y - X);
    if (dx > 0) ratios[static_cast<std::size_t>(i)] = frobenius_norm(T.eval(Y) - T.eval(X)) / dx;
  }
  return *std::max_element(ratios.begin(), ratios.end());
}

}  // namespace tfa
