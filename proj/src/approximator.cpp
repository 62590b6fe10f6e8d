#include "tfa/approximator.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace tfa {

namespace {

constexpr double kPi = std::numbers::pi;

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

double multi_factorial(const MultiIndex& a) {
  double f = 1.0;
  for (int k : a) f *= factorial(k);
  return f;
}

int order(const MultiIndex& a) { return std::accumulate(a.begin(), a.end(), 0); }

// k-th derivative of exp(-a (x - c)^2).
double gauss_derivative(int k, double x, double a, double c) {
  const double t = std::sqrt(a) * (x - c);
  double h0 = 1.0, h1 = 2.0 * t;
  double hk = k == 0 ? h0 : h1;
  for (int m = 1; m < k; ++m) {
    hk = 2.0 * t * h1 - 2.0 * m * h0;
    h0 = h1;
    h1 = hk;
  }
  return std::pow(-std::sqrt(a), k) * hk * std::exp(-t * t);
}

std::vector<double> parse_coefficients(const std::string& body) {
  std::vector<double> c;
  std::stringstream ss(body);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::size_t used = 0;
    c.push_back(std::stod(tok, &used));
    if (used != tok.size()) throw std::invalid_argument("bad coefficient: " + tok);
  }
  if (c.empty()) throw std::invalid_argument("poly target needs coefficients");
  return c;
}

// Derivative nonzero only when alpha is concentrated on entry (p, q).
bool entry_order(const MultiIndex& alpha, std::size_t e, int& k) {
  for (std::size_t i = 0; i < alpha.size(); ++i)
    if (i != e && alpha[i] != 0) return false;
  k = alpha[e];
  return true;
}

Matrix apply_entrywise(const Matrix& X, const std::function<double(double)>& g) {
  Matrix Y = X;
  for (std::size_t i = 0; i < Y.size(); ++i) Y.data()[i] = g(X.data()[i]);
  return Y;
}

}  // namespace

HolderTarget make_target(const std::string& spec, std::size_t d, std::size_t n, int s, double lambda) {
  if (d == 0 || n == 0) throw std::invalid_argument("target: d and n must be positive");
  if (s < 0 || !(lambda > 0.0 && lambda <= 1.0)) throw std::invalid_argument("target: need s >= 0, lambda in (0,1]");
  HolderTarget t;
  t.name = spec;
  t.d = d;
  t.n = n;
  t.s = s;
  t.lambda = lambda;

  if (spec == "sin2pi") {
    const double w = 2.0 * kPi;
    t.eval = [w](const Matrix& X) { return apply_entrywise(X, [w](double x) { return std::sin(w * x); }); };
    t.derivative = [w, n](const MultiIndex& a, const Matrix& X, std::size_t p, std::size_t q) {
      int k = 0;
      if (!entry_order(a, p * n + q, k)) return 0.0;
      return std::pow(w, k) * std::sin(w * X(p, q) + k * kPi / 2.0);
    };
    t.modulus = [](double delta) { return 2.0 * std::sin(kPi * std::min(std::abs(delta), 0.5)); };
    t.holder_norm_bound = std::pow(w, s + 1);
  } else if (spec.rfind("poly:", 0) == 0) {
    const auto c = parse_coefficients(spec.substr(5));
    auto deriv = [c](int k, double x) {
      double v = 0.0;
      for (std::size_t m = static_cast<std::size_t>(k); m < c.size(); ++m)
        v += c[m] * factorial(static_cast<int>(m)) / factorial(static_cast<int>(m) - k) * std::pow(x, m - k);
      return v;
    };
    t.eval = [deriv](const Matrix& X) { return apply_entrywise(X, [&](double x) { return deriv(0, x); }); };
    t.derivative = [deriv, n](const MultiIndex& a, const Matrix& X, std::size_t p, std::size_t q) {
      int k = 0;
      if (!entry_order(a, p * n + q, k)) return 0.0;
      return deriv(k, X(p, q));
    };
    double lip = 0.0, bound = 0.0;
    for (std::size_t m = 1; m < c.size(); ++m) lip += std::abs(c[m]) * static_cast<double>(m);
    for (int k = 0; k <= s + 1; ++k) {
      double b = 0.0;
      for (std::size_t m = static_cast<std::size_t>(k); m < c.size(); ++m)
        b += std::abs(c[m]) * factorial(static_cast<int>(m)) / factorial(static_cast<int>(m) - k);
      bound = std::max(bound, b);
    }
    t.modulus = [lip](double delta) { return lip * std::abs(delta); };
    t.holder_norm_bound = bound;
  } else if (spec.rfind("const:", 0) == 0) {
    std::size_t used = 0;
    const std::string body = spec.substr(6);
    const double c = std::stod(body, &used);
    if (used != body.size()) throw std::invalid_argument("bad constant: " + body);
    t.eval = [c](const Matrix& X) { return Matrix(X.rows(), X.cols(), c); };
    t.derivative = [c](const MultiIndex& a, const Matrix&, std::size_t, std::size_t) {
      return order(a) == 0 ? c : 0.0;
    };
    t.modulus = [](double) { return 0.0; };
    t.holder_norm_bound = std::abs(c);
  } else if (spec == "gauss-bump") {
    const double a = 4.0, c = 0.5;
    t.eval = [a, c](const Matrix& X) {
      double s2 = 0.0;
      for (double x : X.values()) s2 += (x - c) * (x - c);
      return Matrix(X.rows(), X.cols(), std::exp(-a * s2));
    };
    t.derivative = [a, c](const MultiIndex& alpha, const Matrix& X, std::size_t, std::size_t) {
      double v = 1.0;
      for (std::size_t e = 0; e < alpha.size(); ++e) v *= gauss_derivative(alpha[e], X.data()[e], a, c);
      return v;
    };
    double m = 1.0;
    for (int k = 0; k <= s + 1; ++k)
      for (int i = 0; i <= 2000; ++i) m = std::max(m, std::abs(gauss_derivative(k, -0.5 + 2.0 * i / 2000.0, a, c)));
    const double lip = std::sqrt(2.0 * a) * std::exp(-0.5);
    t.modulus = [lip](double delta) { return lip * std::abs(delta); };
    t.holder_norm_bound = std::pow(m, s + 1);
  } else {
    throw std::invalid_argument("unknown target: " + spec);
  }
  return t;
}

std::vector<MultiIndex> enumerate_multi_indices(std::size_t d, std::size_t n, int s) {
  if (s < 0) throw std::invalid_argument("enumerate_multi_indices: s must be >= 0");
  const std::size_t m = d * n;
  std::vector<MultiIndex> out;
  MultiIndex cur(m, 0);
  std::function<void(std::size_t, int)> rec = [&](std::size_t pos, int left) {
    if (pos == m) {
      out.push_back(cur);
      return;
    }
    for (int k = 0; k <= left; ++k) {
      cur[pos] = k;
      rec(pos + 1, left - k);
    }
    cur[pos] = 0;
  };
  rec(0, s);
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

// Tensor product of 1-D stencils; one-sided where a central stencil leaves [0,1].
double raw_difference(const std::function<Matrix(const Matrix&)>& f, const MultiIndex& alpha, const Matrix& X,
                      std::size_t p, std::size_t q, double h, bool& one_sided) {
  struct Stencil {
    std::vector<double> offsets, weights;
  };
  std::vector<std::pair<std::size_t, Stencil>> stencils;
  for (std::size_t e = 0; e < alpha.size(); ++e) {
    const int k = alpha[e];
    if (k == 0) continue;
    const double x = X.data()[e];
    Stencil st;
    double start = -0.5 * k * h;
    if (x + start < 0.0) start = 0.0, one_sided = true;
    else if (x - start > 1.0) start = -k * h, one_sided = true;
    for (int m = 0; m <= k; ++m) {
      st.offsets.push_back(start + m * h);
      st.weights.push_back(((k - m) % 2 ? -1.0 : 1.0) * factorial(k) / (factorial(m) * factorial(k - m)) /
                           std::pow(h, k));
    }
    stencils.emplace_back(e, st);
  }
  double total = 0.0;
  Matrix Y = X;
  std::function<void(std::size_t, double)> rec = [&](std::size_t i, double w) {
    if (i == stencils.size()) {
      total += w * f(Y)(p, q);
      return;
    }
    const auto& [e, st] = stencils[i];
    const double base = X.data()[e];
    for (std::size_t m = 0; m < st.offsets.size(); ++m) {
      Y.data()[e] = base + st.offsets[m];
      rec(i + 1, w * st.weights[m]);
    }
    Y.data()[e] = base;
  };
  rec(0, 1.0);
  return total;
}

}  // namespace

double finite_difference_derivative(const std::function<Matrix(const Matrix&)>& f, const MultiIndex& alpha,
                                    const Matrix& X, std::size_t p, std::size_t q, double h) {
  // Richardson step: one-sided stencils are first order, central ones second order.
  bool one_sided = false;
  const double coarse = raw_difference(f, alpha, X, p, q, h, one_sided);
  const double fine = raw_difference(f, alpha, X, p, q, h / 2, one_sided);
  return one_sided ? 2 * fine - coarse : (4 * fine - coarse) / 3;
}

CoefficientTable taylor_coefficients(const HolderTarget& target, const Matrix& grid_point,
                                     const std::vector<MultiIndex>& indices, bool allow_finite_differences) {
  for (double x : grid_point.values())
    if (x < 0.0 || x > 1.0) throw std::invalid_argument("taylor_coefficients: grid point outside the unit cube");
  if (!target.derivative && !allow_finite_differences)
    throw std::invalid_argument("taylor_coefficients: no derivative oracle and finite differences disabled");
  CoefficientTable t{indices, {}};
  for (const auto& a : indices) {
    std::vector<std::vector<double>> c(target.d, std::vector<double>(target.n));
    const double af = multi_factorial(a);
    for (std::size_t p = 0; p < target.d; ++p)
      for (std::size_t q = 0; q < target.n; ++q) {
        const double D = target.derivative ? target.derivative(a, grid_point, p, q)
                                           : finite_difference_derivative(target.eval, a, grid_point, p, q);
        c[p][q] = D / af;
      }
    t.coeff.push_back(std::move(c));
  }
  return t;
}

double taylor_polynomial(const CoefficientTable& table, const Matrix& X, const Matrix& X0, std::size_t p,
                         std::size_t q) {
  double v = 0.0;
  for (std::size_t i = 0; i < table.indices.size(); ++i) {
    double mono = 1.0;
    const auto& a = table.indices[i];
    for (std::size_t e = 0; e < a.size(); ++e) mono *= std::pow(X.data()[e] - X0.data()[e], a[e]);
    v += table.coeff[i][p][q] * mono;
  }
  return v;
}

RegionInfo flaw_region_indicator(const Matrix& X, const GridSpec& grid) {
  RegionInfo info;
  const double K = static_cast<double>(grid.K);
  for (double x : X.values()) {
    if (!(x >= 0.0 && x < 1.0)) {
      info.flaw = true;
      info.beta.push_back(0);
      continue;
    }
    const std::size_t k = std::min(grid.K - 1, static_cast<std::size_t>(std::floor(x * K)));
    if (x >= (static_cast<double>(k) + 1.0 - grid.delta) / K) info.flaw = true;
    info.beta.push_back(k);
  }
  for (std::size_t b : info.beta) info.index = info.index * grid.K + b;
  return info;
}

Matrix grid_point_of(const std::vector<std::size_t>& beta, std::size_t d, std::size_t n, std::size_t K) {
  Matrix G(d, n);
  for (std::size_t e = 0; e < d * n; ++e) G.data()[e] = static_cast<double>(beta[e]) / static_cast<double>(K);
  return G;
}

double taylor_constant(const HolderTarget& target) {
  const double dn = static_cast<double>(target.d * target.n);
  return target.holder_norm_bound * std::pow(dn, target.s / 2.0 + 1.0);
}

std::size_t grid_size_for(const HolderTarget& target, double eps) {
  const double K = std::ceil(std::pow(3.0 * taylor_constant(target) / eps, 1.0 / target.gamma()) - 1e-12);
  return std::max<std::size_t>(1, static_cast<std::size_t>(K));
}

double default_delta(const HolderTarget& target, double eps, std::size_t K) {
  return std::min(std::pow(eps, 1.0 / target.lambda), 1.0 / (3.0 * static_cast<double>(K)));
}

namespace {

std::size_t ipow(std::size_t b, std::size_t e) {
  std::size_t r = 1;
  for (std::size_t i = 0; i < e; ++i) r *= b;
  return r;
}

void warn_headroom(const Transformer& T, const std::string& what) {
  const SizeReport r = size_report(T);
  const double B = std::max({r.B_EB, r.B_FF, r.B_SA});
  if (B > 1e12) std::cerr << "warning: " << what << " has weight magnitude " << B << " (> 1e12)\n";
}

// (X; I-1; Bt) -> (X - D(X); I-1; D(X); Bt), D applied entrywise.
FeedForwardBlock discretize_and_split(std::size_t d, std::size_t n, const FeedForwardBlock& disc) {
  const std::size_t in = d + n + 1;
  Matrix dup(2 * d + n + 1, in);
  for (std::size_t i = 0; i < d; ++i) {
    dup(i, i) = 1.0;
    dup(d + i, i) = 1.0;
  }
  for (std::size_t i = 0; i < n + 1; ++i) dup(2 * d + i, d + i) = 1.0;
  std::vector<FeedForwardBlock> parts{build_identity_ffn(d)};
  for (std::size_t i = 0; i < d; ++i) parts.push_back(disc);
  parts.push_back(build_identity_ffn(n));
  parts.push_back(build_identity_ffn(1));
  FeedForwardBlock core = parallel_ffn(parts);
  core = pad_depth(core, std::max<std::size_t>(3, core.depth()));
  Matrix post(2 * d + n + 1, 2 * d + n + 1);
  for (std::size_t i = 0; i < d; ++i) {
    post(i, i) = 1.0;
    post(i, d + i) = -1.0;
    post(d + n + i, d + i) = 1.0;
  }
  for (std::size_t i = 0; i < n; ++i) post(d + i, 2 * d + i) = 1.0;
  post(2 * d + n, 2 * d + n) = 1.0;
  return postcompose_affine(precompose_affine(core, dup, std::vector<double>(2 * d + n + 1, 0.0)), post,
                            std::vector<double>(2 * d + n + 1, 0.0));
}

}  // namespace

GridApproximator build_grid_approximator(const HolderTarget& target, double eps, const GridSpec& grid,
                                         std::uint64_t seed, const GridOptions& options) {
  const std::size_t d = target.d, n = target.n, dn = d * n, K = grid.K;
  if (K == 0) throw std::invalid_argument("grid approximator: K must be positive");
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("grid approximator: eps must lie in (0,1)");
  if (!(grid.delta > 0.0 && grid.delta <= 1.0 / static_cast<double>(K)))
    throw std::invalid_argument("grid approximator: delta must lie in (0, 1/K]");
  const double Kd = static_cast<double>(K);
  if (std::pow(Kd, static_cast<double>(dn)) > static_cast<double>(options.budget.max_grid_points))
    throw BudgetExceeded("grid approximator: K^{dn} exceeds the grid-point budget");
  const std::size_t N = ipow(K, dn);

  GridApproximator out;
  out.grid = grid;
  out.eps = eps;
  out.indices = enumerate_multi_indices(d, n, target.s);
  const std::size_t A = out.indices.size();
  const FeedForwardBlock disc = build_discretization_ffn(K, grid.delta, options.absorb_top_cell);

  // Grid points exactly as the discretization block produces them.
  out.grid_points.resize(N);
  out.tables.resize(N);
#pragma omp parallel for schedule(dynamic)
  for (long j = 0; j < static_cast<long>(N); ++j) {
    Matrix G(d, n);
    std::size_t rest = static_cast<std::size_t>(j);
    for (std::size_t e = dn; e-- > 0;) {
      const double beta = static_cast<double>(rest % K);
      rest /= K;
      G.data()[e] = disc.eval_scalar((beta + 0.5 * (1.0 - grid.delta)) / Kd);
    }
    out.grid_points[static_cast<std::size_t>(j)] = G;
    out.tables[static_cast<std::size_t>(j)] = taylor_coefficients(target, G, out.indices);
  }
  for (const auto& t : out.tables)
    for (const auto& c : t.coeff)
      for (const auto& row : c)
        for (double v : row) out.coefficient_bound = std::max(out.coefficient_bound, std::abs(v));

  const double Cf = std::max(out.coefficient_bound, 1.0);
  out.eps_taylor = eps / 3.0;
  out.eps_monomial = eps / (3.0 * static_cast<double>(A) * Cf);
  out.eps_multiplication = eps / (3.0 * static_cast<double>(A));
  out.multiplication_B = std::max(out.coefficient_bound, 2.0);

  // Memorizers for the coefficient rows, one per (multi-index, output row).
  const double r = std::sqrt(static_cast<double>(d));
  TokenDataset tokens{d, n, out.grid_points, r, (1.0 - 1e-9) / Kd};
  const Matrix E = positional_encoding(d, n, r);
  const ContextualMap cm = build_contextual_mapping(encode_positions(tokens, E), seed);
  out.projections_verified = cm.guarantees_verified;
  std::vector<Transformer> memorizers;
  for (std::size_t i = 0; i < A; ++i)
    for (std::size_t p = 0; p < d; ++p) {
      LabeledDataset data{tokens, {}, std::max(out.coefficient_bound, 1e-300)};
      for (std::size_t j = 0; j < N; ++j) data.labels.push_back(out.tables[j].coeff[i][p]);
      memorizers.push_back(memorize_with_context(data, cm, E).T);
    }
  Transformer mmr = parallel_shared_input(memorizers);
  // (X^(j); Bt) -> X^(j) + 1 Bt = X^(j) + E for every memorizer.
  Matrix W1(d, d + 1);
  for (std::size_t q = 0; q < d; ++q) {
    W1(q, q) = 1.0;
    W1(q, d) = 1.0;
  }
  mmr = Transformer(EmbeddingLayer{matmul(mmr.embedding().W, W1), mmr.embedding().B}, mmr.ffns(), mmr.attentions());

  std::vector<Transformer> lifts;
  for (const auto& a : out.indices)
    lifts.push_back(pad_length(lift_ffn_to_transformer(build_monomial_ffn(a, out.eps_monomial), d, n), n));
  const Transformer mnm = parallel_shared_input(lifts);
  const Transformer prl = parallel_transformer(mnm, mmr);

  // Embedding rows (X + shift; I - 1; 3, 6, ..., 3n).
  Matrix W_eb(d + n + 1, d);
  for (std::size_t q = 0; q < d; ++q) W_eb(q, q) = 1.0;
  Matrix B_eb(d + n + 1, n);
  if (!options.input_shift.empty()) B_eb.set_block(0, 0, options.input_shift);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t l = 0; l < n; ++l) B_eb(d + k, l) = (k == l) ? 0.0 : -1.0;
    B_eb(d + n, k) = 3.0 * static_cast<double>(k + 1);
  }
  const Transformer front(EmbeddingLayer{W_eb, B_eb}, {discretize_and_split(d, n, disc)}, {});
  Transformer T = compose_transformers(front, prl);

  // Multiply coefficient rows with monomial rows and sum over multi-indices.
  const std::size_t terms = A * d;
  Matrix sel(2 * terms, A + terms);
  Matrix sum(d, terms);
  for (std::size_t i = 0; i < A; ++i)
    for (std::size_t p = 0; p < d; ++p) {
      const std::size_t t = i * d + p;
      sel(2 * t, A + t) = 1.0;
      sel(2 * t + 1, i) = 1.0;
      sum(p, t) = 1.0;
    }
  const FeedForwardBlock mult = build_multiplication_ffn(out.multiplication_B, out.eps_multiplication);
  FeedForwardBlock mtp = parallel_ffn(std::vector<FeedForwardBlock>(terms, mult));
  mtp = postcompose_affine(precompose_affine(mtp, sel, std::vector<double>(2 * terms, 0.0)), sum,
                           std::vector<double>(d, 0.0));
  out.T = append_ffn(T, mtp);

  if (param_count(out.T) > options.budget.max_params)
    throw BudgetExceeded("grid approximator: parameter count exceeds the budget");
  warn_headroom(out.T, "grid approximator");
  return out;
}

UniformApproximator build_uniform_approximator(const HolderTarget& target, double eps, std::uint64_t seed,
                                               std::optional<GridSpec> grid, const BuildBudget& budget) {
  const std::size_t d = target.d, n = target.n, dn = d * n;
  UniformApproximator out;
  out.eps = eps;
  if (grid) {
    out.grid = *grid;
  } else {
    out.grid.K = grid_size_for(target, eps);
    out.grid.delta = default_delta(target, eps, out.grid.K);
  }
  if (out.grid.delta > 1.0 / (3.0 * static_cast<double>(out.grid.K)) * (1 + 1e-12))
    throw std::invalid_argument("uniform approximator: delta must be <= 1/(3K)");
  if (std::pow(3.0, static_cast<double>(dn)) > static_cast<double>(budget.max_grid_points))
    throw BudgetExceeded("uniform approximator: 3^{dn} copies exceed the budget");
  out.copies = ipow(3, dn);

  GridOptions opt;
  opt.budget = budget;
  opt.absorb_top_cell = true;
  const GridApproximator base = build_grid_approximator(target, eps, out.grid, seed, opt);

  // Copy c shifts entry e by delta * (digit_e(c) - 1), digits base 3, entry 0 most significant.
  std::vector<Transformer> copies;
  for (std::size_t c = 0; c < out.copies; ++c) {
    GridApproximator g = base;
    Matrix shift(d, n);
    std::size_t rest = c;
    for (std::size_t e = dn; e-- > 0;) {
      shift.data()[e] = out.grid.delta * (static_cast<double>(rest % 3) - 1.0);
      rest /= 3;
    }
    EmbeddingLayer emb = base.T.embedding();
    for (std::size_t q = 0; q < d; ++q)
      for (std::size_t k = 0; k < n; ++k) emb.B(q, k) += shift(q, k);
    g.T = Transformer(emb, base.T.ffns(), base.T.attentions());
    copies.push_back(g.T);
    out.shifted.push_back(std::move(g));
  }
  Transformer T = parallel_shared_input(copies);

  // Cascade of medians, one entry coordinate at a time (most significant digit first).
  const FeedForwardBlock mid = build_middle_ffn();
  std::size_t groups = out.copies;
  for (std::size_t stage = 0; stage < dn; ++stage) {
    const std::size_t next = groups / 3;
    Matrix sel(3 * next * d, groups * d);
    for (std::size_t g = 0; g < next; ++g)
      for (std::size_t p = 0; p < d; ++p)
        for (std::size_t digit = 0; digit < 3; ++digit) sel(3 * (g * d + p) + digit, (digit * next + g) * d + p) = 1.0;
    FeedForwardBlock med = parallel_ffn(std::vector<FeedForwardBlock>(next * d, mid));
    T = append_ffn(T, precompose_affine(med, sel, std::vector<double>(3 * next * d, 0.0)));
    groups = next;
  }
  out.T = std::move(T);
  if (param_count(out.T) > budget.max_params)
    throw BudgetExceeded("uniform approximator: parameter count exceeds the budget");
  warn_headroom(out.T, "uniform approximator");
  return out;
}

}  // namespace tfa
