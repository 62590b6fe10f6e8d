// Runs the ten acceptance checks and prints one PASS/FAIL line per check.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "tfa/analysis.hpp"
#include "tfa/approximator.hpp"
#include "tfa/contextual.hpp"
#include "tfa/serialize.hpp"

using tfa::Matrix;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double fitted_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= x.size();
  my /= y.size();
  double num = 0, den = 0;
  for (std::size_t i = 0; i < x.size(); ++i) num += (x[i] - mx) * (y[i] - my), den += (x[i] - mx) * (x[i] - mx);
  return num / den;
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

const tfa::LabeledDataset& shared_data() {
  static const tfa::LabeledDataset data = tfa::random_labeled_dataset(2, 2, 8, 1.0, 0.05, 1.0, 2024);
  return data;
}

std::vector<tfa::Transformer> built_models;

Outcome memorization() {
  const auto M = tfa::build_memorizing_transformer(shared_data(), true, 1);
  built_models.push_back(M.T);
  const double err = tfa::memorization_error(M.T, shared_data(), M.E);
  return {err <= 1e-6, "max recall error " + fmt("%.3g", err)};
}

Outcome separation() {
  const auto C = tfa::build_contextual_mapping(shared_data().tokens, 1);
  built_models.push_back(C.T);
  const auto rep = tfa::check_context_separation(C.T, shared_data().tokens, C.R);
  return {rep.passed() && rep.min_gap >= 2 - 1e-9,
          "min gap " + fmt("%.4g", rep.min_gap) + ", max |id| " + fmt("%.4g", rep.max_abs_id) + " <= R " +
              fmt("%.4g", C.R) + ", pairs " + std::to_string(rep.pairs_checked)};
}

const tfa::HolderTarget& sine() {
  static const tfa::HolderTarget f = tfa::make_target("sin2pi", 1, 1, 1);
  return f;
}

double eps_for(std::size_t K) { return std::min(0.9, 3 * tfa::taylor_constant(sine()) / double(K * K)); }

Outcome approximation_rate() {
  std::vector<double> lk, le;
  std::string detail;
  bool monotone = true;
  double prev = INFINITY;
  for (std::size_t K : {4u, 8u, 16u}) {
    const tfa::GridSpec g{K, 1.0 / (3.0 * K)};
    const auto A = tfa::build_grid_approximator(sine(), eps_for(K), g, 1);
    built_models.push_back(A.T);
    const double e = tfa::stratified_sup_error(A.T, sine(), g, 200, 5, false).cell_max;
    monotone = monotone && e < prev;
    prev = e;
    lk.push_back(std::log2(double(K)));
    le.push_back(std::log2(e));
    detail += "K=" + std::to_string(K) + ":" + fmt("%.4g", e) + " ";
  }
  const double slope = fitted_slope(lk, le);
  return {monotone && slope <= -1.0, detail + "slope " + fmt("%.3f", slope)};
}

Outcome uniform_upgrade() {
  const std::size_t K = 8;
  const tfa::GridSpec g{K, 1.0 / (3.0 * K)};
  const double eps = eps_for(K);
  const auto U = tfa::build_uniform_approximator(sine(), eps, 1, g);
  const auto G = tfa::build_grid_approximator(sine(), eps, g, 1);
  built_models.push_back(U.T);
  const double cell = tfa::stratified_sup_error(G.T, sine(), g, 200, 5, false).cell_max;
  double worst = 0;
  for (int i = 0; i < 10000; ++i) {
    const Matrix X{{i / 9999.0}};
    worst = std::max(worst, std::abs(U.T.eval(X)(0, 0) - sine().eval(X)(0, 0)));
  }
  const double bound = 1.1 * (cell + sine().modulus(g.delta));
  return {worst <= bound, "dense sup " + fmt("%.4g", worst) + " <= " + fmt("%.4g", bound)};
}

Outcome multiplication() {
  const auto f = tfa::build_multiplication_ffn(1.0, 1e-3);
  double worst = 0;
  for (int i = 0; i < 200; ++i)
    for (int j = 0; j < 200; ++j) {
      const double x = -1 + 2.0 * i / 199, y = -1 + 2.0 * j / 199;
      worst = std::max(worst, std::abs(f.eval_vector({x, y})[0] - x * y));
    }
  return {worst <= 1e-3, "max error " + fmt("%.3g", worst)};
}

Outcome softmax_properties() {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> nd(0, 3);
  double sum_err = 0, ratio = 0;
  for (int t = 0; t < 10000; ++t) {
    Matrix a(7, 1), b(7, 1);
    for (std::size_t i = 0; i < 7; ++i) a(i, 0) = nd(rng), b(i, 0) = a(i, 0) + 0.1 * nd(rng);
    const Matrix sa = tfa::softmax_columns(a), sb = tfa::softmax_columns(b);
    double s = 0;
    for (std::size_t i = 0; i < 7; ++i) s += sa(i, 0);
    sum_err = std::max(sum_err, std::abs(s - 1));
    ratio = std::max(ratio, tfa::frobenius_norm(sa - sb) / tfa::frobenius_norm(a - b));
  }
  return {sum_err <= 1e-12 && ratio <= 2 + 1e-9,
          "column sum error " + fmt("%.2g", sum_err) + ", Lipschitz ratio " + fmt("%.4f", ratio)};
}

Outcome parallelization() {
  std::mt19937_64 rng(7);
  double worst = 0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 2 + t % 3;
    const auto fa = tfa::pad_depth(testing_util::random_ffn({2, 3, 2}, rng), 3);
    const auto fb = testing_util::random_ffn({3, 5, 4, 1}, rng);
    const Matrix Xa = testing_util::random_matrix(2, n, rng), Xb = testing_util::random_matrix(3, n, rng);
    worst = std::max(worst, tfa::max_abs_diff(tfa::parallel_ffn(fa, fb).eval(tfa::vstack(Xa, Xb)),
                                              tfa::vstack(fa.eval(Xa), fb.eval(Xb))));
    const auto aa = testing_util::random_attention(2, 2, 2, rng), ab = testing_util::random_attention(3, 1, 3, rng);
    worst = std::max(worst, tfa::max_abs_diff(tfa::parallel_attention(aa, ab).eval(tfa::vstack(Xa, Xb)),
                                              tfa::vstack(aa.eval(Xa), ab.eval(Xb))));
    const auto Ta = testing_util::random_transformer(2, 3, 1, n, 2, rng);
    const auto Tb = testing_util::random_transformer(3, 2, 2, n, 2, rng);
    worst = std::max(worst, tfa::max_abs_diff(tfa::parallel_transformer(Ta, Tb).eval(tfa::vstack(Xa, Xb)),
                                              tfa::vstack(Ta.eval(Xa), Tb.eval(Xb))));
  }
  return {worst <= 1e-13, "max deviation " + fmt("%.3g", worst)};
}

Outcome norm_bounds() {
  std::mt19937_64 rng(8);
  tfa::NormCheckReport total;
  std::size_t lip_violations = 0;
  double worst_log_ratio = -INFINITY;
  for (int t = 0; t < 50; ++t) {
    const std::size_t d_in = 1 + t % 3, d0 = 2 + t % 2, n = 2 + t % 3, K = 1 + t % 2;
    const auto T = testing_util::random_transformer(d_in, d0, 1, n, K, rng);
    const std::uint64_t seed = tfa::derive_seed(800, t);
    total.merge(tfa::check_norm_bounds(T.embedding(), 100, seed));
    for (const auto& f : T.ffns()) total.merge(tfa::check_norm_bounds(f, n, 100, seed + 1));
    for (const auto& a : T.attentions()) total.merge(tfa::check_norm_bounds(a, n, 100, seed + 2));
    const double lip = static_cast<double>(tfa::theoretical_lipschitz_bound(tfa::structure_of(T)).log_value);
    const double emp = tfa::empirical_lipschitz_cube(T, 100, seed + 3);
    worst_log_ratio = std::max(worst_log_ratio, std::log(emp) - lip);
    if (std::log(emp) > lip) ++lip_violations;
  }
  return {total.passed() && lip_violations == 0,
          std::to_string(total.violations) + " formula violations in " + std::to_string(total.trials) +
              " trials (worst ratio " + fmt("%.3f", total.worst_ratio) + "), " + std::to_string(lip_violations) +
              " Lipschitz violations (worst log ratio " + fmt("%.1f", worst_log_ratio) + ")"};
}

double rate_slope(double sigma) {
  std::vector<double> lm, lb;
  for (double m : {1e3, 1e4, 1e5, 1e6}) {
    const auto rc = tfa::rate_optimal_config(m, 1, 1, 1, 1.0);
    lm.push_back(std::log(m));
    lb.push_back(std::log(tfa::generalization_bound(rc.cfg, m, sigma, 1.0, 2.0, 1.0, rc.eps)));
  }
  return fitted_slope(lm, lb);
}

Outcome bound_calculators() {
  const auto rc = tfa::rate_optimal_config(1e4, 1, 1, 1, 1.0);
  double worst = 0;
  for (double vs : {1e-6, 1e-3, 1e-1}) {
    const long double a = tfa::covering_number_log_bound_unclamped(rc.cfg, vs);
    const long double b = tfa::covering_number_log_bound_unclamped(rc.cfg, vs / 2);
    const double expect = (rc.cfg.M_EB + rc.cfg.M_FF + rc.cfg.M_SA) * std::log(2.0);
    worst = std::max(worst, std::abs(static_cast<double>(b - a) - expect));
  }
  const double target = -2.0 * 2 / (2.0 * 2 + 1);
  const double slope = rate_slope(0.1);
  return {worst <= 1e-9 && std::abs(slope - target) <= 0.15,
          "halving deviation " + fmt("%.2g", worst) + ", slope " + fmt("%.3f", slope) + " (target " +
              fmt("%.2f", target) + "; sigma=1 gives " + fmt("%.3f", rate_slope(1.0)) + ")"};
}

Outcome serialization() {
  std::size_t mismatches = 0;
  for (const auto& T : built_models) {
    const std::string a = tfa::dump_model(T);
    if (tfa::dump_model(tfa::parse_model(a)) != a) ++mismatches;
  }
  return {mismatches == 0 && !built_models.empty(),
          std::to_string(built_models.size()) + " models, " + std::to_string(mismatches) + " mismatches"};
}

}  // namespace

int main() {
  struct Check {
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Check> checks{{"memorization", 10, memorization},
                                  {"contextual-separation", 10, separation},
                                  {"approximation-rate", 120, approximation_rate},
                                  {"uniform-upgrade", 120, uniform_upgrade},
                                  {"multiplication", 5, multiplication},
                                  {"softmax", 5, softmax_properties},
                                  {"parallelization", 30, parallelization},
                                  {"norm-lipschitz-bounds", 60, norm_bounds},
                                  {"bound-calculators", 10, bound_calculators},
                                  {"serialization", 5, serialization}};
  int failed = 0, idx = 0;
  for (const auto& c : checks) {
    ++idx;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool ok = o.pass && s <= c.budget_s;
    if (!ok) ++failed;
    std::printf("%s %2d %-22s %.2fs/%.0fs  %s\n", ok ? "PASS" : "FAIL", idx, c.name, s, c.budget_s, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
