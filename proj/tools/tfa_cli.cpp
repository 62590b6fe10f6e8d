#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "tfa/analysis.hpp"
#include "tfa/approximator.hpp"
#include "tfa/contextual.hpp"
#include "tfa/serialize.hpp"
#include "tfa/version.hpp"

using nlohmann::json;

namespace {

constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Ordered key=value pairs; rendered as "k=v;k=v" in the CSV parameter column.
using Params = std::vector<std::pair<std::string, std::string>>;

std::string render(const Params& p) {
  std::string out;
  for (const auto& [k, v] : p) {
    if (!out.empty()) out += ';';
    out += k + "=" + v;
  }
  return out;
}

json params_json(const Params& p) {
  json j = json::object();
  for (const auto& [k, v] : p) j[k] = v;
  return j;
}

struct Report {
  struct Row {
    std::string quantity;
    std::string value;
    std::string params;
  };
  std::vector<Row> rows;
  std::uint64_t seed = 0;

  void add(const std::string& q, double v, const std::string& params = "") { rows.push_back({q, fmt_double(v), params}); }

  std::string csv() const {
    std::ostringstream os;
    os << "quantity,value_or_log10,parameters,seed\n";
    for (const auto& r : rows) os << r.quantity << ',' << r.value << ',' << r.params << ',' << seed << '\n';
    return os.str();
  }
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << text;
  if (!f) throw std::runtime_error("write failed: " + path);
}

json read_json(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

void write_manifest(const std::string& path, const std::string& command, const Params& params, std::uint64_t seed,
                    double seconds, const std::vector<std::string>& outputs, const json& extra = json::object()) {
  json m;
  m["command"] = command;
  m["parameters"] = params_json(params);
  m["seed"] = seed;
  m["version"] = tfa::kVersion;
  m["wall_clock_seconds"] = seconds;
  m["outputs"] = outputs;
  for (auto it = extra.begin(); it != extra.end(); ++it) m[it.key()] = it.value();
  write_text(path, m.dump(1) + "\n");
}

json size_report_json(const tfa::Transformer& T) {
  const tfa::SizeReport r = tfa::size_report(T);
  json j;
  j["K"] = T.length();
  j["ffn"] = json::array();
  for (const auto& [L, W] : r.sizes.ffn) j["ffn"].push_back({{"depth", L}, {"width", W}});
  j["attention"] = json::array();
  for (const auto& [H, S] : r.sizes.sa) j["attention"].push_back({{"heads", H}, {"head_size", S}});
  j["dims"] = r.dims;
  j["B_EB"] = r.B_EB;
  j["B_FF"] = r.B_FF;
  j["B_SA"] = r.B_SA;
  j["M_EB"] = r.M_EB;
  j["M_FF"] = r.M_FF;
  j["M_SA"] = r.M_SA;
  j["params"] = tfa::param_count(T);
  return j;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- build -----------------------------------------------------------------

struct BuildArgs {
  std::string kind, out, target = "sin2pi", dataset;
  std::size_t d = 1, n = 1, N = 4;
  int s = 1;
  double lambda = 1.0, eps = 0.1, r = 1.0, phi = 0.05, B_y = 1.0;
  std::optional<std::size_t> K;
  std::optional<double> delta;
  std::size_t budget_params = 5000000, budget_grid = 10000;
  bool no_pe = false;
  std::uint64_t seed = 0;
};

tfa::LabeledDataset load_or_draw_dataset(const BuildArgs& a) {
  if (!a.dataset.empty()) return tfa::labeled_dataset_from_json(read_json(a.dataset));
  return tfa::random_labeled_dataset(a.d, a.n, a.N, a.r, a.phi, a.B_y, tfa::derive_seed(a.seed, 100));
}

int run_build(const BuildArgs& a) {
  const auto t0 = std::chrono::steady_clock::now();
  Params p = {{"kind", a.kind}, {"seed", std::to_string(a.seed)}};
  tfa::BuildBudget budget;
  budget.max_params = a.budget_params;
  budget.max_grid_points = a.budget_grid;

  json meta;
  meta["kind"] = a.kind;
  std::optional<tfa::Transformer> model;

  if (a.kind == "grid-approx" || a.kind == "uniform-approx") {
    const tfa::HolderTarget target = tfa::make_target(a.target, a.d, a.n, a.s, a.lambda);
    std::optional<tfa::GridSpec> grid;
    if (a.K) grid = tfa::GridSpec{*a.K, a.delta.value_or(tfa::default_delta(target, a.eps, *a.K))};
    else if (a.delta) throw UsageError("--delta requires --K");
    p.insert(p.end(), {{"target", a.target},
                       {"d", std::to_string(a.d)},
                       {"n", std::to_string(a.n)},
                       {"s", std::to_string(a.s)},
                       {"lambda", fmt_double(a.lambda)},
                       {"eps", fmt_double(a.eps)}});
    meta.update({{"target", a.target}, {"d", a.d}, {"n", a.n}, {"s", a.s}, {"lambda", a.lambda}, {"eps", a.eps}});
    if (a.kind == "grid-approx") {
      if (!grid) grid = tfa::GridSpec{tfa::grid_size_for(target, a.eps), 0};
      if (!a.K || !a.delta) grid->delta = tfa::default_delta(target, a.eps, grid->K);
      tfa::GridOptions opt;
      opt.budget = budget;
      tfa::GridApproximator g = tfa::build_grid_approximator(target, a.eps, *grid, tfa::derive_seed(a.seed, 1), opt);
      meta.update({{"K", g.grid.K}, {"delta", g.grid.delta}, {"error_bound", a.eps}, {"region", "cells"},
                   {"eps_taylor", g.eps_taylor}, {"eps_monomial", g.eps_monomial},
                   {"eps_multiplication", g.eps_multiplication}, {"coefficient_bound", g.coefficient_bound}});
      model = std::move(g.T);
    } else {
      tfa::UniformApproximator u = tfa::build_uniform_approximator(target, a.eps, tfa::derive_seed(a.seed, 1), grid, budget);
      const double bound = a.eps + static_cast<double>(a.d * a.n) * target.modulus(u.grid.delta);
      meta.update({{"K", u.grid.K}, {"delta", u.grid.delta}, {"error_bound", bound}, {"region", "cube"}});
      model = std::move(u.T);
    }
    p.insert(p.end(), {{"K", meta["K"].dump()}, {"delta", fmt_double(meta["delta"].get<double>())}});
  } else if (a.kind == "memorizer") {
    const tfa::LabeledDataset data = load_or_draw_dataset(a);
    tfa::Memorizer m = tfa::build_memorizing_transformer(data, !a.no_pe, tfa::derive_seed(a.seed, 2));
    meta.update({{"dataset", tfa::to_json(data)}, {"E", tfa::to_json(m.E)}, {"R_bar", m.R_bar}, {"B_y", m.B_y}});
    p.insert(p.end(), {{"dataset", a.dataset.empty() ? "random" : a.dataset}, {"positional_encoding", a.no_pe ? "0" : "1"}});
    model = std::move(m.T);
  } else if (a.kind == "contextual-map") {
    const tfa::LabeledDataset data = load_or_draw_dataset(a);
    tfa::ContextualMap c = tfa::build_contextual_mapping(data.tokens, tfa::derive_seed(a.seed, 3));
    meta.update({{"dataset", tfa::to_json(data)}, {"R", c.R}, {"guarantees_verified", c.guarantees_verified}});
    p.insert(p.end(), {{"dataset", a.dataset.empty() ? "random" : a.dataset}});
    model = std::move(c.T);
  } else {
    throw UsageError("unknown model kind: " + a.kind);
  }

  if (tfa::param_count(*model) > a.budget_params) throw tfa::BudgetExceeded("parameter count exceeds --budget-params");
  const std::string meta_path = a.out + ".meta.json";
  const std::string manifest_path = a.out + ".manifest.json";
  tfa::save_model(*model, a.out);
  write_text(meta_path, meta.dump(1) + "\n");
  write_manifest(manifest_path, "build", p, a.seed, seconds_since(t0), {a.out, meta_path, manifest_path},
                 {{"size_report", size_report_json(*model)}});
  std::cout << "model: " << a.out << "\nparams: " << tfa::param_count(*model) << "\nlength: " << model->length() << "\n";
  return kPass;
}

// ---- verify ----------------------------------------------------------------

struct VerifyArgs {
  std::string model, suite, out, t_norm = "inf";
  std::size_t samples = 1000;
  double tol = 1e-6;
  std::uint64_t seed = 0;
};

tfa::Transformer load_or_explain(const std::string& path) {
  try {
    return tfa::load_model(path);
  } catch (const std::exception& e) {
    throw std::runtime_error("cannot load model " + path + ": " + e.what());
  }
}

json require_meta(const std::string& model_path, const char* key) {
  const std::string path = model_path + ".meta.json";
  json meta = read_json(path);
  if (!meta.contains(key)) throw UsageError(path + " has no '" + key + "' entry");
  return meta;
}

int run_verify(const VerifyArgs& a) {
  const auto t0 = std::chrono::steady_clock::now();
  const tfa::Transformer T = load_or_explain(a.model);
  Report rep;
  rep.seed = a.seed;
  Params p = {{"suite", a.suite}, {"model", a.model}, {"samples", std::to_string(a.samples)}, {"seed", std::to_string(a.seed)}};
  bool ok = true;

  if (a.suite == "memorization") {
    const json meta = require_meta(a.model, "dataset");
    const tfa::LabeledDataset data = tfa::labeled_dataset_from_json(meta["dataset"]);
    const tfa::Matrix E = meta.contains("E") ? tfa::matrix_from_json(meta["E"]) : tfa::Matrix();
    const double err = tfa::memorization_error(T, data, E);
    p.push_back({"tol", fmt_double(a.tol)});
    rep.add("max_recall_error", err, "N=" + std::to_string(data.tokens.size()));
    ok = err <= a.tol;
  } else if (a.suite == "separation") {
    const json meta = require_meta(a.model, "R");
    const tfa::LabeledDataset data = tfa::labeled_dataset_from_json(meta["dataset"]);
    const double R = meta["R"].get<double>();
    const tfa::SeparationReport s = tfa::check_context_separation(T, data.tokens, R);
    rep.add("pairs_checked", static_cast<double>(s.pairs_checked));
    rep.add("min_gap", s.min_gap, "required=2");
    rep.add("max_abs_id", s.max_abs_id, "R=" + fmt_double(R));
    rep.add("gap_violations", static_cast<double>(s.gap_violations));
    rep.add("radius_violations", static_cast<double>(s.radius_violations));
    ok = s.passed();
  } else if (a.suite == "error") {
    const json meta = require_meta(a.model, "target");
    const tfa::HolderTarget target = tfa::make_target(meta["target"], meta["d"], meta["n"], meta["s"], meta["lambda"]);
    const tfa::GridSpec grid{meta["K"].get<std::size_t>(), meta["delta"].get<double>()};
    const double bound = meta["error_bound"].get<double>();
    const bool cells_only = meta["region"] == "cells";
    const double t = a.t_norm == "inf" ? INFINITY : std::stod(a.t_norm);
    p.push_back({"t", a.t_norm});
    std::size_t cells = 1;
    for (std::size_t e = 0; e < target.d * target.n; ++e) cells *= grid.K;
    const std::size_t per_cell = std::max<std::size_t>(1, a.samples / cells);
    if (std::isinf(t)) {
      const tfa::ErrorReport r = tfa::stratified_sup_error(T, target, grid, per_cell, a.seed, !cells_only);
      for (std::size_t c = 0; c < r.per_cell_max.size(); ++c) rep.add("cell_max", r.per_cell_max[c], "cell=" + std::to_string(c));
      rep.add("sup_error_cells", r.cell_max, "per_cell=" + std::to_string(per_cell));
      if (!cells_only) rep.add("sup_error_flaw", r.flaw_max);
      rep.add("error_bound", bound, cells_only ? "region=cells" : "region=cube");
      ok = (cells_only ? r.cell_max : r.max_abs_deviation) <= bound;
    } else {
      const tfa::ErrorReport r = tfa::estimate_lt_error(T, target, t, a.samples, a.seed, grid);
      rep.add("lt_error", r.estimate, "t=" + a.t_norm);
      rep.add("sample_max_cells", r.cell_max);
      rep.add("sample_max_flaw", r.flaw_max);
      rep.add("error_bound", bound, cells_only ? "region=cells" : "region=cube");
      ok = cells_only ? r.cell_max <= bound : r.estimate <= bound;
    }
  } else if (a.suite == "lipschitz") {
    const double emp = tfa::empirical_lipschitz_cube(T, a.samples, a.seed);
    const tfa::BoundValue b = tfa::theoretical_lipschitz_bound(tfa::structure_of(T));
    rep.add("empirical_lipschitz", emp, "domain=unit_cube");
    rep.add("log10_lipschitz_bound", static_cast<double>(b.log10()));
    ok = std::log(emp) <= static_cast<double>(b.log_value);
  } else if (a.suite == "norms") {
    tfa::NormCheckReport total = tfa::check_norm_bounds(T.embedding(), a.samples, tfa::derive_seed(a.seed, 0));
    rep.add("worst_ratio", total.worst_ratio, "object=embedding");
    for (std::size_t k = 0; k < T.ffns().size(); ++k) {
      const auto r = tfa::check_norm_bounds(T.ffns()[k], T.tokens(), a.samples, tfa::derive_seed(a.seed, 2 * k + 1));
      rep.add("worst_ratio", r.worst_ratio, "object=ffn" + std::to_string(k));
      total.merge(r);
    }
    for (std::size_t k = 0; k < T.attentions().size(); ++k) {
      const auto r = tfa::check_norm_bounds(T.attentions()[k], T.tokens(), a.samples, tfa::derive_seed(a.seed, 2 * k + 2));
      rep.add("worst_ratio", r.worst_ratio, "object=attention" + std::to_string(k + 1));
      total.merge(r);
    }
    rep.add("trials", static_cast<double>(total.trials));
    rep.add("violations", static_cast<double>(total.violations));
    if (!total.passed()) std::cerr << "first violation: " << total.first_violation << "\n";
    ok = total.passed();
  } else {
    throw UsageError("unknown suite: " + a.suite);
  }

  rep.add("passed", ok ? 1 : 0);
  const std::string csv_path = a.out.empty() ? a.model + "." + a.suite + ".csv" : a.out;
  const std::string csv = rep.csv();
  write_text(csv_path, csv);
  write_manifest(csv_path + ".manifest.json", "verify", p, a.seed, seconds_since(t0), {csv_path});
  std::cout << csv << (ok ? "PASS" : "FAIL") << "\n";
  return ok ? kPass : kFail;
}

// ---- bounds ----------------------------------------------------------------

struct BoundsArgs {
  std::string model, out, dims;
  bool rate = false;
  std::size_t K = 0, L = 1, W = 1, H = 1, S = 1, d_in = 1, d_out = 1, n = 1, d = 1;
  int s = 1;
  double lambda = 1.0;
  double B_EB = 1, B_FF = 1, B_SA = 1, M_EB = 1, M_FF = 1, M_SA = 1;
  double varsigma = 1e-3, m = 1e4, sigma = 1.0, B_F = 1.0, gamma = 2.0, approx_err = 0.0;
  std::optional<double> d_eff;
  std::uint64_t seed = 0;
};

std::vector<std::size_t> parse_dims(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stoul(tok));
  return out;
}

int run_bounds(const BoundsArgs& a) {
  const auto t0 = std::chrono::steady_clock::now();
  if (!(a.varsigma > 0)) throw UsageError("--varsigma must be > 0");
  if (!(a.m >= 1)) throw UsageError("--m must be >= 1");
  tfa::StructureConfig cfg;
  double gamma = a.gamma, approx_err = a.approx_err, d_eff = 0;
  Params p = {{"varsigma", fmt_double(a.varsigma)}, {"m", fmt_double(a.m)}, {"sigma", fmt_double(a.sigma)}};
  if (!a.model.empty()) {
    cfg = tfa::structure_of(load_or_explain(a.model));
    p.push_back({"model", a.model});
    d_eff = static_cast<double>(cfg.d_in * cfg.n);
  } else if (a.rate) {
    const tfa::RateConfig rc = tfa::rate_optimal_config(a.m, a.d, a.n, a.s, a.lambda);
    cfg = rc.cfg;
    gamma = a.s + a.lambda;
    approx_err = rc.eps;
    d_eff = static_cast<double>(a.d * a.n);
    p.insert(p.end(), {{"rate", "1"}, {"d", std::to_string(a.d)}, {"n", std::to_string(a.n)}, {"s", std::to_string(a.s)},
                       {"lambda", fmt_double(a.lambda)}});
  } else {
    cfg.K = a.K;
    cfg.L = a.L;
    cfg.W = a.W;
    cfg.H = a.H;
    cfg.S = a.S;
    cfg.d_in = a.d_in;
    cfg.d_out = a.d_out;
    cfg.n = a.n;
    cfg.d = a.dims.empty() ? std::vector<std::size_t>(a.K + 1, a.d_in) : parse_dims(a.dims);
    if (cfg.d.size() != cfg.K + 1) throw UsageError("--dims needs K+1 entries");
    cfg.B_EB = a.B_EB;
    cfg.B_FF = a.B_FF;
    cfg.B_SA = a.B_SA;
    cfg.M_EB = a.M_EB;
    cfg.M_FF = a.M_FF;
    cfg.M_SA = a.M_SA;
    p.push_back({"config", "flags"});
    d_eff = static_cast<double>(cfg.d_in * cfg.n);
  }
  if (a.d_eff) d_eff = *a.d_eff;
  p.insert(p.end(), {{"gamma", fmt_double(gamma)}, {"d_eff", fmt_double(d_eff)}, {"approx_err", fmt_double(approx_err)}});

  const tfa::BoundValue lip = tfa::theoretical_lipschitz_bound(cfg);
  const long double logN = tfa::covering_number_log_bound(cfg, a.varsigma);
  const tfa::GeneralizationTerms g = tfa::generalization_terms(cfg, a.m, a.sigma, a.B_F, gamma, d_eff, approx_err);
  Report rep;
  rep.seed = a.seed;
  const std::string ps = render(p);
  rep.add("log10_lipschitz", static_cast<double>(lip.log10()), ps);
  rep.add("log10_covering_number", static_cast<double>(logN / std::log(10.0L)), ps);
  rep.add("generalization_leading", g.leading, ps);
  rep.add("generalization_entropy", g.entropy, ps);
  rep.add("generalization_approximation", g.approximation, ps);
  rep.add("generalization_dudley", g.dudley, ps);
  rep.add("generalization_bound", g.total(), ps);
  const std::string csv = rep.csv();
  if (!a.out.empty()) {
    write_text(a.out, csv);
    write_manifest(a.out + ".manifest.json", "bounds", p, a.seed, seconds_since(t0), {a.out});
  }
  std::cout << csv;
  const bool finite = std::isfinite(static_cast<double>(lip.log_value)) && std::isfinite(g.total());
  return finite ? kPass : kFail;
}

// ---- dataset ---------------------------------------------------------------

int run_dataset(const BuildArgs& a) {
  const tfa::LabeledDataset data = tfa::random_labeled_dataset(a.d, a.n, a.N, a.r, a.phi, a.B_y, a.seed);
  write_text(a.out, tfa::to_json(data).dump(1) + "\n");
  std::cout << "dataset: " << a.out << "\n";
  return kPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Build and check explicitly constructed Transformer networks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", tfa::kVersion);

  BuildArgs b;
  auto* build = app.add_subcommand("build", "Construct a model and write it with a manifest");
  build->add_option("kind", b.kind, "grid-approx | uniform-approx | memorizer | contextual-map")
      ->required()
      ->check(CLI::IsMember({"grid-approx", "uniform-approx", "memorizer", "contextual-map"}));
  build->add_option("--out", b.out, "Model file")->required();
  build->add_option("--seed", b.seed);
  build->add_option("--target", b.target, "sin2pi | poly:c0,c1,... | const:c | gauss-bump");
  build->add_option("--d", b.d)->check(CLI::PositiveNumber);
  build->add_option("--n", b.n)->check(CLI::PositiveNumber);
  build->add_option("--s", b.s)->check(CLI::NonNegativeNumber);
  build->add_option("--lambda", b.lambda)->check(CLI::Range(1e-9, 1.0));
  build->add_option("--eps", b.eps)->check(CLI::Range(1e-12, 1.0));
  build->add_option("--K", b.K, "Grid resolution per entry")->check(CLI::Range(std::size_t{1}, std::size_t{1000000}));
  build->add_option("--delta", b.delta)->check(CLI::PositiveNumber);
  build->add_option("--budget-params", b.budget_params);
  build->add_option("--budget-grid", b.budget_grid);
  build->add_option("--dataset", b.dataset, "Labeled dataset JSON");
  build->add_option("--N", b.N)->check(CLI::PositiveNumber);
  build->add_option("--r", b.r)->check(CLI::PositiveNumber);
  build->add_option("--phi", b.phi)->check(CLI::PositiveNumber);
  build->add_option("--B-y", b.B_y)->check(CLI::PositiveNumber);
  build->add_flag("--no-pe", b.no_pe, "Disable the positional encoding");

  VerifyArgs v;
  auto* verify = app.add_subcommand("verify", "Run a verification suite on a saved model");
  verify->add_option("model", v.model)->required();
  verify->add_option("--suite", v.suite)
      ->required()
      ->check(CLI::IsMember({"memorization", "separation", "error", "lipschitz", "norms"}));
  verify->add_option("--out", v.out, "CSV report path");
  verify->add_option("--seed", v.seed);
  verify->add_option("--samples", v.samples)->check(CLI::PositiveNumber);
  verify->add_option("--t-norm", v.t_norm)->check(CLI::IsMember({"1", "2", "inf"}));
  verify->add_option("--tol", v.tol);

  BoundsArgs bo;
  auto* bounds = app.add_subcommand("bounds", "Lipschitz, covering-number and generalization bounds");
  bounds->add_option("--model", bo.model);
  bounds->add_flag("--rate", bo.rate, "Use the rate-optimal configuration for m samples");
  bounds->add_option("--out", bo.out);
  bounds->add_option("--seed", bo.seed);
  bounds->add_option("--K", bo.K);
  bounds->add_option("--L", bo.L);
  bounds->add_option("--W", bo.W);
  bounds->add_option("--H", bo.H);
  bounds->add_option("--S", bo.S);
  bounds->add_option("--d-in", bo.d_in);
  bounds->add_option("--d-out", bo.d_out);
  bounds->add_option("--n", bo.n);
  bounds->add_option("--d", bo.d);
  bounds->add_option("--s", bo.s);
  bounds->add_option("--lambda", bo.lambda);
  bounds->add_option("--dims", bo.dims, "Comma-separated d_0,...,d_K");
  bounds->add_option("--B-EB", bo.B_EB);
  bounds->add_option("--B-FF", bo.B_FF);
  bounds->add_option("--B-SA", bo.B_SA);
  bounds->add_option("--M-EB", bo.M_EB);
  bounds->add_option("--M-FF", bo.M_FF);
  bounds->add_option("--M-SA", bo.M_SA);
  bounds->add_option("--varsigma", bo.varsigma);
  bounds->add_option("--m", bo.m);
  bounds->add_option("--sigma", bo.sigma);
  bounds->add_option("--B-F", bo.B_F);
  bounds->add_option("--gamma", bo.gamma);
  bounds->add_option("--d-eff", bo.d_eff);
  bounds->add_option("--approx-err", bo.approx_err);

  BuildArgs ds;
  auto* dataset = app.add_subcommand("dataset", "Draw a random separated labeled dataset");
  dataset->add_option("--out", ds.out)->required();
  dataset->add_option("--seed", ds.seed);
  dataset->add_option("--d", ds.d)->check(CLI::PositiveNumber);
  dataset->add_option("--n", ds.n)->check(CLI::PositiveNumber);
  dataset->add_option("--N", ds.N)->check(CLI::PositiveNumber);
  dataset->add_option("--r", ds.r)->check(CLI::PositiveNumber);
  dataset->add_option("--phi", ds.phi)->check(CLI::PositiveNumber);
  dataset->add_option("--B-y", ds.B_y)->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*build) return run_build(b);
    if (*verify) return run_verify(v);
    if (*bounds) return run_bounds(bo);
    if (*dataset) return run_dataset(ds);
  } catch (const tfa::BudgetExceeded& e) {
    std::cerr << "budget exceeded: " << e.what() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
  }
  return kUsage;
}
