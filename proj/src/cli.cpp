#include "polya/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "polya/combinatorics.hpp"
#include "polya/core.hpp"
#include "polya/diagnostics.hpp"
#include "polya/ensembles.hpp"
#include "polya/inference.hpp"
#include "polya/parallel.hpp"
#include "polya/sampler.hpp"

namespace polya::cli {

using nlohmann::json;

namespace {

constexpr double kAlpha = 0.01;


void overlay(json& base, const json& user, const std::string& path) {
  if (!user.is_object()) throw ConfigError("config field " + (path.empty() ? "/" : path) + ": expected an object");
  for (const auto& [key, value] : user.items()) {
    const std::string field = path + "/" + key;
    if (!base.contains(key)) throw ConfigError("config field " + field + ": unknown key");
    json& slot = base[key];
    if (slot.is_object() && !slot.empty()) {
      overlay(slot, value, field);
    } else {
      slot = value;
    }
  }
}

std::pair<std::size_t, std::size_t> line_and_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < text.size() && i + 1 < byte; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

const json& field(const json& cfg, const std::string& ptr) {
  const json::json_pointer p(ptr);
  if (!cfg.contains(p)) throw ConfigError("config field " + ptr + ": missing");
  return cfg.at(p);
}

double get_number(const json& cfg, const std::string& ptr) {
  const json& v = field(cfg, ptr);
  if (!v.is_number()) throw ConfigError("config field " + ptr + ": expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError("config field " + ptr + ": must be finite");
  return d;
}

std::int64_t get_int(const json& cfg, const std::string& ptr, std::int64_t min_value) {
  const json& v = field(cfg, ptr);
  if (!v.is_number_integer()) throw ConfigError("config field " + ptr + ": expected an integer");
  const auto i = v.get<std::int64_t>();
  if (i < min_value) throw ConfigError("config field " + ptr + ": must be >= " + std::to_string(min_value));
  return i;
}

std::string get_string(const json& cfg, const std::string& ptr) {
  const json& v = field(cfg, ptr);
  if (!v.is_string()) throw ConfigError("config field " + ptr + ": expected a string");
  return v.get<std::string>();
}

double get_positive(const json& cfg, const std::string& ptr) {
  const double d = get_number(cfg, ptr);
  if (!(d > 0.0)) throw ConfigError("config field " + ptr + ": must be > 0");
  return d;
}

std::uint64_t get_seed(const json& cfg) {
  const json& v = field(cfg, "/seed");
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) throw ConfigError("config field /seed: expected a nonnegative integer");
  return v.get<std::uint64_t>();
}

ModelParams get_params(const json& cfg) {
  const ModelParams p{get_number(cfg, "/params/z"), get_number(cfg, "/params/w")};
  if (!p.is_valid()) {
    throw ConfigError("config field /params: need z in (0,1) and w > 0, or z = w = 0");
  }
  return p;
}

EnsembleKind parse_kind(const std::string& s, const std::string& ptr) {
  if (s == "sites") return EnsembleKind::OccupiedSites;
  if (s == "height") return EnsembleKind::TotalHeight;
  if (s == "both") return EnsembleKind::SizeAndHeight;
  throw ConfigError("config field " + ptr + ": expected one of sites, height, both");
}

std::vector<GridPoint> get_grid(const json& cfg, const std::string& ptr) {
  const json& v = field(cfg, ptr);
  if (v.is_string()) {
    if (v.get<std::string>() != "default") throw ConfigError("config field " + ptr + ": unknown grid name");
    return default_grid();
  }
  if (!v.is_array() || v.empty()) {
    throw ConfigError("config field " + ptr + ": expected \"default\" or a list of [z, rho] pairs");
  }
  std::vector<GridPoint> grid;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string item = ptr + "/" + std::to_string(i);
    const double z = get_number(cfg, item + "/0");
    const double rho = get_positive(cfg, item + "/1");
    if (!(z > 0.0 && z < 1.0)) throw ConfigError("config field " + item + "/0: z must lie in (0,1)");
    grid.push_back({z, rho});
  }
  return grid;
}

DiscretePrior get_prior(const json& cfg) {
  const std::string ptr = "/posterior/prior";
  const json& v = field(cfg, ptr);
  if (v.is_string()) {
    const auto name = v.get<std::string>();
    if (name == "w") return {{{0.5, 1.0}, 0.5}, {{0.5, 2.0}, 0.5}};
    if (name == "z") return {{{0.3, 1.0}, 0.5}, {{0.6, 1.0}, 0.5}};
    throw ConfigError("config field " + ptr + ": expected \"w\", \"z\" or a list of atoms");
  }
  if (!v.is_array() || v.empty()) throw ConfigError("config field " + ptr + ": expected a nonempty list");
  DiscretePrior prior;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string item = ptr + "/" + std::to_string(i);
    const ModelParams p{get_number(cfg, item + "/z"), get_number(cfg, item + "/w")};
    if (!p.is_valid()) throw ConfigError("config field " + item + ": illegal (z, w)");
    prior.push_back({p, get_positive(cfg, item + "/weight")});
  }
  return prior;
}


json atoms_json(const Configuration& cfg) {
  json out = json::array();
  for (const auto& a : cfg.atoms()) out.push_back({a.site, a.mult});
  return out;
}

json chi_json(const ChiSquareResult& r) {
  return {{"statistic", r.statistic}, {"dof", r.dof}, {"p_value", r.p_value}, {"cells", r.cells},
          {"pass", r.p_value > kAlpha}};
}

json estimate_json(const McEstimate& e) { return {{"mean", e.mean}, {"se", e.se}, {"n", e.n}}; }

json identity_json(const IdentityReport& r) {
  return {{"name", r.name},
          {"lhs", estimate_json(r.lhs)},
          {"rhs", estimate_json(r.rhs)},
          {"difference", r.difference},
          {"pooled_se", r.pooled_se},
          {"relative_error", r.relative_error},
          {"relative_cap", r.relative_cap},
          {"pass", r.pass}};
}

json vector_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

std::string ratio_string(const BigRatio& r) {
  std::ostringstream os;
  os << r;
  return os.str();
}

std::string csv_number(double x) {
  if (std::isnan(x)) return "nan";
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}


struct Report {
  json body;
  std::optional<std::string> csv;
  /// JSON-lines output (sample).
  std::string lines;
  bool failed = false;
};

struct Context {
  json cfg;
  std::uint64_t seed = 0;
  RandomSource rng{0};
};

Report cmd_sample(const Context& ctx) {
  const ModelParams params = get_params(ctx.cfg);
  const auto count = get_int(ctx.cfg, "/sample/count", 0);
  const std::string which = get_string(ctx.cfg, "/sample/sampler");
  if (which != "levy" && which != "urn") throw ConfigError("config field /sample/sampler: expected levy or urn");
  const Window b(0.0, get_positive(ctx.cfg, "/sample/length"));
  const LevySampler levy(params, b);
  std::ostringstream lines;
  lines << json{{"command", "sample"}, {"config", ctx.cfg}, {"seed", ctx.seed}}.dump() << "\n";
  for (std::int64_t i = 0; i < count; ++i) {
    RandomSource r = ctx.rng.split(static_cast<std::uint64_t>(i));
    const Configuration cfg = which == "levy" ? levy.sample(r) : sample_urn(params, b, r);
    lines << json{{"index", i}, {"zeta", zeta(cfg, b)}, {"xi", xi(cfg, b)}, {"atoms", atoms_json(cfg)}}.dump()
          << "\n";
  }
  Report rep;
  rep.lines = lines.str();
  return rep;
}

Report cmd_selfcheck(const Context& ctx) {
  const int m_max = static_cast<int>(get_int(ctx.cfg, "/selfcheck/m_max", 1));
  const int degree = static_cast<int>(get_int(ctx.cfg, "/selfcheck/series_degree", 0));
  if (m_max > 14) throw ConfigError("config field /selfcheck/m_max: must be <= 14");
  json checks = json::array();
  bool all_ok = true;
  auto record = [&](const std::string& name, int lo, int hi, const std::function<bool()>& body) {
    bool ok = false;
    try {
      ok = body();
    } catch (const std::logic_error&) {
      ok = false;
    }
    all_ok = all_ok && ok;
    checks.push_back({{"identity", name}, {"m_range", {lo, hi}}, {"status", ok ? "pass" : "fail"}});
  };
  record("alpha_recursion", 1, m_max, [&] {
    const AlphaTable table = alpha_recursion(m_max);
    for (int m = 1; m <= m_max; ++m) {
      BigRatio total = 0;
      for (const auto& [g, a] : table[static_cast<std::size_t>(m)]) total += a;
      if (total != BigRatio(factorial(m))) return false;
    }
    return true;
  });
  record("stirling_cycle", 1, m_max, [&] {
    for (int m = 1; m <= m_max; ++m) {
      BigInt row = 0;
      for (int k = 1; k <= m; ++k) {
        BigInt s = 0;
        for (const auto& g : enumerate_partitions(m, k)) s += permutations_of_type(g);
        if (s != stirling_cycle(m, k)) return false;
        row += s;
      }
      if (row != factorial(m)) return false;
    }
    return true;
  });
  record("rising_factorial", 1, m_max, [&] {
    for (const BigRatio& x : {BigRatio(1, 2), BigRatio(3), BigRatio(7, 3)}) {
      for (int m = 1; m <= m_max; ++m) {
        BigRatio lhs = 0;
        for (const auto& g : enumerate_partitions(m)) {
          lhs += ratio_pow(x, static_cast<unsigned>(g.block_count())) *
                 BigRatio(permutations_of_type(g));
        }
        if (lhs != rising_factorial(x, m)) return false;
      }
    }
    return true;
  });
  record("series_identity", 0, degree, [&] {
    return series_identity_check(BigRatio(1, 2), BigRatio(3, 2), BigRatio(1, 2), degree).agrees() &&
           series_identity_check(BigRatio(1, 3), BigRatio(2), BigRatio(2, 5), degree).agrees();
  });
  Report rep;
  rep.body = {{"checks", checks}, {"status", all_ok ? "pass" : "fail"}};
  rep.failed = !all_ok;
  return rep;
}

Report cmd_ensemble(const Context& ctx) {
  const ModelParams params = get_params(ctx.cfg);
  const EnsembleKind kind = parse_kind(get_string(ctx.cfg, "/ensemble/kind"), "/ensemble/kind");
  const auto m = get_int(ctx.cfg, "/ensemble/m", 0);
  const auto k = get_int(ctx.cfg, "/ensemble/k", 0);
  const auto n = get_int(ctx.cfg, "/ensemble/n", 0);
  const auto samples = get_int(ctx.cfg, "/ensemble/samples", 1);
  const auto show = get_int(ctx.cfg, "/ensemble/show", 0);
  const Window b(0.0, get_positive(ctx.cfg, "/ensemble/length"));
  EnsembleCondition cond;
  switch (kind) {
    case EnsembleKind::OccupiedSites:
      cond = EnsembleCondition::occupied_sites(n, b);
      break;
    case EnsembleKind::TotalHeight:
      cond = EnsembleCondition::total_height(m, b);
      break;
    case EnsembleKind::SizeAndHeight:
      cond = EnsembleCondition::size_and_height(m, k, b);
      break;
  }
  try {
    cond.validate();
  } catch (const std::domain_error& e) {
    throw ConfigError(std::string("config field /ensemble: ") + e.what());
  }
  if (params.is_empty()) throw ConfigError("config field /params: kernels need a nonempty process");
  if (kind != EnsembleKind::OccupiedSites && m > kPartitionBound) {
    throw ConfigError("config field /ensemble/m: exact comparison needs m <= " + std::to_string(kPartitionBound));
  }

  json shown = json::array();
  RandomSource show_rng = ctx.rng.split(1);
  for (std::int64_t i = 0; i < show; ++i) shown.push_back(atoms_json(kernel_apply(cond, {}, params, show_rng)));

  Report rep;
  const EnsembleCheck check = ensemble_gof(cond, params, samples, ctx.rng.split(0));
  json result = {{"kind", to_string(kind)},
                 {"window", {b.lo(), b.hi()}},
                 {"rho_mass", params.mass(b)},
                 {"samples", shown},
                 {"chi_square", chi_json(check.chi)}};
  if (kind == EnsembleKind::OccupiedSites) {
    json freq = json::array();
    for (const auto& [j, c] : check.multiplicities.counts) {
      freq.push_back({{"j", j},
                      {"observed", static_cast<double>(c) / static_cast<double>(check.multiplicities.total)},
                      {"expected", logarithmic_pmf(params.z, j)}});
    }
    result["multiplicities"] = freq;
  } else {
    const PartitionLaw law = kind == EnsembleKind::TotalHeight
                                 ? partition_law_total_height(static_cast<int>(m), BigRatio(params.mass(b)))
                                 : partition_law_size_height(static_cast<int>(m), static_cast<int>(k));
    json table = json::array();
    for (const auto& [g, p] : law.support()) {
      auto it = check.profiles.find(g);
      const double observed = it == check.profiles.end() ? 0.0 : static_cast<double>(it->second);
      table.push_back({{"profile", g.to_string()},
                       {"probability", ratio_string(p)},
                       {"expected", static_cast<double>(p)},
                       {"observed", observed / static_cast<double>(samples)}});
    }
    result["law"] = table;
  }
  rep.failed = !(check.chi.p_value > kAlpha);
  result["status"] = rep.failed ? "fail" : "pass";
  rep.body = result;
  return rep;
}

Report cmd_boundary(const Context& ctx) {
  const ModelParams params = get_params(ctx.cfg);
  if (params.is_empty()) throw ConfigError("config field /params: boundary recovery needs a nonempty process");
  const EnsembleKind kind = parse_kind(get_string(ctx.cfg, "/boundary/ensemble"), "/boundary/ensemble");
  const auto K = get_int(ctx.cfg, "/chain/K", 1);
  const double delta = get_positive(ctx.cfg, "/chain/delta");
  const auto replicas = get_int(ctx.cfg, "/replicas", 1);
  // Ground intensity for the normalization: w for total height, 1 otherwise.
  const double w_ref = kind == EnsembleKind::TotalHeight ? params.w : 1.0;

  RandomSource path_rng = ctx.rng.split(0);
  const Configuration path = sample_levy(params, chain_window(static_cast<int>(K), delta), path_rng);
  std::ostringstream csv;
  csv << "k,u_k,v_k,w_hat_k,z_hat_k\n";
  double z_last = 0.0, w_last = 0.0;
  LimitStats last;
  for (int k = 1; k <= K; ++k) {
    const LimitStats s = limit_stats(path, chain_window(k, delta), GroundIntensity{w_ref});
    double z_hat = params.z, w_hat = params.w;
    switch (kind) {
      case EnsembleKind::OccupiedSites:
        w_hat = recover_w_occupied(s, params.z).value;
        break;
      case EnsembleKind::TotalHeight:
        z_hat = recover_z_height(s.u());
        break;
      case EnsembleKind::SizeAndHeight:
        try {
          const ZW zw = recover_zw_size_height(s.u(), s.v());
          z_hat = zw.z;
          w_hat = zw.w;
        } catch (const InfeasibleStatistics&) {
          z_hat = w_hat = std::nan("");
        }
        break;
    }
    csv << k << ',' << csv_number(s.u()) << ',' << csv_number(s.v()) << ',' << csv_number(w_hat) << ','
        << csv_number(z_hat) << '\n';
    z_last = z_hat;
    w_last = w_hat;
    last = s;
  }

  json minimizer = nullptr;
  json i_value = nullptr;
  if (std::isfinite(z_last) && std::isfinite(w_last) && z_last > 0.0) {
    const int J = levy_truncation(z_last, 1.0);
    const RateMeasure kappa(w_last * tau_vector(z_last, J));
    minimizer = {{"support", J}, {"kappa", vector_json(kappa.values)}};
    i_value = rate_function(kappa, params.z);
  }

  const RecoveryReport rec = boundary_recovery_experiment(kind, params, static_cast<double>(K) * delta,
                                                          replicas, ctx.rng.split(1));
  RecoveryReport::Tolerance tol;
  json tol_json;
  switch (kind) {
    case EnsembleKind::OccupiedSites:
      tol.w_rel = 0.05;
      tol_json = {{"w_rel", 0.05}};
      break;
    case EnsembleKind::TotalHeight:
      tol.z_abs = 0.05;
      tol_json = {{"z_abs", 0.05}};
      break;
    case EnsembleKind::SizeAndHeight:
      tol.z_rel = 0.05;
      tol.w_rel = 0.05;
      tol_json = {{"z_rel", 0.05}, {"w_rel", 0.05}};
      break;
  }
  Report rep;
  rep.body = {{"ensemble", to_string(kind)},
              {"truth", {{"z", params.z}, {"w", params.w}}},
              {"rho_mass", last.rho_mass},
              {"statistics", {{"u", last.u()}, {"v", last.v()}, {"zeta", last.zeta}, {"xi", last.xi}}},
              {"estimates", {{"z_hat", z_last}, {"w_hat", w_last}}},
              {"errors", {{"z_abs", std::abs(z_last - params.z)}, {"w_rel", std::abs(w_last - params.w) / params.w}}},
              {"minimizer", minimizer},
              {"I_value", i_value},
              {"recovery", {{"replicas", replicas}, {"tolerance", tol_json}, {"fraction_within", rec.fraction_within(tol)}}}};
  rep.csv = csv.str();
  return rep;
}

Report cmd_ldp(const Context& ctx) {
  const double u = get_number(ctx.cfg, "/ldp/u");
  std::optional<double> v;
  if (!field(ctx.cfg, "/ldp/v").is_null()) v = get_number(ctx.cfg, "/ldp/v");
  const int J = static_cast<int>(get_int(ctx.cfg, "/ldp/J", 1));
  const double z_ref = get_number(ctx.cfg, "/ldp/z_ref");
  if (!(z_ref > 0.0 && z_ref < 1.0)) throw ConfigError("config field /ldp/z_ref: must lie in (0,1)");
  RateMeasure analytic;
  MinimizerResult numeric;
  try {
    analytic = analytic_minimizer(u, v, J);
    numeric = numeric_minimizer(u, v, z_ref, J);
  } catch (const InfeasibleStatistics& e) {
    throw ConfigError(std::string("config field /ldp: ") + e.what());
  }
  double z = 0.0, w = 0.0;
  if (v) {
    const ZW zw = recover_zw_size_height(u, *v);
    z = zw.z;
    w = zw.w;
  } else {
    z = recover_z_height(u);
    w = 1.0;
  }
  const double l1 = (analytic.values - numeric.kappa.values).lpNorm<1>();
  json residuals = {numeric.kappa.first_moment() - u};
  if (v) residuals.push_back(numeric.kappa.mass() - *v);
  Report rep;
  rep.body = {{"constraints", {{"u", u}, {"v", v ? json(*v) : json(nullptr)}}},
              {"estimates", {{"z", z}, {"w", w}}},
              {"errors", {{"l1_numeric_vs_analytic", l1}, {"constraint_residuals", residuals}}},
              {"minimizer",
               {{"support", J},
                {"z_ref", z_ref},
                {"analytic", vector_json(analytic.values)},
                {"numeric", vector_json(numeric.kappa.values)},
                {"iterations", numeric.iterations},
                {"multipliers", {numeric.multipliers[0], numeric.multipliers[1]}}}},
              {"I_value", numeric.rate}};
  return rep;
}

Report cmd_verify(const Context& ctx) {
  const auto grid = get_grid(ctx.cfg, "/verify/grid");
  const auto n = get_int(ctx.cfg, "/verify/n", 2);
  const VerifyReport vr = verify_grid(grid, n, ctx.rng);
  json checks = json::array();
  std::ostringstream csv;
  csv << "z,rho_mass,check,lhs,lhs_se,rhs,rhs_se,relative_error,pass\n";
  for (std::size_t i = 0; i < vr.checks.size(); ++i) {
    const GridPoint& p = grid[i / 3];
    const IdentityReport& r = vr.checks[i];
    json j = identity_json(r);
    j["z"] = p.z;
    j["rho_mass"] = p.rho_mass;
    checks.push_back(j);
    csv << csv_number(p.z) << ',' << csv_number(p.rho_mass) << ',' << r.name << ',' << csv_number(r.lhs.mean)
        << ',' << csv_number(r.lhs.se) << ',' << csv_number(r.rhs.mean) << ',' << csv_number(r.rhs.se) << ','
        << csv_number(r.relative_error) << ',' << (r.pass ? 1 : 0) << '\n';
  }
  Report rep;
  rep.failed = !vr.all_pass();
  json control = identity_json(vr.negative_control);
  control["expected"] = "fail";
  rep.body = {{"checks", checks},
              {"negative_control", control},
              {"status", rep.failed ? "fail" : "pass"}};
  rep.csv = csv.str();
  return rep;
}

Report cmd_posterior(const Context& ctx) {
  const DiscretePrior prior = get_prior(ctx.cfg);
  const auto K = get_int(ctx.cfg, "/chain/K", 1);
  const double delta = get_positive(ctx.cfg, "/chain/delta");
  const auto replicas = get_int(ctx.cfg, "/replicas", 1);
  std::vector<int> checkpoints;
  const json& cp = field(ctx.cfg, "/posterior/checkpoints");
  if (!cp.is_array()) throw ConfigError("config field /posterior/checkpoints: expected a list");
  for (std::size_t i = 0; i < cp.size(); ++i) {
    const auto c = get_int(ctx.cfg, "/posterior/checkpoints/" + std::to_string(i), 1);
    if (c > K) throw ConfigError("config field /posterior/checkpoints/" + std::to_string(i) + ": exceeds /chain/K");
    checkpoints.push_back(static_cast<int>(c));
  }
  const PosteriorReport pr =
      posterior_concentration_experiment(prior, static_cast<int>(K), delta, checkpoints, replicas, ctx.rng);
  json rows = json::array();
  std::ostringstream csv;
  csv << "k,rho_mass,median_mass_on_truth,mean_mass_on_truth\n";
  for (std::size_t i = 0; i < pr.checkpoints.size(); ++i) {
    const double rho = pr.checkpoints[i] * delta;
    rows.push_back({{"k", pr.checkpoints[i]},
                    {"rho_mass", rho},
                    {"median_mass_on_truth", pr.median_mass_on_truth[i]},
                    {"mean_mass_on_truth", pr.mean_mass_on_truth[i]}});
    csv << pr.checkpoints[i] << ',' << csv_number(rho) << ',' << csv_number(pr.median_mass_on_truth[i]) << ','
        << csv_number(pr.mean_mass_on_truth[i]) << '\n';
  }
  json atoms = json::array();
  for (const auto& a : prior) atoms.push_back({{"z", a.params.z}, {"w", a.params.w}, {"weight", a.weight}});
  Report rep;
  rep.body = {{"prior", atoms}, {"replicas", replicas}, {"checkpoints", rows}};
  rep.csv = csv.str();
  return rep;
}

Report cmd_dist_check(const Context& ctx) {
  const auto grid = get_grid(ctx.cfg, "/dist_check/grid");
  const auto n = get_int(ctx.cfg, "/dist_check/n", 10);
  json points = json::array();
  std::ostringstream csv;
  csv << "z,rho_mass,test,statistic,dof,p_value\n";
  bool ok = true;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const DistCheckReport dr = dist_check(grid[i], n, ctx.rng.split(i));
    ok = ok && dr.pass(kAlpha);
    const std::pair<const char*, const ChiSquareResult*> tests[] = {
        {"zeta_negbin", &dr.zeta_negbin},
        {"xi_poisson", &dr.xi_poisson},
        {"multiplicity_logarithmic", &dr.multiplicity_logarithmic},
        {"levy_vs_urn", &dr.levy_vs_urn}};
    json entry = {{"z", dr.point.z}, {"rho_mass", dr.point.rho_mass}, {"n", dr.n}};
    for (const auto& [name, r] : tests) {
      entry[name] = chi_json(*r);
      csv << csv_number(dr.point.z) << ',' << csv_number(dr.point.rho_mass) << ',' << name << ','
          << csv_number(r->statistic) << ',' << r->dof << ',' << csv_number(r->p_value) << '\n';
    }
    points.push_back(entry);
  }
  Report rep;
  rep.failed = !ok;
  rep.body = {{"alpha", kAlpha}, {"points", points}, {"status", ok ? "pass" : "fail"}};
  rep.csv = csv.str();
  return rep;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + path.string());
  f << text;
}

}  // namespace

json default_config() {
  return {
      {"seed", 20261015},
      {"threads", 0},
      {"params", {{"z", 0.5}, {"w", 1.0}}},
      {"chain", {{"delta", 1.0}, {"K", 200}}},
      {"replicas", 200},
      {"sample", {{"count", 5}, {"sampler", "levy"}, {"length", 10.0}}},
      {"selfcheck", {{"m_max", 8}, {"series_degree", 6}}},
      {"ensemble",
       {{"kind", "height"}, {"m", 4}, {"k", 2}, {"n", 3}, {"samples", 100000}, {"length", 1.0}, {"show", 3}}},
      {"boundary", {{"ensemble", "sites"}}},
      {"ldp", {{"u", 1.0}, {"v", nullptr}, {"J", 200}, {"z_ref", 0.5}}},
      {"verify", {{"grid", "default"}, {"n", 1000000}}},
      {"dist_check", {{"grid", "default"}, {"n", 100000}}},
      {"posterior", {{"prior", "w"}, {"checkpoints", {10, 50, 200}}}},
  };
}

json resolve_config(const std::string& text) {
  json user;
  try {
    user = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_and_column(text, e.byte);
    throw ConfigError("config line " + std::to_string(line) + ", column " + std::to_string(col) +
                      ": malformed JSON");
  }
  json cfg = default_config();
  overlay(cfg, user, "");
  return cfg;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Polya sum process toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::optional<unsigned> threads;
  bool want_json = false;
  bool want_csv = false;
  app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Seed (overrides the config)");
  app.add_option("--out", out_dir, "Directory for report files");
  app.add_option("--threads", threads, "Worker threads (0 = all cores)");
  auto* json_flag = app.add_flag("--json", want_json, "JSON report (default)");
  app.add_flag("--csv", want_csv, "CSV report where the command has one")->excludes(json_flag);

  app.add_subcommand("sample", "Sample configurations (JSON lines)");
  app.add_subcommand("selfcheck-combinatorics", "Exact combinatorial identities");
  auto* ensemble = app.add_subcommand("ensemble", "Conditional kernels against their exact laws");
  auto* boundary = app.add_subcommand("boundary", "Parameter recovery along the window chain");
  auto* ldp = app.add_subcommand("ldp", "Constrained rate-function minimizer");
  auto* verify = app.add_subcommand("verify", "Monte Carlo identity checks");
  app.add_subcommand("posterior", "Posterior concentration over a finite prior");
  app.add_subcommand("dist-check", "Chi-square checks of the window laws");

  std::optional<std::string> kind, boundary_kind, grid;
  std::optional<std::int64_t> m, k, n;
  std::optional<double> u, v;
  ensemble->add_option("--kind", kind, "sites | height | both");
  ensemble->add_option("--m", m, "Total height");
  ensemble->add_option("--k", k, "Occupied sites (with --kind both)");
  ensemble->add_option("--n", n, "Occupied sites (with --kind sites)");
  boundary->add_option("--ensemble", boundary_kind, "sites | height | both");
  ldp->add_option("--u", u, "First-moment constraint");
  ldp->add_option("--v", v, "Mass constraint");
  verify->add_option("--grid", grid, "Grid name");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }
  CLI::App* cmd = app.get_subcommands().front();
  const std::string name = cmd->get_name();

  Report rep;
  json cfg;
  std::uint64_t resolved_seed = 0;
  try {
    if (config_path.empty()) {
      cfg = default_config();
    } else {
      std::ifstream f(config_path, std::ios::binary);
      std::stringstream buf;
      buf << f.rdbuf();
      cfg = resolve_config(buf.str());
    }
    if (seed) cfg["seed"] = *seed;
    if (threads) cfg["threads"] = *threads;
    if (kind) cfg["ensemble"]["kind"] = *kind;
    if (m) cfg["ensemble"]["m"] = *m;
    if (k) cfg["ensemble"]["k"] = *k;
    if (n) cfg["ensemble"]["n"] = *n;
    if (boundary_kind) cfg["boundary"]["ensemble"] = *boundary_kind;
    if (u) cfg["ldp"]["u"] = *u;
    if (v) cfg["ldp"]["v"] = *v;
    if (grid) cfg["verify"]["grid"] = *grid;

    resolved_seed = get_seed(cfg);
    set_thread_count(static_cast<unsigned>(get_int(cfg, "/threads", 0)));
    const Context ctx{cfg, resolved_seed, RandomSource(resolved_seed)};
    if (name == "sample") {
      rep = cmd_sample(ctx);
    } else if (name == "selfcheck-combinatorics") {
      rep = cmd_selfcheck(ctx);
    } else if (name == "ensemble") {
      rep = cmd_ensemble(ctx);
    } else if (name == "boundary") {
      rep = cmd_boundary(ctx);
    } else if (name == "ldp") {
      rep = cmd_ldp(ctx);
    } else if (name == "verify") {
      rep = cmd_verify(ctx);
    } else if (name == "posterior") {
      rep = cmd_posterior(ctx);
    } else {
      rep = cmd_dist_check(ctx);
    }
    if (want_csv && !rep.csv) throw ConfigError("--csv: " + name + " has no CSV report");
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::logic_error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  const bool lines_only = name == "sample";
  std::string json_text;
  if (!lines_only) {
    json report = {{"command", name}, {"config", cfg}, {"seed", resolved_seed}, {"result", rep.body}};
    json_text = report.dump(2) + "\n";
  }
  try {
    if (!out_dir.empty()) {
      const std::filesystem::path dir(out_dir);
      std::filesystem::create_directories(dir);
      if (lines_only) {
        write_file(dir / "sample.jsonl", rep.lines);
      } else {
        write_file(dir / (name + ".json"), json_text);
        if (rep.csv) write_file(dir / (name + ".csv"), *rep.csv);
      }
    } else if (lines_only) {
      out << rep.lines;
    } else if (want_csv) {
      out << *rep.csv;
    } else {
      out << json_text;
    }
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return rep.failed ? 1 : 0;
}

}  // namespace polya::cli
