// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance               run every criterion
//   acceptance --criterion N run criterion N only (exit 1 if it fails)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "polya/cli.hpp"
#include "polya/combinatorics.hpp"
#include "polya/diagnostics.hpp"
#include "polya/ensembles.hpp"
#include "polya/inference.hpp"
#include "polya/parallel.hpp"
#include "polya/sampler.hpp"
#include "polya/stats.hpp"

using namespace polya;

namespace {

constexpr std::uint64_t kSeed = 20261015;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x, int precision = 4) {
  std::ostringstream os;
  os << std::setprecision(precision) << x;
  return os.str();
}

// Permutation counts by cycle type for m elements.
std::map<OccupationProfile, std::int64_t> cycle_types(int m) {
  std::vector<int> perm(static_cast<std::size_t>(m));
  std::iota(perm.begin(), perm.end(), 0);
  std::map<OccupationProfile, std::int64_t> counts;
  do {
    std::vector<bool> seen(perm.size(), false);
    OccupationProfile type;
    for (int s = 0; s < m; ++s) {
      if (seen[s]) continue;
      int len = 0;
      for (int i = s; !seen[i]; i = perm[i]) {
        seen[i] = true;
        ++len;
      }
      type.add(len);
    }
    ++counts[type];
  } while (std::next_permutation(perm.begin(), perm.end()));
  return counts;
}

Outcome criterion1() {
  int mismatches = 0;
  const AlphaTable alpha = alpha_recursion(8);
  for (int m = 1; m <= 8; ++m) {
    const auto counts = cycle_types(m);
    if (alpha[m].size() != counts.size()) ++mismatches;
    std::map<int, std::int64_t> by_cycles;
    for (const auto& [type, count] : counts) {
      const auto it = alpha[m].find(type);
      if (it == alpha[m].end() || it->second != BigRatio(count)) ++mismatches;
      if (BigRatio(factorial(m)) / cycle_weight(type) != BigRatio(count)) ++mismatches;
      by_cycles[static_cast<int>(type.block_count())] += count;
    }
    for (int k = 1; k <= m; ++k) {
      if (stirling_cycle(m, k) != BigInt(by_cycles[k])) ++mismatches;
    }
    for (const BigRatio& x : {BigRatio(1, 2), BigRatio(2), BigRatio(7, 3)}) {
      BigRatio lhs = 0;
      for (int k = 1; k <= m; ++k) {
        BigRatio inner = 0;
        for (const auto& g : enumerate_partitions(m, k)) inner += BigRatio(factorial(m)) / cycle_weight(g);
        lhs += ratio_pow(x, static_cast<unsigned>(k)) * inner;
      }
      BigRatio product = 1;
      for (int i = 0; i < m; ++i) product *= x + BigRatio(i);
      if (lhs != product || rising_factorial(x, m) != product) ++mismatches;
    }
  }
  return {mismatches == 0, std::to_string(mismatches) + " mismatches over m <= 8"};
}

// exp of a power series with zero constant term, exact.
std::vector<BigRatio> exp_series(const std::vector<BigRatio>& a) {
  std::vector<BigRatio> b(a.size(), BigRatio(0));
  b[0] = 1;
  for (std::size_t n = 1; n < a.size(); ++n) {
    BigRatio s = 0;
    for (std::size_t k = 1; k <= n; ++k) s += BigRatio(static_cast<long>(k)) * a[k] * b[n - k];
    b[n] = s / BigRatio(static_cast<long>(n));
  }
  return b;
}

Outcome criterion2() {
  const int degree = 6;
  int cases = 0, failures = 0;
  for (const BigRatio& z : {BigRatio(1, 3), BigRatio(1, 2), BigRatio(4, 5)}) {
    for (const BigRatio& rho : {BigRatio(1, 2), BigRatio(1), BigRatio(5, 2)}) {
      for (const BigRatio& decay : {BigRatio(1), BigRatio(1, 2), BigRatio(3, 7)}) {
        ++cases;
        const auto report = series_identity_check(z, rho, decay, degree);
        // Coefficient of z^m: binom(rho + m - 1, m) decay^m on the left,
        // [x^m] exp(rho sum_i (decay x)^i / i) on the right.
        std::vector<BigRatio> log_coeffs(degree + 1, BigRatio(0));
        for (int i = 1; i <= degree; ++i) log_coeffs[i] = rho * ratio_pow(decay, i) / BigRatio(i);
        const auto rhs = exp_series(log_coeffs);
        BigRatio binom = 1;
        bool ok = report.agrees();
        for (int m = 0; m <= degree; ++m) {
          if (m > 0) binom *= (rho + BigRatio(m - 1)) / BigRatio(m);
          ok = ok && report.lhs_coefficients[m] == binom * ratio_pow(decay, m) &&
               report.rhs_coefficients[m] == rhs[m];
        }
        failures += ok ? 0 : 1;
      }
    }
  }
  return {failures == 0, std::to_string(cases - failures) + "/" + std::to_string(cases) +
                             " parameter sets agree to degree 6"};
}

Outcome criterion3() {
  const RandomSource rng(kSeed);
  const auto grid = default_grid();
  double min_p = 1.0;
  int failures = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto rep = dist_check(grid[i], 100000, rng.split(i));
    for (double p : {rep.zeta_negbin.p_value, rep.xi_poisson.p_value, rep.multiplicity_logarithmic.p_value,
                     rep.levy_vs_urn.p_value}) {
      min_p = std::min(min_p, p);
      failures += p > 0.01 ? 0 : 1;
    }
  }
  return {failures == 0, std::to_string(failures) + " of " + std::to_string(4 * grid.size()) +
                             " tests with p <= 0.01, min p " + fmt(min_p)};
}

Outcome criterion4() {
  const auto rep = verify_grid(default_grid(), 1000000, RandomSource(kSeed).split(4));
  int passed = 0;
  double worst = 0.0;
  for (const auto& c : rep.checks) {
    passed += c.pass ? 1 : 0;
    worst = std::max(worst, c.relative_error / c.relative_cap);
  }
  std::string detail = std::to_string(passed) + "/" + std::to_string(rep.checks.size()) +
                       " identity checks pass, worst relative error " + fmt(worst, 3) +
                       " of cap, Poisson control " + (rep.negative_control.pass ? "passes" : "fails") +
                       " (relative error " + fmt(rep.negative_control.relative_error, 3) + ")";
  return {rep.all_pass(), detail};
}

struct ProfileCounts {
  std::map<OccupationProfile, std::int64_t> counts;
  void merge(const ProfileCounts& o) {
    for (const auto& [g, c] : o.counts) counts[g] += c;
  }
};

// Rejection oracle: independent Poisson(rho z^j / j) site counts N_j for
// j <= m, kept when sum j N_j = m (and sum N_j = k if given). Counts are
// drawn by inversion; a draw is abandoned as soon as the event is out of reach.
ProfileCounts rejection_oracle(int m, std::optional<int> k, double z, double rho, std::int64_t accepted,
                               const RandomSource& rng) {
  // cdf[j - 1][c] = P(N_j <= c) for c <= m / j; larger counts overshoot m.
  std::vector<std::vector<double>> cdf(static_cast<std::size_t>(m));
  for (int j = 1; j <= m; ++j) {
    const double lambda = rho * std::pow(z, j) / j;
    double term = std::exp(-lambda), acc = 0.0;
    for (int c = 0; c <= m / j; ++c) {
      acc += term;
      cdf[j - 1].push_back(acc);
      term *= lambda / (c + 1);
    }
  }
  auto reachable = [&](int j, std::int64_t mass, std::int64_t blocks) {
    const std::int64_t left = m - mass;
    if (left < 0) return false;
    if (!k) return left == 0 || left >= j + 1;
    const std::int64_t parts = *k - blocks;
    if (parts < 0) return false;
    if (parts == 0) return left == 0;
    return (j + 1) * parts <= left && left <= static_cast<std::int64_t>(m) * parts;
  };
  return run_replicas<ProfileCounts>(accepted, rng, [&](RandomSource& r, std::int64_t n, ProfileCounts& acc) {
    std::vector<std::int64_t> drawn(static_cast<std::size_t>(m) + 1, 0);
    for (std::int64_t got = 0; got < n;) {
      std::int64_t mass = 0, blocks = 0;
      bool alive = true;
      for (int j = 1; j <= m && alive; ++j) {
        const auto& table = cdf[j - 1];
        const auto c = static_cast<std::int64_t>(std::upper_bound(table.begin(), table.end(), r.uniform()) -
                                                 table.begin());
        if (c == static_cast<std::int64_t>(table.size())) break;
        drawn[j] = c;
        mass += j * c;
        blocks += c;
        alive = reachable(j, mass, blocks);
      }
      if (!alive || mass != m || (k && blocks != *k)) continue;
      OccupationProfile g;
      for (int j = 1; j <= m; ++j) {
        if (drawn[j] > 0) g.add(j, drawn[j]);
      }
      ++acc.counts[g];
      ++got;
    }
  });
}

ProfileCounts kernel_profiles(const EnsembleCondition& cond, const ModelParams& params, std::int64_t n,
                              const RandomSource& rng) {
  return run_replicas<ProfileCounts>(n, rng, [&](RandomSource& r, std::int64_t count, ProfileCounts& acc) {
    for (std::int64_t i = 0; i < count; ++i) {
      ++acc.counts[occupation_profile(kernel_apply(cond, Configuration(), params, r), cond.window)];
    }
  });
}

Outcome criterion5() {
  const RandomSource rng(kSeed);
  RandomSource sub = rng.split(5);
  std::uint64_t stream = 0;
  int tests = 0, failures = 0, support_errors = 0;
  double min_p = 1.0;
  for (double z : {0.3, 0.5}) {
    for (double rho : {0.5, 1.0, 2.0}) {
      const Window b(0.0, rho);
      const ModelParams params{z, 1.0};
      for (int m = 1; m <= 6; ++m) {
        for (int k = 0; k <= m; ++k) {
          const EnsembleCondition cond =
              k == 0 ? EnsembleCondition::total_height(m, b) : EnsembleCondition::size_and_height(m, k, b);
          const std::optional<int> kk = k == 0 ? std::nullopt : std::optional<int>(k);
          const auto kernel = kernel_profiles(cond, params, 4000, sub.split(stream++));
          const auto allowed = k == 0 ? enumerate_partitions(m) : enumerate_partitions(m, k);
          for (const auto& [g, c] : kernel.counts) {
            if (std::find(allowed.begin(), allowed.end(), g) == allowed.end()) ++support_errors;
          }
          if (allowed.size() == 1) continue;
          const auto oracle = rejection_oracle(m, kk, z, rho, 2000, sub.split(stream++));
          const auto chi = chi_square_two_sample(kernel.counts, oracle.counts);
          ++tests;
          min_p = std::min(min_p, chi.p_value);
          failures += chi.p_value > 0.01 ? 0 : 1;
        }
      }
    }
  }

  bool exact = true;
  for (int m = 1; m <= 6; ++m) {
    for (const BigRatio& rho : {BigRatio(1, 2), BigRatio(1), BigRatio(2), BigRatio(50)}) {
      exact = exact && partition_law_total_height(m, rho).total() == BigRatio(1);
      for (int k = 1; k <= m; ++k) {
        exact = exact && conditional_law_from_profile_law(m, k, rho, BigRatio(1, 3)) == partition_law_size_height(m, k);
      }
    }
    for (int k = 1; k <= m; ++k) exact = exact && partition_law_size_height(m, k).total() == BigRatio(1);
  }

  // Frequencies of two exact values.
  const std::int64_t n = 100000;
  auto frequency = [&](const EnsembleCondition& cond, const OccupationProfile& target, std::uint64_t s) {
    const auto counts = kernel_profiles(cond, {0.5, 1.0}, n, sub.split(s));
    const auto it = counts.counts.find(target);
    return it == counts.counts.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(n);
  };
  const Window unit(0.0, 1.0);
  const double f1 = frequency(EnsembleCondition::size_and_height(4, 2, unit), OccupationProfile{{2, 2}}, stream++);
  const double f2 = frequency(EnsembleCondition::total_height(3, unit), OccupationProfile{{1, 1}, {2, 1}}, stream++);
  const double p1 = 3.0 / 11.0, p2 = 0.5;
  const bool freq_ok = std::abs(f1 - p1) < 3.0 * std::sqrt(p1 * (1 - p1) / n) &&
                       std::abs(f2 - p2) < 3.0 * std::sqrt(p2 * (1 - p2) / n);

  const bool pass = failures == 0 && support_errors == 0 && exact && freq_ok;
  std::string detail = std::to_string(failures) + " of " + std::to_string(tests) +
                       " kernel-vs-rejection tests with p <= 0.01 (min p " + fmt(min_p) + "), " +
                       std::to_string(support_errors) + " off-support draws, exact laws " +
                       (exact ? "ok" : "WRONG") + ", P(2:2 | 4, 2) freq " + fmt(f1, 5) + " vs " + fmt(p1, 5) +
                       ", P(1:1 2:1 | 3) freq " + fmt(f2, 5) + " vs 0.5";
  return {pass, detail};
}

Outcome criterion6() {
  const RandomSource rng(kSeed);
  const ModelParams truth{0.5, 1.0};
  const std::int64_t replicas = 200;
  const double length = 500.0;

  RecoveryReport::Tolerance sites_tol, height_tol, both_tol;
  sites_tol.w_rel = 0.05;
  height_tol.z_abs = 0.05;
  both_tol.z_rel = 0.05;
  both_tol.w_rel = 0.05;
  const double sites =
      boundary_recovery_experiment(EnsembleKind::OccupiedSites, truth, length, replicas, rng.split(60))
          .fraction_within(sites_tol);
  const double height =
      boundary_recovery_experiment(EnsembleKind::TotalHeight, truth, length, replicas, rng.split(61))
          .fraction_within(height_tol);
  const double both =
      boundary_recovery_experiment(EnsembleKind::SizeAndHeight, truth, length, replicas, rng.split(62))
          .fraction_within(both_tol);
  const ZW inv = recover_zw_size_height(1.0, std::log(2.0));
  const bool inversion = std::abs(inv.z - 0.5) < 1e-10 && std::abs(inv.w - 1.0) < 1e-10;

  const bool pass = sites >= 0.95 && height >= 0.95 && both >= 0.95 && inversion;
  std::string detail = "within tolerance: occupied-sites " + fmt(sites, 3) + ", total-height " +
                       fmt(height, 3) + ", size-and-height " + fmt(both, 3) + " (need 0.95); (1, log 2) -> (" +
                       fmt(inv.z, 12) + ", " + fmt(inv.w, 12) + ")";
  return {pass, detail};
}

Outcome criterion7() {
  constexpr int J = 200;
  double worst = 0.0;
  for (double z : {0.2, 0.5, 0.8}) {
    for (double w : {0.5, 1.0, 2.0}) {
      const auto uv = forward_map(z, w);
      const auto numeric = numeric_minimizer(uv[0], uv[1], 0.5, J);
      worst = std::max(worst, (numeric.kappa.values - analytic_minimizer(uv[0], uv[1], J).values).lpNorm<1>());
    }
  }
  for (double u : {0.25, 1.0, 3.0}) {
    const auto numeric = numeric_minimizer(u, std::nullopt, 0.5, J);
    worst = std::max(worst, (numeric.kappa.values - analytic_minimizer(u, std::nullopt, J).values).lpNorm<1>());
  }
  double ref_shift = 0.0;
  for (const std::optional<double>& v : {std::optional<double>(0.7), std::optional<double>()}) {
    const auto base = numeric_minimizer(1.2, v, 0.5, J);
    for (double z_ref : {0.3, 0.7}) {
      ref_shift = std::max(ref_shift, (numeric_minimizer(1.2, v, z_ref, J).kappa.values - base.kappa.values).lpNorm<1>());
    }
  }
  const RandomSource rng = RandomSource(kSeed).split(7);
  const auto tv50 = total_height_profile_distance(1.0, 50.0, 2000, rng.split(0));
  const auto tv200 = total_height_profile_distance(1.0, 200.0, 2000, rng.split(1));

  const bool pass = worst < 1e-8 && ref_shift < 1e-8 && tv200.mean < tv50.mean;
  std::string detail = "max L1 numeric vs analytic " + fmt(worst, 3) + ", max L1 across z_ref " +
                       fmt(ref_shift, 3) + ", mean TV at rho 50: " + fmt(tv50.mean) + " +- " + fmt(tv50.se, 2) +
                       ", at rho 200: " + fmt(tv200.mean) + " +- " + fmt(tv200.se, 2);
  return {pass, detail};
}

Outcome criterion8() {
  const RandomSource rng = RandomSource(kSeed).split(8);
  const DiscretePrior over_w{{{0.5, 1.0}, 0.5}, {{0.5, 2.0}, 0.5}};
  const DiscretePrior over_z{{{0.3, 1.0}, 0.5}, {{0.6, 1.0}, 0.5}};
  const auto w_rep = posterior_concentration_experiment(over_w, 200, 1.0, {200}, 200, rng.split(0));
  const auto z_rep = posterior_concentration_experiment(over_z, 200, 1.0, {200}, 200, rng.split(1));
  const double mw = w_rep.median_mass_on_truth.back();
  const double mz = z_rep.median_mass_on_truth.back();
  return {mw > 0.99 && mz > 0.99,
          "median posterior mass on truth: prior over w " + fmt(mw, 8) + ", prior over z " + fmt(mz, 8)};
}

Outcome criterion9() {
  const auto path = std::filesystem::temp_directory_path() / "polya_acceptance_c9.json";
  std::ofstream(path) << R"({"chain": {"K": 40}, "replicas": 20,
    "ensemble": {"samples": 20000},
    "verify": {"n": 20000}, "dist_check": {"n": 20000},
    "posterior": {"checkpoints": [10, 40]}})";
  const std::vector<std::vector<std::string>> commands{
      {"sample"},   {"selfcheck-combinatorics"}, {"ensemble", "--kind", "both", "--m", "5", "--k", "2"},
      {"boundary"}, {"ldp", "--u", "1.3", "--v", "0.8"}, {"verify"}, {"posterior"}, {"dist-check"}};
  int identical = 0;
  std::string differing;
  for (const auto& cmd : commands) {
    std::vector<std::string> args{"--config", path.string(), "--seed", "4242", "--threads", "0"};
    args.insert(args.end(), cmd.begin(), cmd.end());
    std::ostringstream out1, out2, err;
    const int c1 = cli::run(args, out1, err);
    const int c2 = cli::run(args, out2, err);
    if (c1 == c2 && out1.str() == out2.str() && !out1.str().empty()) {
      ++identical;
    } else {
      differing += " " + cmd.front();
    }
  }
  std::filesystem::remove(path);
  return {identical == static_cast<int>(commands.size()),
          std::to_string(identical) + "/" + std::to_string(commands.size()) + " commands byte-identical" +
              (differing.empty() ? "" : ", differing:" + differing)};
}

struct Criterion {
  const char* title;
  double time_limit_s;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app("Acceptance criteria");
  int only = 0;
  app.add_option("--criterion", only, "Run a single criterion (1-9)")->check(CLI::Range(1, 9));
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria{
      {"combinatorics exactness", 10.0, criterion1},
      {"series identity", 5.0, criterion2},
      {"distributional laws", 120.0, criterion3},
      {"identity checks", 600.0, criterion4},
      {"ensemble kernels", 0.0, criterion5},
      {"boundary recovery", 0.0, criterion6},
      {"rate-function minimizers", 0.0, criterion7},
      {"posterior concentration", 0.0, criterion8},
      {"reproducibility", 0.0, criterion9},
  };
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only != 0 && static_cast<int>(i) + 1 != only) continue;
    const auto& c = criteria[i];
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.time_limit_s > 0.0 && secs >= c.time_limit_s) {
      o.pass = false;
      o.detail += ", over the " + fmt(c.time_limit_s, 3) + " s limit";
    }
    all = all && o.pass;
    std::cout << "criterion " << i + 1 << " " << (o.pass ? "PASS" : "FAIL") << " [" << c.title << ", "
              << std::fixed << std::setprecision(1) << secs << " s] " << std::defaultfloat << o.detail
              << std::endl;
  }
  return all ? 0 : 1;
}
