#include "polya/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <tuple>

#include "polya/parallel.hpp"
#include "polya/sampler.hpp"

namespace polya {

namespace {

constexpr double kLog2 = 0.69314718055994530942;

double campbell_term(const TestFunction& h, const Configuration& cfg) {
  double s = 0.0;
  for (const auto& a : cfg.atoms()) s += static_cast<double>(a.mult) * h.g(a.site);
  return s == 0.0 ? 0.0 : s * std::exp(-h.f.apply(cfg));
}

McEstimate campbell_with(const TestFunction& h, const ConfigurationSampler& sampler, std::int64_t n,
                         const RandomSource& rng) {
  auto acc = run_replicas<McAccumulator>(n, rng, [&](RandomSource& r, std::int64_t count, McAccumulator& a) {
    for (std::int64_t i = 0; i < count; ++i) a.add(campbell_term(h, sampler(r)));
  });
  return McEstimate::from(acc);
}

void require_supported(const TestFunction& h, const Window& b) {
  if (!h.g.supported_in(b) || !h.f.supported_in(b)) {
    throw std::invalid_argument("test function must be supported in the window");
  }
}

std::int64_t geometric_sample(double z, RandomSource& rng) {
  // P(G = j) = (1-z) z^{j-1}, j >= 1, by inversion.
  const double u = 1.0 - rng.uniform();
  return 1 + static_cast<std::int64_t>(std::floor(std::log(u) / std::log(z)));
}

}  // namespace

StepFunction::StepFunction(std::vector<StepPiece> pieces) : pieces_(std::move(pieces)) {
  for (const auto& p : pieces_) {
    if (!(p.level >= 0.0) || !std::isfinite(p.level)) {
      throw std::invalid_argument("step levels must be finite and nonnegative");
    }
  }
  std::sort(pieces_.begin(), pieces_.end(),
            [](const StepPiece& a, const StepPiece& b) { return a.window.lo() < b.window.lo(); });
  for (std::size_t i = 1; i < pieces_.size(); ++i) {
    if (pieces_[i - 1].window.overlaps(pieces_[i].window)) {
      throw std::invalid_argument("step pieces overlap");
    }
  }
}

StepFunction StepFunction::constant(const Window& b, double level) {
  return StepFunction({StepPiece{b, level}});
}

double StepFunction::operator()(double x) const {
  for (const auto& p : pieces_) {
    if (p.window.contains(x)) return p.level;
  }
  return 0.0;
}

double StepFunction::apply(const Configuration& cfg) const {
  double s = 0.0;
  for (const auto& a : cfg.atoms()) s += static_cast<double>(a.mult) * (*this)(a.site);
  return s;
}

bool StepFunction::supported_in(const Window& b) const {
  return std::all_of(pieces_.begin(), pieces_.end(),
                     [&](const StepPiece& p) { return p.level == 0.0 || b.contains(p.window); });
}

std::vector<double> StepFunction::breakpoints() const {
  std::vector<double> out;
  for (const auto& p : pieces_) {
    out.push_back(p.window.lo());
    out.push_back(p.window.hi());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double integral_g_exp_minus_f(const TestFunction& h, double w) {
  std::vector<double> cuts = h.g.breakpoints();
  const auto fc = h.f.breakpoints();
  cuts.insert(cuts.end(), fc.begin(), fc.end());
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  double total = 0.0;
  for (std::size_t i = 1; i < cuts.size(); ++i) {
    const double mid = 0.5 * (cuts[i - 1] + cuts[i]);
    total += (cuts[i] - cuts[i - 1]) * h.g(mid) * std::exp(-h.f(mid));
  }
  return w * total;
}

double laplace_closed_form(const StepFunction& f, const ModelParams& params) {
  params.validate();
  if (params.is_empty()) return 1.0;
  double exponent = 0.0;
  for (const auto& p : f.pieces()) {
    exponent += p.window.length() *
                std::log((1.0 - params.z * std::exp(-p.level)) / (1.0 - params.z));
  }
  return std::exp(-params.w * exponent);
}

McEstimate estimate_campbell(const TestFunction& h, const ModelParams& params, const Window& b,
                             std::int64_t n, const RandomSource& rng) {
  require_supported(h, b);
  const LevySampler sampler(params, b);
  return campbell_with(h, [&](RandomSource& r) { return sampler.sample(r); }, n, rng);
}

void judge(IdentityReport& report, double relative_cap) {
  report.relative_cap = relative_cap;
  report.difference = std::abs(report.lhs.mean - report.rhs.mean);
  report.pooled_se = std::sqrt(report.lhs.se * report.lhs.se + report.rhs.se * report.rhs.se);
  const double scale = std::max(std::abs(report.lhs.mean), std::abs(report.rhs.mean));
  if (scale == 0.0) {
    report.relative_error = 0.0;
    report.pass = true;
    return;
  }
  report.relative_error = report.difference / scale;
  report.pass = report.difference < 3.0 * report.pooled_se && report.relative_error < relative_cap;
  if (report.pooled_se == 0.0) report.pass = report.difference == 0.0;
}

IdentityReport check_integral_equation(const TestFunction& h, double z, double w,
                                       const ConfigurationSampler& sampler, std::int64_t n,
                                       const RandomSource& rng) {
  IdentityReport report;
  report.name = "integral_equation";
  report.lhs = campbell_with(h, sampler, n, rng.split(0));
  // z [ int g e^{-f} drho + sum_atoms m g(x) e^{-f(x)} ] e^{-mu(f)}
  const double ground = integral_g_exp_minus_f(h, w);
  auto acc = run_replicas<McAccumulator>(n, rng.split(1), [&](RandomSource& r, std::int64_t count, McAccumulator& a) {
    for (std::int64_t i = 0; i < count; ++i) {
      const Configuration cfg = sampler(r);
      double s = ground;
      for (const auto& atom : cfg.atoms()) {
        s += static_cast<double>(atom.mult) * h.g(atom.site) * std::exp(-h.f(atom.site));
      }
      a.add(z * s * std::exp(-h.f.apply(cfg)));
    }
  });
  report.rhs = McEstimate::from(acc);
  judge(report, 0.02);
  return report;
}

IdentityReport check_integral_equation(const TestFunction& h, const ModelParams& params,
                                       const Window& b, std::int64_t n, const RandomSource& rng) {
  require_supported(h, b);
  const LevySampler sampler(params, b);
  return check_integral_equation(
      h, params.z, params.w, [&](RandomSource& r) { return sampler.sample(r); }, n, rng);
}

Configuration sample_poisson_control(const ModelParams& params, const Window& b, RandomSource& rng) {
  params.validate();
  if (params.is_empty()) return {};
  const double mean = params.z / (1.0 - params.z) * params.mass(b);
  std::poisson_distribution<std::int64_t> count(mean);
  const std::int64_t n = count(rng.engine());
  std::vector<Atom> atoms;
  atoms.reserve(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) atoms.push_back(Atom{rng.uniform(b), 1});
  return Configuration(std::move(atoms));
}

IdentityReport check_palm(const TestFunction& h, const ModelParams& params, const Window& b,
                          std::int64_t n, const RandomSource& rng) {
  require_supported(h, b);
  const LevySampler sampler(params, b);
  IdentityReport report;
  report.name = "palm";
  report.lhs = campbell_with(h, [&](RandomSource& r) { return sampler.sample(r); }, n, rng.split(0));
  if (!params.is_empty()) {
    const double intensity = params.z / (1.0 - params.z) * params.mass(b);
    auto acc = run_replicas<McAccumulator>(n, rng.split(1), [&](RandomSource& r, std::int64_t count, McAccumulator& a) {
      for (std::int64_t i = 0; i < count; ++i) {
        const Configuration cfg = sampler.sample(r);
        const double x = r.uniform(b);
        const auto g_mult = geometric_sample(params.z, r);
        const double mu_f = h.f.apply(cfg) + static_cast<double>(g_mult) * h.f(x);
        a.add(intensity * h.g(x) * std::exp(-mu_f));
      }
    });
    report.rhs = McEstimate::from(acc);
  }
  judge(report, 0.02);
  return report;
}

IdentityReport check_laplace(const StepFunction& f, const ModelParams& params, const Window& b,
                             std::int64_t n, const RandomSource& rng) {
  if (!f.supported_in(b)) throw std::invalid_argument("test function must be supported in the window");
  const LevySampler sampler(params, b);
  IdentityReport report;
  report.name = "laplace";
  auto acc = run_replicas<McAccumulator>(n, rng, [&](RandomSource& r, std::int64_t count, McAccumulator& a) {
    for (std::int64_t i = 0; i < count; ++i) a.add(std::exp(-f.apply(sampler.sample(r))));
  });
  report.lhs = McEstimate::from(acc);
  report.rhs = McEstimate{laplace_closed_form(f, params), 0.0, 0};
  judge(report, 0.01);
  return report;
}

std::vector<GridPoint> default_grid() {
  std::vector<GridPoint> grid;
  for (double z : {0.3, 0.5, 0.7}) {
    for (double rho : {0.5, 1.0, 2.0}) grid.push_back({z, rho});
  }
  return grid;
}

TestFunction standard_test_function(const Window& b) {
  const double mid = 0.5 * (b.lo() + b.hi());
  const Window left(b.lo(), mid);
  const Window right(mid, b.hi());
  return TestFunction{StepFunction({{left, 1.0}, {right, 2.0}}),
                      StepFunction({{left, kLog2}, {right, 0.5}})};
}

bool VerifyReport::all_pass() const {
  return !negative_control.pass &&
         std::all_of(checks.begin(), checks.end(), [](const IdentityReport& r) { return r.pass; });
}

VerifyReport verify_grid(const std::vector<GridPoint>& grid, std::int64_t n, const RandomSource& rng) {
  VerifyReport report;
  report.grid = grid;
  std::uint64_t stream = 0;
  for (const auto& point : grid) {
    const Window b(0.0, point.rho_mass);
    const ModelParams params{point.z, 1.0};
    const TestFunction h = standard_test_function(b);
    report.checks.push_back(check_integral_equation(h, params, b, n, rng.split(stream++)));
    report.checks.push_back(check_palm(h, params, b, n, rng.split(stream++)));
    report.checks.push_back(check_laplace(h.f, params, b, n, rng.split(stream++)));
  }
  const Window b(0.0, 2.0);
  const ModelParams control{0.5, 1.0};
  report.negative_control = check_integral_equation(
      standard_test_function(b), control.z, control.w,
      [&](RandomSource& r) { return sample_poisson_control(control, b, r); }, n, rng.split(stream++));
  report.negative_control.name = "integral_equation_poisson_control";
  return report;
}

bool DistCheckReport::pass(double alpha) const {
  return zeta_negbin.p_value > alpha && xi_poisson.p_value > alpha &&
         multiplicity_logarithmic.p_value > alpha && levy_vs_urn.p_value > alpha;
}

namespace {

using JointKey = std::tuple<std::int64_t, std::int64_t, std::int64_t>;

struct DistAccumulator {
  CountHistogram zeta;
  CountHistogram xi;
  CountHistogram mult;
  std::map<JointKey, std::int64_t> levy_joint;
  std::map<JointKey, std::int64_t> urn_joint;

  void merge(const DistAccumulator& o) {
    zeta.merge(o.zeta);
    xi.merge(o.xi);
    mult.merge(o.mult);
    for (const auto& [k, c] : o.levy_joint) levy_joint[k] += c;
    for (const auto& [k, c] : o.urn_joint) urn_joint[k] += c;
  }
};

JointKey joint_key(const Configuration& cfg) {
  std::int64_t z = 0, singles = 0;
  for (const auto& a : cfg.atoms()) {
    z += a.mult;
    if (a.mult == 1) ++singles;
  }
  return {static_cast<std::int64_t>(cfg.size()), z, singles};
}

}  // namespace

DistCheckReport dist_check(const GridPoint& point, std::int64_t n, const RandomSource& rng) {
  const Window b(0.0, point.rho_mass);
  const ModelParams params{point.z, 1.0};
  const LevySampler levy(params, b);
  auto acc = run_replicas<DistAccumulator>(n, rng, [&](RandomSource& r, std::int64_t count, DistAccumulator& a) {
    for (std::int64_t i = 0; i < count; ++i) {
      const Configuration cfg = levy.sample(r);
      const JointKey key = joint_key(cfg);
      a.xi.add(std::get<0>(key));
      a.zeta.add(std::get<1>(key));
      for (const auto& atom : cfg.atoms()) a.mult.add(atom.mult);
      ++a.levy_joint[key];
      ++a.urn_joint[joint_key(sample_urn(params, b, r))];
    }
  });
  DistCheckReport report;
  report.point = point;
  report.n = n;
  const double rho = point.rho_mass;
  const double z = point.z;
  report.zeta_negbin = chi_square_gof(acc.zeta, [&](std::int64_t m) { return negbin_pmf(rho, z, m); });
  const double xi_mean = tau_total_mass(z) * rho;
  report.xi_poisson = chi_square_gof(acc.xi, [&](std::int64_t k) { return poisson_pmf(xi_mean, k); });
  report.multiplicity_logarithmic =
      chi_square_gof(acc.mult, [&](std::int64_t j) { return logarithmic_pmf(z, j); }, 1);
  report.levy_vs_urn = chi_square_two_sample(acc.levy_joint, acc.urn_joint);
  return report;
}

ChiSquareResult profile_gof(const std::map<OccupationProfile, std::int64_t>& observed,
                            const PartitionLaw& law) {
  std::vector<std::int64_t> counts;
  std::vector<double> prob;
  std::int64_t matched = 0;
  std::int64_t total = 0;
  for (const auto& [g, c] : observed) total += c;
  for (const auto& [g, p] : law.support()) {
    auto it = observed.find(g);
    const std::int64_t c = it == observed.end() ? 0 : it->second;
    counts.push_back(c);
    prob.push_back(static_cast<double>(p));
    matched += c;
  }
  if (matched != total) {
    ChiSquareResult bad;
    bad.statistic = std::numeric_limits<double>::infinity();
    bad.p_value = 0.0;
    bad.cells = law.support().size();
    bad.dof = static_cast<int>(bad.cells) - 1;
    return bad;
  }
  return chi_square_gof(counts, prob);
}

EnsembleCheck ensemble_gof(const EnsembleCondition& cond, const ModelParams& params, std::int64_t n,
                           const RandomSource& rng) {
  cond.validate();
  params.validate();
  EnsembleCheck out;
  out.n = n;
  if (cond.kind == EnsembleKind::OccupiedSites) {
    out.multiplicities = run_replicas<CountHistogram>(n, rng, [&](RandomSource& r, std::int64_t count, CountHistogram& h) {
      for (std::int64_t i = 0; i < count; ++i) {
        const Configuration cfg = kernel_apply(cond, {}, params, r);
        for (const auto& a : cfg.atoms()) h.add(a.mult);
      }
    });
    out.chi = chi_square_gof(out.multiplicities, [&](std::int64_t j) { return logarithmic_pmf(params.z, j); }, 1);
    return out;
  }
  if (cond.m > kPartitionBound) throw std::length_error("exact law needs m within the enumeration bound");
  const int m = static_cast<int>(cond.m);
  const PartitionLaw law = cond.kind == EnsembleKind::TotalHeight
                               ? partition_law_total_height(m, BigRatio(params.mass(cond.window)))
                               : partition_law_size_height(m, static_cast<int>(cond.k));
  struct ProfileCounts {
    std::map<OccupationProfile, std::int64_t> counts;
    void merge(const ProfileCounts& o) {
      for (const auto& [g, c] : o.counts) counts[g] += c;
    }
  };
  std::optional<SizeHeightSampler> size_height;
  if (cond.kind == EnsembleKind::SizeAndHeight) size_height.emplace(cond.m, cond.k);
  auto acc = run_replicas<ProfileCounts>(n, rng, [&](RandomSource& r, std::int64_t count, ProfileCounts& pc) {
    for (std::int64_t i = 0; i < count; ++i) {
      const Configuration cfg = size_height ? size_height->sample(cond.window, r)
                                            : kernel_apply(cond, {}, params, r);
      ++pc.counts[occupation_profile(cfg, cond.window)];
    }
  });
  out.profiles = std::move(acc.counts);
  out.chi = profile_gof(out.profiles, law);
  return out;
}

}  // namespace polya
