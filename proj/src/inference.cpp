#include "polya/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "polya/parallel.hpp"

namespace polya {

namespace {

constexpr int kMaxNewtonIterations = 200;
constexpr double kInf = std::numeric_limits<double>::infinity();

void require_unit_interval(double z) {
  if (!(z > 0.0 && z < 1.0)) throw std::invalid_argument("z must lie in (0,1)");
}

void check_monotone_once() {
  static const bool monotone = mean_multiplicity_is_monotone();
  if (!monotone) throw std::logic_error("mean multiplicity is not monotone on the grid");
}

double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  const auto mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  double hi = values[mid];
  if (values.size() % 2 == 1) return hi;
  const double lo = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

struct ValueLists {
  std::vector<std::vector<double>> lists;

  void merge(const ValueLists& other) {
    if (lists.size() < other.lists.size()) lists.resize(other.lists.size());
    for (std::size_t i = 0; i < other.lists.size(); ++i) {
      lists[i].insert(lists[i].end(), other.lists[i].begin(), other.lists[i].end());
    }
  }
};

}  // namespace

double LimitStats::w_hat(double z) const {
  require_unit_interval(z);
  return static_cast<double>(xi) / (tau_total_mass(z) * rho_mass);
}

LimitStats limit_stats(const Configuration& cfg, const Window& b, const GroundIntensity& rho) {
  return LimitStats{rho.mass(b), zeta(cfg, b), xi(cfg, b)};
}

std::vector<LimitStats> limit_stats_along_chain(const Configuration& cfg, int K, double delta,
                                                const GroundIntensity& rho) {
  std::vector<LimitStats> out;
  out.reserve(static_cast<std::size_t>(std::max(K, 0)));
  for (int k = 1; k <= K; ++k) out.push_back(limit_stats(cfg, chain_window(k, delta), rho));
  return out;
}

Estimate recover_w_occupied(const LimitStats& stats, double z) {
  require_unit_interval(z);
  const double scale = tau_total_mass(z) * stats.rho_mass;
  return {static_cast<double>(stats.xi) / scale, std::sqrt(static_cast<double>(stats.xi)) / scale};
}

double recover_z_height(double u) {
  if (!(u >= 0.0) || std::isinf(u)) throw InfeasibleStatistics("total-height statistic u must be finite and >= 0");
  return u / (1.0 + u);
}

std::array<double, 2> forward_map(double z, double w) {
  require_unit_interval(z);
  return {w * z / (1.0 - z), w * tau_total_mass(z)};
}

double mean_multiplicity(double z) {
  require_unit_interval(z);
  return (z / (1.0 - z)) / tau_total_mass(z);
}

bool mean_multiplicity_is_monotone(int grid_points) {
  double previous = 1.0;
  for (int i = 1; i < grid_points; ++i) {
    const double g = mean_multiplicity(static_cast<double>(i) / grid_points);
    if (!(g > previous)) return false;
    previous = g;
  }
  return true;
}

ZW recover_zw_size_height(double u, double v) {
  if (u == 0.0 && v == 0.0) return {0.0, 0.0};
  if (!(u > v && v > 0.0) || std::isinf(u)) {
    std::ostringstream os;
    os << "infeasible size-and-height statistics (u=" << u << ", v=" << v << "): need u > v > 0";
    throw InfeasibleStatistics(os.str());
  }
  check_monotone_once();
  const double target = u / v;
  double lo = 0.0;
  double hi = 1.0;
  for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (mean_multiplicity(mid) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double z = 0.5 * (lo + hi);
  return {z, v / tau_total_mass(z)};
}

double RateMeasure::first_moment() const {
  double s = 0.0;
  for (int j = 1; j <= support(); ++j) s += j * values(j - 1);
  return s;
}

Eigen::VectorXd tau_vector(double z, int J) {
  require_unit_interval(z);
  Eigen::VectorXd tau(J);
  const double log_z = std::log(z);
  for (int j = 1; j <= J; ++j) tau(j - 1) = std::exp(j * log_z - std::log(static_cast<double>(j)));
  return tau;
}

double rate_function(const RateMeasure& kappa, double z) {
  require_unit_interval(z);
  const int J = kappa.support();
  const Eigen::VectorXd tau = tau_vector(z, J);
  double total = 0.0;
  for (int j = 0; j < J; ++j) {
    const double k = kappa.values(j);
    if (k < 0.0 || std::isnan(k)) throw std::invalid_argument("rate measure must be nonnegative");
    if (k == 0.0) {
      total += tau(j);
    } else if (tau(j) == 0.0) {
      return kInf;
    } else {
      total += std::max(0.0, k * std::log(k / tau(j)) - k + tau(j));
    }
  }
  // Beyond the support kappa vanishes: f = 0 contributes tau_z(j).
  const double log_z = std::log(z);
  for (int j = J + 1;; ++j) {
    const double t = std::exp(j * log_z - std::log(static_cast<double>(j)));
    total += t;
    if (t < 1e-18 * std::max(1.0, total)) break;
  }
  return total;
}

RateMeasure analytic_minimizer(double u, std::optional<double> v, int J) {
  if (J < 1) throw std::invalid_argument("support bound J must be >= 1");
  if (!(u >= 0.0)) throw InfeasibleStatistics("first moment u must be >= 0");
  double z = 0.0;
  double w = 1.0;
  if (v) {
    const ZW zw = recover_zw_size_height(u, *v);
    z = zw.z;
    w = zw.w;
  } else {
    z = recover_z_height(u);
  }
  if (z == 0.0) return RateMeasure(Eigen::VectorXd::Zero(J));
  return RateMeasure(w * tau_vector(z, J));
}

MinimizerResult numeric_minimizer(double u, std::optional<double> v, double z_ref, int J) {
  require_unit_interval(z_ref);
  if (J < 1) throw std::invalid_argument("support bound J must be >= 1");
  if (v) {
    if (u == 0.0 && *v == 0.0) {
      MinimizerResult zero{RateMeasure(Eigen::VectorXd::Zero(J))};
      zero.rate = rate_function(zero.kappa, z_ref);
      return zero;
    }
    if (!(u > *v && *v > 0.0)) throw InfeasibleStatistics("need u > v > 0 for the two-constraint problem");
    if (!(u < J * *v)) throw InfeasibleStatistics("first moment u exceeds J * v: infeasible on 1..J");
  } else {
    if (!(u >= 0.0)) throw InfeasibleStatistics("first moment u must be >= 0");
    if (u == 0.0) {
      MinimizerResult zero{RateMeasure(Eigen::VectorXd::Zero(J))};
      zero.rate = rate_function(zero.kappa, z_ref);
      return zero;
    }
  }
  const bool two = v.has_value();
  const double mass_target = two ? *v : 0.0;

  const Eigen::ArrayXd j = Eigen::ArrayXd::LinSpaced(J, 1.0, static_cast<double>(J));
  const Eigen::ArrayXd log_tau = j * std::log(z_ref) - j.log();
  auto kappa_of = [&](const Eigen::Vector2d& lam) -> Eigen::ArrayXd {
    return (log_tau + lam(0) * j + lam(1)).exp();
  };
  // Convex dual: F(lam) = sum_j kappa_j(lam) - lam_1 u - lam_2 v.
  auto dual = [&](const Eigen::Vector2d& lam) {
    return kappa_of(lam).sum() - lam(0) * u - lam(1) * mass_target;
  };

  auto residual = [&](const Eigen::Vector2d& lam) {
    const Eigen::ArrayXd kappa = kappa_of(lam);
    return Eigen::Vector2d((j * kappa).sum() - u, two ? kappa.sum() - mass_target : 0.0);
  };

  Eigen::Vector2d lam = Eigen::Vector2d::Zero();
  const double tol = 1e-13 * std::max(1.0, u);
  int iterations = 0;
  bool converged = false;
  for (; iterations < kMaxNewtonIterations; ++iterations) {
    const Eigen::ArrayXd kappa = kappa_of(lam);
    const Eigen::Vector2d grad = residual(lam);
    if (grad.lpNorm<Eigen::Infinity>() <= tol) {
      converged = true;
      break;
    }
    Eigen::Vector2d step = Eigen::Vector2d::Zero();
    if (two) {
      Eigen::Matrix2d hess;
      hess << (j * j * kappa).sum(), (j * kappa).sum(), (j * kappa).sum(), kappa.sum();
      step = -hess.ldlt().solve(grad);
    } else {
      step(0) = -grad(0) / (j * j * kappa).sum();
    }
    const double f0 = dual(lam);
    const double slope = grad.dot(step);
    const double grad_norm = grad.norm();
    double t = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
      const Eigen::Vector2d candidate = lam + t * step;
      const double f = dual(candidate);
      if (!std::isfinite(f)) continue;
      // Sufficient decrease in F, or in the residual norm.
      if (f <= f0 + 1e-4 * t * slope || residual(candidate).norm() <= (1.0 - 1e-4 * t) * grad_norm) {
        lam = candidate;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // Line search stalls only at round-off level; accept if the residual is tiny.
      converged = grad.lpNorm<Eigen::Infinity>() <= 1e3 * tol;
      break;
    }
  }
  if (!converged) {
    std::ostringstream os;
    os << "rate-function minimizer did not converge after " << iterations << " iterations";
    throw NumericError(os.str());
  }
  MinimizerResult result;
  result.kappa = RateMeasure(kappa_of(lam).matrix());
  result.rate = rate_function(result.kappa, z_ref);
  result.iterations = iterations;
  result.multipliers = {lam(0), lam(1)};
  return result;
}

McEstimate total_height_profile_distance(double u, double rho_mass, std::int64_t samples,
                                         const RandomSource& rng) {
  if (!(u > 0.0) || !(rho_mass > 0.0)) throw std::invalid_argument("need u > 0 and rho(B) > 0");
  const double m_real = u * rho_mass;
  const auto m = static_cast<std::int64_t>(std::llround(m_real));
  if (std::abs(m_real - static_cast<double>(m)) > 1e-9) {
    throw std::invalid_argument("u * rho(B) must be an integer point count");
  }
  const double z_u = recover_z_height(u);
  // Limit profile on 1..m plus its mass beyond m (gamma(j) = 0 there).
  const Eigen::VectorXd limit = tau_vector(z_u, static_cast<int>(m));
  double beyond = 0.0;
  for (std::int64_t jj = m + 1;; ++jj) {
    const double t = std::exp(static_cast<double>(jj) * std::log(z_u) - std::log(static_cast<double>(jj)));
    beyond += t;
    if (t < 1e-18) break;
  }
  const Window b(0.0, 1.0);
  auto acc = run_replicas<McAccumulator>(samples, rng, [&](RandomSource& r, std::int64_t n, McAccumulator& a) {
    for (std::int64_t i = 0; i < n; ++i) {
      const auto gamma = occupation_profile(sample_total_height(m, rho_mass, b, r), b);
      double l1 = beyond;
      for (std::int64_t jj = 1; jj <= m; ++jj) {
        l1 += std::abs(static_cast<double>(gamma[static_cast<int>(jj)]) / rho_mass - limit(jj - 1));
      }
      a.add(0.5 * l1);
    }
  });
  return McEstimate::from(acc);
}

std::vector<double> posterior_weights(const DiscretePrior& prior, std::int64_t zeta_count,
                                      std::int64_t xi_count, double rho_mass) {
  validate_prior(prior);
  if (!(rho_mass > 0.0)) throw std::invalid_argument("rho(B) must be > 0");
  std::vector<double> log_post(prior.size());
  for (std::size_t i = 0; i < prior.size(); ++i) {
    const auto& p = prior[i].params;
    double ll = 0.0;
    if (p.is_empty()) {
      ll = (zeta_count == 0) ? 0.0 : -kInf;
    } else {
      const double mass = p.w * rho_mass;
      ll = static_cast<double>(xi_count) * std::log(mass) + static_cast<double>(zeta_count) * std::log(p.z) +
           mass * std::log1p(-p.z);
    }
    log_post[i] = std::log(prior[i].weight) + ll;
  }
  const double top = *std::max_element(log_post.begin(), log_post.end());
  if (top == -kInf) throw std::domain_error("observation has zero likelihood under every prior atom");
  double total = 0.0;
  std::vector<double> post(prior.size());
  for (std::size_t i = 0; i < prior.size(); ++i) {
    post[i] = std::exp(log_post[i] - top);
    total += post[i];
  }
  for (auto& p : post) p /= total;
  return post;
}

PosteriorReport posterior_concentration_experiment(const DiscretePrior& prior, int K, double delta,
                                                   std::vector<int> checkpoints,
                                                   std::int64_t replicas, const RandomSource& rng) {
  validate_prior(prior);
  if (checkpoints.empty()) checkpoints.push_back(K);
  for (int c : checkpoints) {
    if (c < 1 || c > K) throw std::invalid_argument("posterior checkpoints must lie in 1..K");
  }
  const Window outer = chain_window(K, delta);
  ValueLists init;
  init.lists.resize(checkpoints.size());
  auto acc = run_replicas<ValueLists>(
      replicas, rng,
      [&](RandomSource& r, std::int64_t n, ValueLists& out) {
        for (std::int64_t i = 0; i < n; ++i) {
          const MixedSample s = sample_mixed(prior, outer, r);
          for (std::size_t c = 0; c < checkpoints.size(); ++c) {
            const Window b = chain_window(checkpoints[c], delta);
            const auto post = posterior_weights(prior, zeta(s.cfg, b), xi(s.cfg, b), b.length());
            out.lists[c].push_back(post[s.prior_index]);
          }
        }
      },
      init);
  PosteriorReport report;
  report.checkpoints = checkpoints;
  report.replicas = replicas;
  for (auto& list : acc.lists) {
    double sum = 0.0;
    for (double x : list) sum += x;
    report.mean_mass_on_truth.push_back(list.empty() ? 0.0 : sum / static_cast<double>(list.size()));
    report.median_mass_on_truth.push_back(median(list));
  }
  return report;
}

double RecoveryReport::fraction_within(const Tolerance& tol) const {
  if (z_hat.empty()) return 0.0;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < z_hat.size(); ++i) {
    bool pass = std::isfinite(z_hat[i]) && std::isfinite(w_hat[i]);
    if (pass && tol.z_abs) pass = std::abs(z_hat[i] - truth.z) <= *tol.z_abs;
    if (pass && tol.z_rel) pass = std::abs(z_hat[i] - truth.z) <= *tol.z_rel * truth.z;
    if (pass && tol.w_rel) pass = std::abs(w_hat[i] - truth.w) <= *tol.w_rel * truth.w;
    if (pass) ++ok;
  }
  return static_cast<double>(ok) / static_cast<double>(z_hat.size());
}

RecoveryReport boundary_recovery_experiment(EnsembleKind kind, const ModelParams& truth,
                                            double length, std::int64_t replicas,
                                            const RandomSource& rng) {
  truth.validate();
  if (truth.is_empty()) throw std::invalid_argument("recovery experiment needs a nonempty process");
  const Window b(0.0, length);
  const LevySampler sampler(truth, b);
  // Reference mass: the truth's rho(B) for total height, Lebesgue otherwise.
  const double reference_mass = kind == EnsembleKind::TotalHeight ? truth.w * length : length;

  ValueLists init;
  init.lists.resize(2);
  auto acc = run_replicas<ValueLists>(
      replicas, rng,
      [&](RandomSource& r, std::int64_t n, ValueLists& out) {
        for (std::int64_t i = 0; i < n; ++i) {
          const Configuration cfg = sampler.sample(r);
          const LimitStats stats{reference_mass, zeta(cfg, b), xi(cfg, b)};
          double z_hat = truth.z;
          double w_hat = truth.w;
          switch (kind) {
            case EnsembleKind::OccupiedSites:
              w_hat = recover_w_occupied(stats, truth.z).value;
              break;
            case EnsembleKind::TotalHeight:
              z_hat = recover_z_height(stats.u());
              break;
            case EnsembleKind::SizeAndHeight:
              try {
                const ZW zw = recover_zw_size_height(stats.u(), stats.v());
                z_hat = zw.z;
                w_hat = zw.w;
              } catch (const InfeasibleStatistics&) {
                z_hat = w_hat = std::numeric_limits<double>::quiet_NaN();
              }
              break;
          }
          out.lists[0].push_back(z_hat);
          out.lists[1].push_back(w_hat);
        }
      },
      init);
  RecoveryReport report;
  report.kind = kind;
  report.truth = truth;
  report.rho_mass = reference_mass;
  report.z_hat = std::move(acc.lists[0]);
  report.w_hat = std::move(acc.lists[1]);
  return report;
}

}  // namespace polya
