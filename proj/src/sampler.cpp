#include "polya/sampler.hpp"

#include <cmath>
#include <numeric>

namespace polya {

namespace {

void require_unit_interval(double z) {
  if (!(z > 0.0 && z < 1.0)) throw std::invalid_argument("z must lie in (0,1)");
}

// Below this value (1-z)^r is too small to start an inversion scan from m = 0.
constexpr double kInversionFloor = 1e-250;

}  // namespace

double poisson_pmf(double mean, std::int64_t n) {
  if (n < 0) return 0.0;
  if (mean == 0.0) return n == 0 ? 1.0 : 0.0;
  return std::exp(n * std::log(mean) - mean - std::lgamma(n + 1.0));
}

double negbin_pmf(double r, double z, std::int64_t m) {
  require_unit_interval(z);
  if (!(r > 0.0)) throw std::invalid_argument("negative binomial shape must be > 0");
  if (m < 0) return 0.0;
  // r^[m] / m! = Gamma(r+m) / (Gamma(r) m!)
  const double log_p = r * std::log1p(-z) + m * std::log(z) + std::lgamma(r + m) - std::lgamma(r) -
                       std::lgamma(m + 1.0);
  return std::exp(log_p);
}

double logarithmic_pmf(double z, std::int64_t j) {
  require_unit_interval(z);
  if (j < 1) return 0.0;
  return std::exp(j * std::log(z) - std::log(static_cast<double>(j))) / tau_total_mass(z);
}

LogarithmicDist::LogarithmicDist(double z) : z_(z), normalizer_(0.0) {
  require_unit_interval(z);
  normalizer_ = tau_total_mass(z);
}

double LogarithmicDist::mean() const { return (z_ / (1.0 - z_)) / normalizer_; }

std::int64_t LogarithmicDist::sample(RandomSource& rng) const {
  const double u = rng.uniform();
  double p = z_ / normalizer_;
  double cumulative = p;
  std::int64_t j = 1;
  while (u >= cumulative) {
    p *= z_ * static_cast<double>(j) / static_cast<double>(j + 1);
    ++j;
    cumulative += p;
    if (p < 1e-300) break;  // cumulative stalled just below 1
  }
  return j;
}

std::int64_t logarithmic_sample(double z, RandomSource& rng) {
  return LogarithmicDist(z).sample(rng);
}

NegBinomialDist::NegBinomialDist(double r, double z) : r_(r), z_(z) {
  require_unit_interval(z);
  if (!(r > 0.0)) throw std::invalid_argument("negative binomial shape must be > 0");
}

std::int64_t NegBinomialDist::sample(RandomSource& rng) const {
  double p = std::exp(r_ * std::log1p(-z_));
  if (p < kInversionFloor) {
    // Large shape: gamma-Poisson mixture, exact in law.
    std::gamma_distribution<double> gamma(r_, z_ / (1.0 - z_));
    std::poisson_distribution<std::int64_t> poisson(gamma(rng.engine()));
    return poisson(rng.engine());
  }
  const double u = rng.uniform();
  double cumulative = p;
  std::int64_t m = 0;
  while (u >= cumulative) {
    p *= z_ * (r_ + static_cast<double>(m)) / static_cast<double>(m + 1);
    ++m;
    cumulative += p;
    if (p < 1e-300 && m > mean()) break;
  }
  return m;
}

int levy_truncation(double z, double rho_mass, double tail) {
  require_unit_interval(z);
  int J = 1;
  while (rho_mass * std::pow(z, J + 1) / ((J + 1) * (1.0 - z)) >= tail) ++J;
  return J;
}

LevySampler::LevySampler(const ModelParams& params, const Window& window) : window_(window) {
  params.validate();
  if (params.is_empty()) return;
  const double rho_mass = params.mass(window);
  const int J = levy_truncation(params.z, rho_mass);
  means_.reserve(J);
  poisson_params_.reserve(J);
  for (int j = 1; j <= J; ++j) {
    const double mean = rho_mass * std::exp(j * std::log(params.z)) / j;
    means_.push_back(mean);
    poisson_params_.emplace_back(mean);
  }
}

Configuration LevySampler::sample(RandomSource& rng) const {
  std::vector<Atom> atoms;
  std::poisson_distribution<std::int64_t> poisson;
  for (std::size_t idx = 0; idx < poisson_params_.size(); ++idx) {
    const std::int64_t count = poisson(rng.engine(), poisson_params_[idx]);
    for (std::int64_t s = 0; s < count; ++s) {
      atoms.push_back(Atom{rng.uniform(window_), static_cast<std::int64_t>(idx + 1)});
    }
  }
  return Configuration(std::move(atoms));
}

Configuration sample_levy(const ModelParams& params, const Window& b, RandomSource& rng) {
  return LevySampler(params, b).sample(rng);
}

Configuration sample_urn(const ModelParams& params, const Window& b, RandomSource& rng) {
  params.validate();
  if (params.is_empty()) return {};
  const double rho_mass = params.mass(b);
  const std::int64_t m = NegBinomialDist(rho_mass, params.z).sample(rng);

  std::vector<Atom> atoms;
  // owner[i] = atom index of the i-th placed point; picking a uniform earlier
  // point selects a site with probability proportional to its multiplicity.
  std::vector<std::size_t> owner;
  owner.reserve(static_cast<std::size_t>(m));
  for (std::int64_t i = 0; i < m; ++i) {
    const double u = rng.uniform() * (rho_mass + static_cast<double>(i));
    if (u < rho_mass) {
      owner.push_back(atoms.size());
      atoms.push_back(Atom{rng.uniform(b), 1});
    } else {
      const auto pick = std::min<std::size_t>(static_cast<std::size_t>(u - rho_mass),
                                              static_cast<std::size_t>(i) - 1);
      const std::size_t a = owner[pick];
      ++atoms[a].mult;
      owner.push_back(a);
    }
  }
  return Configuration(std::move(atoms));
}

void validate_prior(const DiscretePrior& prior) {
  if (prior.empty()) throw std::invalid_argument("prior must have at least one atom");
  for (const auto& atom : prior) {
    atom.params.validate();
    if (!(atom.weight > 0.0)) throw std::invalid_argument("prior weights must be > 0");
  }
}

MixedSample sample_mixed(const DiscretePrior& prior, const Window& b, RandomSource& rng) {
  validate_prior(prior);
  double total = 0.0;
  for (const auto& atom : prior) total += atom.weight;
  const double u = rng.uniform() * total;
  double cumulative = 0.0;
  std::size_t index = prior.size() - 1;
  for (std::size_t i = 0; i < prior.size(); ++i) {
    cumulative += prior[i].weight;
    if (u < cumulative) {
      index = i;
      break;
    }
  }
  MixedSample out;
  out.prior_index = index;
  out.params = prior[index].params;
  out.cfg = sample_levy(out.params, b, rng);
  return out;
}

}  // namespace polya
