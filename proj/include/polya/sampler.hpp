#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "polya/core.hpp"

namespace polya {

double poisson_pmf(double mean, std::int64_t n);

/// (1-z)^r z^m r^[m] / m!, evaluated in log space.
double negbin_pmf(double r, double z, std::int64_t m);

/// z^j / (j * -log(1-z)) for j >= 1.
double logarithmic_pmf(double z, std::int64_t j);

/// tau_z(N) = -log(1-z).
inline double tau_total_mass(double z) { return -std::log1p(-z); }

/// Per-site multiplicity law.
class LogarithmicDist {
public:
  explicit LogarithmicDist(double z);

  double z() const { return z_; }
  double pmf(std::int64_t j) const { return logarithmic_pmf(z_, j); }
  double mean() const;
  /// Inversion on the cumulative sums.
  std::int64_t sample(RandomSource& rng) const;

private:
  double z_;
  double normalizer_;
};

std::int64_t logarithmic_sample(double z, RandomSource& rng);

/// Law of zeta_B: shape r = rho(B), parameter z.
class NegBinomialDist {
public:
  NegBinomialDist(double r, double z);

  double pmf(std::int64_t m) const { return negbin_pmf(r_, z_, m); }
  double mean() const { return r_ * z_ / (1.0 - z_); }
  std::int64_t sample(RandomSource& rng) const;

private:
  double r_;
  double z_;
};

/// Smallest J with rho(B) * sum_{j>J} z^j/j < 1e-12, using the geometric
/// tail bound z^{J+1} / ((J+1)(1-z)).
int levy_truncation(double z, double rho_mass, double tail = 1e-12);

/// Compound-Poisson sampler: gamma_B(j) ~ Poisson(z^j/j rho(B)) independently,
/// each site placed uniformly in the window. Reusable across replicas.
class LevySampler {
public:
  LevySampler(const ModelParams& params, const Window& window);

  Configuration sample(RandomSource& rng) const;
  int truncation() const { return static_cast<int>(means_.size()); }

private:
  Window window_;
  std::vector<double> means_;
  std::vector<std::poisson_distribution<std::int64_t>::param_type> poisson_params_;
};

Configuration sample_levy(const ModelParams& params, const Window& b, RandomSource& rng);

/// Draws m ~ NB(rho(B), z), then places points one by one: the next point
/// opens a fresh uniform site with probability rho(B)/(rho(B)+i), otherwise it
/// lands on an existing site with probability proportional to its multiplicity.
Configuration sample_urn(const ModelParams& params, const Window& b, RandomSource& rng);

struct PriorAtom {
  ModelParams params;
  double weight = 1.0;
};
using DiscretePrior = std::vector<PriorAtom>;

/// Throws std::invalid_argument on an empty prior, nonpositive weights or
/// illegal parameters.
void validate_prior(const DiscretePrior& prior);

struct MixedSample {
  Configuration cfg;
  ModelParams params;
  std::size_t prior_index = 0;
};

MixedSample sample_mixed(const DiscretePrior& prior, const Window& b, RandomSource& rng);

}  // namespace polya
