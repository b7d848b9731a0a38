#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "polya/combinatorics.hpp"
#include "polya/core.hpp"

namespace polya {

enum class EnsembleKind { OccupiedSites, TotalHeight, SizeAndHeight };

const char* to_string(EnsembleKind kind);

/// What the kernel keeps fixed inside the window: the number of occupied
/// sites n, the number of points m, or both (m, k).
struct EnsembleCondition {
  EnsembleKind kind = EnsembleKind::OccupiedSites;
  std::int64_t n = 0;
  std::int64_t m = 0;
  std::int64_t k = 0;
  Window window{0.0, 1.0};

  static EnsembleCondition occupied_sites(std::int64_t n, const Window& b);
  static EnsembleCondition total_height(std::int64_t m, const Window& b);
  static EnsembleCondition size_and_height(std::int64_t m, std::int64_t k, const Window& b);

  /// Throws std::domain_error for negative counts, k > m, or exactly one of
  /// (m, k) zero.
  void validate() const;
};

/// Exact law on occupation profiles; probabilities are exact rationals and
/// the support is kept in report_order.
class PartitionLaw {
public:
  PartitionLaw() = default;
  /// Normalizes nonnegative weights; zero-weight profiles are dropped.
  explicit PartitionLaw(std::vector<std::pair<OccupationProfile, BigRatio>> weights);

  const std::vector<std::pair<OccupationProfile, BigRatio>>& support() const { return support_; }
  BigRatio total() const;
  BigRatio probability(const OccupationProfile& gamma) const;
  OccupationProfile sample(RandomSource& rng) const;

  friend bool operator==(const PartitionLaw&, const PartitionLaw&) = default;

private:
  std::vector<std::pair<OccupationProfile, BigRatio>> support_;
  std::vector<double> cumulative_;
};

/// Places gamma(N) uniform sites in b carrying the multiplicities of gamma.
Configuration place_profile(const OccupationProfile& gamma, const Window& b, RandomSource& rng);

/// n uniform sites with independent logarithmic(z) multiplicities.
Configuration sample_occupied_sites(std::int64_t n, double z, const Window& b, RandomSource& rng);

/// P(gamma) = (m!/c(gamma)) rho^{gamma(N)} / rho^[m] over M_(m)(N).
PartitionLaw partition_law_total_height(int m, const BigRatio& rho_mass);

/// Law of gamma_B given zeta_B = m (and xi_B = k when given), computed from the
/// unconditioned profile law P(gamma_B = gamma) ~ prod_j (z^j rho/j)^gamma(j) / gamma(j)!.
/// Used to check that z cancels from the conditioned laws.
PartitionLaw conditional_law_from_profile_law(int m, std::optional<int> k, const BigRatio& rho_mass,
                                              const BigRatio& z);

/// Sequential urn: point i+1 opens a fresh uniform site with probability
/// rho/(rho+i), otherwise joins an earlier point chosen uniformly. z plays no
/// role once zeta_B is fixed.
Configuration sample_total_height(std::int64_t m, double rho_mass, const Window& b,
                                  RandomSource& rng);

/// P(gamma) = (m!/c(gamma)) / [m k] over gamma with gamma(id)=m, gamma(N)=k.
PartitionLaw partition_law_size_height(int m, int k);

/// Exact sampler for the size-and-height kernel. Uses the enumerated law up
/// to the enumeration bound and the Stirling-recursion construction beyond.
class SizeHeightSampler {
public:
  SizeHeightSampler(std::int64_t m, std::int64_t k);

  OccupationProfile sample_profile(RandomSource& rng) const;
  Configuration sample(const Window& b, RandomSource& rng) const;

private:
  std::int64_t m_;
  std::int64_t k_;
  std::optional<PartitionLaw> law_;
  // log [n j] for n <= m, j <= k, row-major with stride k+1.
  std::vector<double> log_stirling_;
};

Configuration sample_size_height(std::int64_t m, std::int64_t k, const Window& b,
                                 RandomSource& rng);

/// Builds a random permutation of m elements conditioned to have k cycles and
/// returns its cycle type: element n opens a new cycle with probability
/// [n-1 k-1]/[n k], otherwise it is inserted after a uniform earlier element.
OccupationProfile sample_cycle_type_sequential(std::int64_t m, std::int64_t k, RandomSource& rng);

/// Resamples the inside of cond.window under the conditional kernel and adds
/// the untouched outside configuration. Throws std::invalid_argument if
/// `outside` has atoms in the window or the parameters do not fit the kernel.
Configuration kernel_apply(const EnsembleCondition& cond, const Configuration& outside,
                           const ModelParams& params, RandomSource& rng);

}  // namespace polya
