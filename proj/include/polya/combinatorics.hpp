#pragma once

#include <map>
#include <optional>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "polya/core.hpp"

namespace polya {

using BigInt = boost::multiprecision::cpp_int;
using BigRatio = boost::multiprecision::cpp_rational;

inline constexpr int kPartitionBound = 40;

/// All gamma with sum_j j*gamma(j) = m (and gamma(N) = k when given), in
/// report_order. Throws std::length_error when m exceeds `bound`.
std::vector<OccupationProfile> enumerate_partitions(int m, std::optional<int> k = std::nullopt,
                                                    int bound = kPartitionBound);

BigInt factorial(int n);

/// c(gamma) = prod_j j^gamma(j) * gamma(j)!
BigRatio cycle_weight(const OccupationProfile& gamma);

/// m!/c(gamma): permutations of m elements with cycle type gamma.
BigInt permutations_of_type(const OccupationProfile& gamma);

/// Unsigned Stirling number of the first kind [m k]. Requires 0 <= k <= m.
BigInt stirling_cycle(int m, int k);

/// alpha[m] maps each gamma in M_(m)(N) to alpha^(m)_gamma, built by the
/// one-point-at-a-time recursion from alpha^(1)_{delta_1} = 1. Index 0 holds
/// the empty profile with weight 1. Throws std::logic_error if any entry
/// differs from m!/c(gamma).
using AlphaTable = std::vector<std::map<OccupationProfile, BigRatio>>;
AlphaTable alpha_recursion(int m_max);

/// x^n by repeated squaring.
BigRatio ratio_pow(BigRatio x, unsigned n);

/// x (x+1) ... (x+m-1); 1 for m = 0.
template <class Scalar>
Scalar rising_factorial(const Scalar& x, int m) {
  if (m < 0) throw std::invalid_argument("rising factorial needs m >= 0");
  Scalar out(1);
  for (int i = 0; i < m; ++i) out *= x + Scalar(i);
  return out;
}

/// Weights obtained by expanding the ordered composition sum
/// (m!/k!) * sum_{i'_1+...+i'_k = m} 1/(i'_1 ... i'_k) and grouping the
/// compositions by their multiset of parts.
std::map<OccupationProfile, BigRatio> composition_class_weights(int m, int k);

/// Degree-by-degree comparison of the two sides of the z-series expansion of
/// sum_m z^m/m! pi^(m)_B(0, phi) for phi(mu) = decay^{zeta_B(mu)}
/// (decay = e^{-f} for a constant level f on B).
struct SeriesIdentityReport {
  /// Coefficient of z^m, m = 0..m_max, on each side.
  std::vector<BigRatio> lhs_coefficients;
  std::vector<BigRatio> rhs_coefficients;
  BigRatio lhs_partial_sum;
  BigRatio rhs_partial_sum;

  bool agrees() const {
    return lhs_coefficients == rhs_coefficients && lhs_partial_sum == rhs_partial_sum;
  }
};

SeriesIdentityReport series_identity_check(const BigRatio& z, const BigRatio& rho_mass,
                                           const BigRatio& decay, int m_max);

}  // namespace polya
