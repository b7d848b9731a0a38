#include "polya/combinatorics.hpp"

#include <functional>
#include <sstream>

namespace polya {

namespace {

void generate_partitions(int remaining, int max_part, std::optional<int> blocks_left,
                         std::vector<int>& parts, std::vector<OccupationProfile>& out) {
  if (remaining == 0) {
    if (blocks_left && *blocks_left != 0) return;
    OccupationProfile gamma;
    for (int p : parts) gamma.add(p);
    out.push_back(std::move(gamma));
    return;
  }
  if (blocks_left) {
    // Need 1 <= blocks_left, and blocks_left parts of size <= max_part must
    // be able to cover `remaining`.
    if (*blocks_left <= 0 || remaining < *blocks_left) return;
    if (static_cast<long>(*blocks_left) * max_part < remaining) return;
  }
  for (int p = std::min(remaining, max_part); p >= 1; --p) {
    parts.push_back(p);
    generate_partitions(remaining - p, p, blocks_left ? std::optional<int>(*blocks_left - 1) : std::nullopt,
                        parts, out);
    parts.pop_back();
  }
}

}  // namespace

std::vector<OccupationProfile> enumerate_partitions(int m, std::optional<int> k, int bound) {
  if (m < 0) throw std::invalid_argument("partition size must be >= 0");
  if (m > bound) {
    std::ostringstream os;
    os << "partition enumeration of m=" << m << " exceeds bound " << bound;
    throw std::length_error(os.str());
  }
  std::vector<OccupationProfile> out;
  std::vector<int> parts;
  generate_partitions(m, m, k, parts, out);
  return out;
}

BigRatio ratio_pow(BigRatio x, unsigned n) {
  BigRatio out = 1;
  while (n > 0) {
    if (n & 1U) out *= x;
    x *= x;
    n >>= 1U;
  }
  return out;
}

BigInt factorial(int n) {
  if (n < 0) throw std::invalid_argument("factorial of negative number");
  BigInt out = 1;
  for (int i = 2; i <= n; ++i) out *= i;
  return out;
}

BigRatio cycle_weight(const OccupationProfile& gamma) {
  BigInt c = 1;
  for (const auto& [j, count] : gamma.counts()) {
    c *= boost::multiprecision::pow(BigInt(j), static_cast<unsigned>(count));
    c *= factorial(static_cast<int>(count));
  }
  return BigRatio(c);
}

BigInt permutations_of_type(const OccupationProfile& gamma) {
  const BigRatio ratio = BigRatio(factorial(static_cast<int>(gamma.total_mass()))) / cycle_weight(gamma);
  if (denominator(ratio) != 1) throw std::logic_error("m!/c(gamma) is not an integer");
  return numerator(ratio);
}

BigInt stirling_cycle(int m, int k) {
  if (k < 0 || m < 0 || k > m) throw std::domain_error("stirling_cycle needs 0 <= k <= m");
  // row[j] holds [n j] for the current n.
  std::vector<BigInt> row(static_cast<std::size_t>(m) + 1, 0);
  row[0] = 1;
  for (int n = 1; n <= m; ++n) {
    for (int j = n; j >= 1; --j) {
      row[j] = row[j - 1] + BigInt(n - 1) * row[j];
    }
    row[0] = 0;
  }
  return row[k];
}

AlphaTable alpha_recursion(int m_max) {
  if (m_max < 0) throw std::invalid_argument("m_max must be >= 0");
  if (m_max > kPartitionBound) throw std::length_error("m_max exceeds enumeration bound");
  AlphaTable alpha(static_cast<std::size_t>(m_max) + 1);
  alpha[0][OccupationProfile{}] = 1;
  if (m_max == 0) return alpha;
  alpha[1][OccupationProfile{{1, 1}}] = 1;

  for (int m = 1; m < m_max; ++m) {
    const auto& prev = alpha[m];
    auto lookup = [&prev](const OccupationProfile& g) -> BigRatio {
      auto it = prev.find(g);
      return it == prev.end() ? BigRatio(0) : it->second;
    };
    for (const auto& gamma : enumerate_partitions(m + 1)) {
      BigRatio value = 0;
      // New member joins an existing family of size j, turning it into j+1.
      for (const auto& [jp1, count] : gamma.counts()) {
        const int j = jp1 - 1;
        if (j < 1) continue;
        OccupationProfile smaller = gamma;
        smaller.remove(jp1);
        smaller.add(j);
        value += BigRatio(j * (gamma[j] + 1)) * lookup(smaller);
      }
      // New member founds a family of size 1.
      if (gamma[1] >= 1) {
        OccupationProfile smaller = gamma;
        smaller.remove(1);
        value += lookup(smaller);
      }
      alpha[m + 1][gamma] = value;
    }
  }

  for (int m = 1; m <= m_max; ++m) {
    for (const auto& [gamma, value] : alpha[m]) {
      if (value != BigRatio(permutations_of_type(gamma))) {
        throw std::logic_error("alpha recursion disagrees with m!/c(gamma) at " + gamma.to_string());
      }
    }
  }
  return alpha;
}

std::map<OccupationProfile, BigRatio> composition_class_weights(int m, int k) {
  if (k < 1 || k > m) throw std::domain_error("composition weights need 1 <= k <= m");
  std::map<OccupationProfile, BigRatio> out;
  std::vector<int> parts;
  const BigRatio prefactor = BigRatio(factorial(m)) / BigRatio(factorial(k));
  std::function<void(int, int)> walk = [&](int remaining, int slots) {
    if (slots == 0) {
      if (remaining != 0) return;
      OccupationProfile gamma;
      BigInt product = 1;
      for (int p : parts) {
        gamma.add(p);
        product *= p;
      }
      out[gamma] += prefactor / BigRatio(product);
      return;
    }
    for (int p = 1; p <= remaining - (slots - 1); ++p) {
      parts.push_back(p);
      walk(remaining - p, slots - 1);
      parts.pop_back();
    }
  };
  walk(m, k);
  return out;
}

SeriesIdentityReport series_identity_check(const BigRatio& z, const BigRatio& rho_mass,
                                           const BigRatio& decay, int m_max) {
  if (!(z > 0 && z < 1)) throw std::invalid_argument("series check needs 0 < z < 1");
  if (m_max < 0) throw std::invalid_argument("m_max must be >= 0");
  SeriesIdentityReport report;
  report.lhs_coefficients.assign(static_cast<std::size_t>(m_max) + 1, BigRatio(0));
  report.rhs_coefficients.assign(static_cast<std::size_t>(m_max) + 1, BigRatio(0));

  // Degree 0: pi^(0) is the unit mass at the empty configuration on the
  // left, the k = 0 term of the exponential on the right.
  report.lhs_coefficients[0] = 1;
  report.rhs_coefficients[0] = 1;

  // Left side: phi depends on mu only through mu(B) = m, and the iterated
  // kernel pi^(m)_B has total mass rho(B)^[m].
  for (int m = 1; m <= m_max; ++m) {
    report.lhs_coefficients[m] = ratio_pow(decay, static_cast<unsigned>(m)) *
                                 rising_factorial(rho_mass, m) / BigRatio(factorial(m));
  }

  // Right side: ordered k-tuples (i_1..i_k) of family sizes, weight
  // z^{sum i}/(i_1...i_k) rho(B)^k / k!, grouped by total degree.
  std::vector<int> parts;
  std::function<void(int, int, int)> walk = [&](int remaining, int slots, int k) {
    if (slots == 0) {
      const int degree = m_max - remaining;
      if (degree < 1) return;
      BigInt product = 1;
      for (int p : parts) product *= p;
      report.rhs_coefficients[degree] += ratio_pow(decay, static_cast<unsigned>(degree)) *
                                         ratio_pow(rho_mass, static_cast<unsigned>(k)) /
                                         (BigRatio(factorial(k)) * BigRatio(product));
      return;
    }
    for (int p = 1; p <= remaining - (slots - 1); ++p) {
      parts.push_back(p);
      walk(remaining - p, slots - 1, k);
      parts.pop_back();
    }
  };
  for (int k = 1; k <= m_max; ++k) walk(m_max, k, k);

  BigRatio z_power = 1;
  for (int m = 0; m <= m_max; ++m) {
    report.lhs_partial_sum += report.lhs_coefficients[m] * z_power;
    report.rhs_partial_sum += report.rhs_coefficients[m] * z_power;
    z_power *= z;
  }
  return report;
}

}  // namespace polya
