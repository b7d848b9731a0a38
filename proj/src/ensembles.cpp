#include "polya/ensembles.hpp"

#include <cmath>
#include <limits>

#include "polya/sampler.hpp"

namespace polya {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

std::vector<double> log_stirling_table(std::int64_t m, std::int64_t k) {
  const auto stride = static_cast<std::size_t>(k + 1);
  std::vector<double> table(static_cast<std::size_t>(m + 1) * stride, kNegInf);
  table[0] = 0.0;
  for (std::int64_t n = 1; n <= m; ++n) {
    const double log_prev = std::log(static_cast<double>(n - 1));
    for (std::int64_t j = 1; j <= std::min(n, k); ++j) {
      const double fresh = table[(n - 1) * stride + (j - 1)];
      const double join = n > 1 ? log_prev + table[(n - 1) * stride + j] : kNegInf;
      table[n * stride + j] = log_add(fresh, join);
    }
  }
  return table;
}

OccupationProfile cycle_type_from_table(std::int64_t m, std::int64_t k,
                                        const std::vector<double>& table, RandomSource& rng) {
  const auto stride = static_cast<std::size_t>(k + 1);
  // Decide top-down which elements open a new cycle.
  std::vector<bool> opens(static_cast<std::size_t>(m + 1), false);
  std::int64_t j = k;
  for (std::int64_t n = m; n >= 1; --n) {
    const double log_fresh = j >= 1 ? table[(n - 1) * stride + (j - 1)] : kNegInf;
    const double p_fresh = std::exp(log_fresh - table[n * stride + j]);
    if (rng.uniform() < p_fresh) {
      opens[n] = true;
      --j;
    }
  }
  // Build bottom-up; joining after a uniform earlier element enlarges its cycle.
  std::vector<std::int64_t> cycle_of;
  std::vector<std::int64_t> cycle_size;
  cycle_of.reserve(static_cast<std::size_t>(m));
  for (std::int64_t n = 1; n <= m; ++n) {
    if (opens[n]) {
      cycle_of.push_back(static_cast<std::int64_t>(cycle_size.size()));
      cycle_size.push_back(1);
    } else {
      const auto earlier = static_cast<std::size_t>(rng.uniform() * static_cast<double>(n - 1));
      const std::int64_t c = cycle_of[std::min(earlier, static_cast<std::size_t>(n - 2))];
      ++cycle_size[c];
      cycle_of.push_back(c);
    }
  }
  OccupationProfile gamma;
  for (auto size : cycle_size) gamma.add(static_cast<int>(size));
  return gamma;
}

void check_size_height_args(std::int64_t m, std::int64_t k) {
  if (m < 0 || k < 0 || k > m || ((k == 0) != (m == 0))) {
    throw std::domain_error("size-and-height condition needs 0 <= k <= m and (k = 0 iff m = 0)");
  }
}

}  // namespace

const char* to_string(EnsembleKind kind) {
  switch (kind) {
    case EnsembleKind::OccupiedSites: return "sites";
    case EnsembleKind::TotalHeight: return "height";
    case EnsembleKind::SizeAndHeight: return "both";
  }
  return "?";
}

EnsembleCondition EnsembleCondition::occupied_sites(std::int64_t n, const Window& b) {
  EnsembleCondition c{EnsembleKind::OccupiedSites, n, 0, 0, b};
  c.validate();
  return c;
}

EnsembleCondition EnsembleCondition::total_height(std::int64_t m, const Window& b) {
  EnsembleCondition c{EnsembleKind::TotalHeight, 0, m, 0, b};
  c.validate();
  return c;
}

EnsembleCondition EnsembleCondition::size_and_height(std::int64_t m, std::int64_t k, const Window& b) {
  EnsembleCondition c{EnsembleKind::SizeAndHeight, 0, m, k, b};
  c.validate();
  return c;
}

void EnsembleCondition::validate() const {
  switch (kind) {
    case EnsembleKind::OccupiedSites:
      if (n < 0) throw std::domain_error("occupied-site count must be >= 0");
      break;
    case EnsembleKind::TotalHeight:
      if (m < 0) throw std::domain_error("total height must be >= 0");
      break;
    case EnsembleKind::SizeAndHeight:
      check_size_height_args(m, k);
      break;
  }
}

PartitionLaw::PartitionLaw(std::vector<std::pair<OccupationProfile, BigRatio>> weights) {
  BigRatio total = 0;
  for (const auto& [gamma, w] : weights) {
    if (w < 0) throw std::invalid_argument("partition law weights must be nonnegative");
    total += w;
  }
  if (total == 0) throw std::invalid_argument("partition law has no mass");
  for (auto& [gamma, w] : weights) {
    if (w == 0) continue;
    support_.emplace_back(std::move(gamma), w / total);
  }
  std::sort(support_.begin(), support_.end(),
            [](const auto& a, const auto& b) { return report_order(a.first, b.first); });
  double running = 0.0;
  for (const auto& entry : support_) {
    running += entry.second.convert_to<double>();
    cumulative_.push_back(running);
  }
}

BigRatio PartitionLaw::total() const {
  BigRatio t = 0;
  for (const auto& entry : support_) t += entry.second;
  return t;
}

BigRatio PartitionLaw::probability(const OccupationProfile& gamma) const {
  for (const auto& [g, p] : support_) {
    if (g == gamma) return p;
  }
  return 0;
}

OccupationProfile PartitionLaw::sample(RandomSource& rng) const {
  if (support_.empty()) throw std::logic_error("sampling from an empty partition law");
  const double u = rng.uniform() * cumulative_.back();
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  const auto idx = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()),
                                         support_.size() - 1);
  return support_[idx].first;
}

Configuration place_profile(const OccupationProfile& gamma, const Window& b, RandomSource& rng) {
  std::vector<Atom> atoms;
  atoms.reserve(static_cast<std::size_t>(gamma.block_count()));
  for (const auto& [j, count] : gamma.counts()) {
    for (std::int64_t s = 0; s < count; ++s) atoms.push_back(Atom{rng.uniform(b), j});
  }
  return Configuration(std::move(atoms));
}

Configuration sample_occupied_sites(std::int64_t n, double z, const Window& b, RandomSource& rng) {
  if (n < 0) throw std::domain_error("occupied-site count must be >= 0");
  const LogarithmicDist mult(z);
  std::vector<Atom> atoms;
  atoms.reserve(static_cast<std::size_t>(n));
  for (std::int64_t s = 0; s < n; ++s) {
    const double site = rng.uniform(b);
    atoms.push_back(Atom{site, mult.sample(rng)});
  }
  return Configuration(std::move(atoms));
}

PartitionLaw partition_law_total_height(int m, const BigRatio& rho_mass) {
  if (m < 0) throw std::domain_error("total height must be >= 0");
  if (!(rho_mass > 0)) throw std::domain_error("rho(B) must be > 0");
  const BigRatio normalizer = rising_factorial(rho_mass, m);
  std::vector<std::pair<OccupationProfile, BigRatio>> weights;
  for (auto& gamma : enumerate_partitions(m)) {
    const auto k = static_cast<unsigned>(gamma.block_count());
    BigRatio w = BigRatio(permutations_of_type(gamma)) * ratio_pow(rho_mass, k) /
                 normalizer;
    weights.emplace_back(std::move(gamma), std::move(w));
  }
  return PartitionLaw(std::move(weights));
}

PartitionLaw conditional_law_from_profile_law(int m, std::optional<int> k, const BigRatio& rho_mass,
                                              const BigRatio& z) {
  if (!(z > 0 && z < 1)) throw std::domain_error("z must lie in (0,1)");
  if (!(rho_mass > 0)) throw std::domain_error("rho(B) must be > 0");
  if (k) check_size_height_args(m, *k);
  std::vector<std::pair<OccupationProfile, BigRatio>> weights;
  for (auto& gamma : enumerate_partitions(m, k)) {
    // prod_j (z^j rho / j)^{gamma(j)} / gamma(j)!, common factor exp(-rho tau_z(N)) dropped.
    BigRatio w = 1;
    for (const auto& [j, count] : gamma.counts()) {
      const BigRatio intensity = ratio_pow(z, static_cast<unsigned>(j)) * rho_mass / j;
      w *= ratio_pow(intensity, static_cast<unsigned>(count)) /
           BigRatio(factorial(static_cast<int>(count)));
    }
    weights.emplace_back(std::move(gamma), std::move(w));
  }
  return PartitionLaw(std::move(weights));
}

Configuration sample_total_height(std::int64_t m, double rho_mass, const Window& b,
                                  RandomSource& rng) {
  if (m < 0) throw std::domain_error("total height must be >= 0");
  if (!(rho_mass > 0.0)) throw std::domain_error("rho(B) must be > 0");
  std::vector<Atom> atoms;
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

PartitionLaw partition_law_size_height(int m, int k) {
  check_size_height_args(m, k);
  if (m == 0) return PartitionLaw({{OccupationProfile{}, BigRatio(1)}});
  const BigRatio normalizer(stirling_cycle(m, k));
  std::vector<std::pair<OccupationProfile, BigRatio>> weights;
  for (auto& gamma : enumerate_partitions(m, k)) {
    BigRatio w = BigRatio(permutations_of_type(gamma)) / normalizer;
    weights.emplace_back(std::move(gamma), std::move(w));
  }
  return PartitionLaw(std::move(weights));
}

SizeHeightSampler::SizeHeightSampler(std::int64_t m, std::int64_t k) : m_(m), k_(k) {
  check_size_height_args(m, k);
  if (m <= kPartitionBound) {
    law_ = partition_law_size_height(static_cast<int>(m), static_cast<int>(k));
  } else {
    log_stirling_ = log_stirling_table(m, k);
  }
}

OccupationProfile SizeHeightSampler::sample_profile(RandomSource& rng) const {
  if (law_) return law_->sample(rng);
  return cycle_type_from_table(m_, k_, log_stirling_, rng);
}

Configuration SizeHeightSampler::sample(const Window& b, RandomSource& rng) const {
  return place_profile(sample_profile(rng), b, rng);
}

Configuration sample_size_height(std::int64_t m, std::int64_t k, const Window& b,
                                 RandomSource& rng) {
  return SizeHeightSampler(m, k).sample(b, rng);
}

OccupationProfile sample_cycle_type_sequential(std::int64_t m, std::int64_t k, RandomSource& rng) {
  check_size_height_args(m, k);
  if (m == 0) return {};
  return cycle_type_from_table(m, k, log_stirling_table(m, k), rng);
}

Configuration kernel_apply(const EnsembleCondition& cond, const Configuration& outside,
                           const ModelParams& params, RandomSource& rng) {
  cond.validate();
  params.validate();
  if (!outside.restricted_to(cond.window).empty()) {
    throw std::invalid_argument("outside configuration has atoms inside the kernel window");
  }
  Configuration inside;
  switch (cond.kind) {
    case EnsembleKind::OccupiedSites:
      if (cond.n > 0) {
        if (params.is_empty()) throw std::invalid_argument("occupied-sites kernel needs z in (0,1)");
        inside = sample_occupied_sites(cond.n, params.z, cond.window, rng);
      }
      break;
    case EnsembleKind::TotalHeight:
      if (cond.m > 0) {
        if (params.is_empty()) throw std::invalid_argument("total-height kernel needs rho(B) > 0");
        inside = sample_total_height(cond.m, params.mass(cond.window), cond.window, rng);
      }
      break;
    case EnsembleKind::SizeAndHeight:
      inside = sample_size_height(cond.m, cond.k, cond.window, rng);
      break;
  }
  return inside + outside;
}

}  // namespace polya
