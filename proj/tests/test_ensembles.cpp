#include <gtest/gtest.h>

#include <cmath>

#include "polya/ensembles.hpp"
#include "polya/sampler.hpp"
#include "polya/stats.hpp"

using namespace polya;

TEST(SizeHeightLaw, ExampleMFourKTwo) {
  const PartitionLaw law = partition_law_size_height(4, 2);
  ASSERT_EQ(law.support().size(), 2u);
  EXPECT_EQ(law.support()[0].first, (OccupationProfile{{1, 1}, {3, 1}}));
  EXPECT_EQ(law.support()[0].second, BigRatio(8, 11));
  EXPECT_EQ(law.support()[1].first, (OccupationProfile{{2, 2}}));
  EXPECT_EQ(law.support()[1].second, BigRatio(3, 11));
  EXPECT_EQ(law.total(), BigRatio(1));
}

TEST(TotalHeightLaw, ExampleMThreeRhoOne) {
  const PartitionLaw law = partition_law_total_height(3, BigRatio(1));
  EXPECT_EQ(law.probability({{3, 1}}), BigRatio(2, 6));
  EXPECT_EQ(law.probability({{1, 1}, {2, 1}}), BigRatio(3, 6));
  EXPECT_EQ(law.probability({{1, 3}}), BigRatio(1, 6));
  EXPECT_EQ(law.probability({{4, 1}}), BigRatio(0));
}

TEST(PartitionLaws, SumToOneExactly) {
  for (int m = 1; m <= 12; ++m) {
    EXPECT_EQ(partition_law_total_height(m, BigRatio(7, 3)).total(), BigRatio(1));
    for (int k = 1; k <= m; ++k) EXPECT_EQ(partition_law_size_height(m, k).total(), BigRatio(1));
  }
  EXPECT_EQ(partition_law_size_height(0, 0).support().size(), 1u);
  EXPECT_THROW(partition_law_size_height(3, 0), std::domain_error);
  EXPECT_THROW(partition_law_total_height(3, BigRatio(0)), std::domain_error);
}

TEST(PartitionLaws, ZAndRhoCancelFromConditionedLaws) {
  for (int m = 1; m <= 7; ++m) {
    for (const BigRatio& z : {BigRatio(1, 3), BigRatio(1, 2), BigRatio(9, 10)}) {
      for (const BigRatio& rho : {BigRatio(1, 2), BigRatio(1), BigRatio(5)}) {
        EXPECT_EQ(conditional_law_from_profile_law(m, std::nullopt, rho, z), partition_law_total_height(m, rho));
        for (int k = 1; k <= m; ++k) {
          EXPECT_EQ(conditional_law_from_profile_law(m, k, rho, z), partition_law_size_height(m, k));
        }
      }
    }
  }
}

TEST(PartitionLaw, SampleFrequencies) {
  const PartitionLaw law = partition_law_size_height(4, 2);
  RandomSource rng(4);
  const int n = 40000;
  int hits = 0;
  for (int i = 0; i < n; ++i) hits += law.sample(rng) == OccupationProfile{{2, 2}} ? 1 : 0;
  const double p = 3.0 / 11.0;
  EXPECT_NEAR(static_cast<double>(hits) / n, p, 4.0 * std::sqrt(p * (1 - p) / n));
}

TEST(EnsembleCondition, Validation) {
  const Window b(0.0, 1.0);
  EXPECT_NO_THROW(EnsembleCondition::size_and_height(0, 0, b).validate());
  EXPECT_THROW(EnsembleCondition::size_and_height(3, 0, b).validate(), std::domain_error);
  EXPECT_THROW(EnsembleCondition::size_and_height(0, 2, b).validate(), std::domain_error);
  EXPECT_THROW(EnsembleCondition::size_and_height(2, 3, b).validate(), std::domain_error);
  EXPECT_THROW(EnsembleCondition::total_height(-1, b).validate(), std::domain_error);
  EXPECT_THROW(EnsembleCondition::occupied_sites(-1, b).validate(), std::domain_error);
}

TEST(Kernels, FixedCountsAndOutsideKept) {
  const Window b(1.0, 2.0);
  const Configuration outside({{0.5, 2}, {3.0, 1}});
  const ModelParams p{0.5, 1.0};
  RandomSource rng(8);
  for (int i = 0; i < 200; ++i) {
    const auto sites = kernel_apply(EnsembleCondition::occupied_sites(4, b), outside, p, rng);
    EXPECT_EQ(xi(sites, b), 4);
    EXPECT_EQ(sites.outside_of(b), outside);
    const auto height = kernel_apply(EnsembleCondition::total_height(6, b), outside, p, rng);
    EXPECT_EQ(zeta(height, b), 6);
    const auto both = kernel_apply(EnsembleCondition::size_and_height(6, 3, b), outside, p, rng);
    EXPECT_EQ(zeta(both, b), 6);
    EXPECT_EQ(xi(both, b), 3);
  }
  EXPECT_THROW(kernel_apply(EnsembleCondition::total_height(2, b), Configuration({{1.5, 1}}), p, rng),
               std::invalid_argument);
}

TEST(Kernels, OccupiedSitesMultiplicitiesAreLogarithmic) {
  RandomSource rng(9);
  CountHistogram h;
  for (int i = 0; i < 5000; ++i) {
    const Configuration cfg = sample_occupied_sites(5, 0.6, Window(0.0, 1.0), rng);
    for (const auto& a : cfg.atoms()) h.add(a.mult);
  }
  EXPECT_EQ(h.total, 25000);
  EXPECT_GT(chi_square_gof(h, [](std::int64_t j) { return logarithmic_pmf(0.6, j); }, 1).p_value, 0.001);
}

TEST(Kernels, TotalHeightMatchesExactLaw) {
  const PartitionLaw law = partition_law_total_height(5, BigRatio(3, 2));
  RandomSource rng(10);
  std::map<OccupationProfile, std::int64_t> counts;
  const Window b(0.0, 1.5);
  for (int i = 0; i < 30000; ++i) ++counts[occupation_profile(sample_total_height(5, 1.5, b, rng), b)];
  std::vector<std::int64_t> obs;
  std::vector<double> prob;
  for (const auto& [g, p] : law.support()) {
    obs.push_back(counts[g]);
    prob.push_back(static_cast<double>(p));
  }
  EXPECT_GT(chi_square_gof(obs, prob).p_value, 0.001);
}

TEST(Kernels, LargeSizeHeightMatchesConditionedUrn) {
  // Beyond the enumeration bound: compare the largest-part law with draws
  // of the rho = 1 urn (Ewens with theta = 1) conditioned on k blocks.
  const std::int64_t m = 50, k = 4;
  const Window b(0.0, 1.0);
  const SizeHeightSampler sampler(m, k);
  RandomSource r1(31), r2(32);
  std::map<int, std::int64_t> direct, oracle;
  for (int i = 0; i < 8000; ++i) ++direct[sampler.sample_profile(r1).largest_part()];
  int accepted = 0;
  while (accepted < 8000) {
    const auto g = occupation_profile(sample_total_height(m, 1.0, b, r2), b);
    if (g.block_count() != k) continue;
    ++oracle[g.largest_part()];
    ++accepted;
  }
  EXPECT_GT(chi_square_two_sample(direct, oracle).p_value, 0.001);
  const auto g = sample_cycle_type_sequential(m, k, r1);
  EXPECT_EQ(g.total_mass(), m);
  EXPECT_EQ(g.block_count(), k);
}
