#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <vector>

namespace polya {

/// Streaming mean/variance (Welford), mergeable across replica blocks.
class McAccumulator {
public:
  void add(double x) {
    ++n_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
  }

  void merge(const McAccumulator& other);

  std::int64_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double standard_error() const {
    return n_ > 0 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
  }

private:
  std::int64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

struct McEstimate {
  double mean = 0.0;
  double se = 0.0;
  std::int64_t n = 0;

  static McEstimate from(const McAccumulator& acc) {
    return {acc.mean(), acc.standard_error(), acc.count()};
  }
};

/// Integer-valued histogram, mergeable.
struct CountHistogram {
  std::map<std::int64_t, std::int64_t> counts;
  std::int64_t total = 0;

  void add(std::int64_t value, std::int64_t times = 1) {
    counts[value] += times;
    total += times;
  }
  void merge(const CountHistogram& other) {
    for (const auto& [v, c] : other.counts) counts[v] += c;
    total += other.total;
  }
};

struct ChiSquareResult {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
  std::size_t cells = 0;
};

/// P(X > x) for X ~ chi-square(dof), via the regularized upper incomplete
/// gamma function.
double chi_square_survival(double x, int dof);

/// Pearson goodness of fit. Adjacent cells are pooled left to right until
/// each expected count reaches `pool_threshold`. `expected_prob` must sum to 1
/// (callers put the unobserved tail mass into a final cell). Throws
/// std::invalid_argument if fewer than two cells remain.
ChiSquareResult chi_square_gof(std::span<const std::int64_t> observed,
                               std::span<const double> expected_prob,
                               double pool_threshold = 5.0);

/// Goodness of fit of an integer histogram against a pmf on
/// {min_support, min_support+1, ...}; mass beyond the largest observed value
/// forms a tail cell.
ChiSquareResult chi_square_gof(const CountHistogram& hist,
                               const std::function<double(std::int64_t)>& pmf,
                               std::int64_t min_support = 0, double pool_threshold = 5.0);

/// Two-sample chi-square homogeneity test on aligned category counts, with
/// the same left-to-right pooling on the smaller sample's expected counts.
ChiSquareResult chi_square_two_sample(std::span<const std::int64_t> a,
                                      std::span<const std::int64_t> b,
                                      double pool_threshold = 5.0);

template <class Key>
ChiSquareResult chi_square_two_sample(const std::map<Key, std::int64_t>& a,
                                      const std::map<Key, std::int64_t>& b,
                                      double pool_threshold = 5.0) {
  std::map<Key, std::pair<std::int64_t, std::int64_t>> joint;
  for (const auto& [k, c] : a) joint[k].first += c;
  for (const auto& [k, c] : b) joint[k].second += c;
  std::vector<std::int64_t> ca, cb;
  ca.reserve(joint.size());
  cb.reserve(joint.size());
  for (const auto& [k, pair] : joint) {
    ca.push_back(pair.first);
    cb.push_back(pair.second);
  }
  return chi_square_two_sample(std::span<const std::int64_t>(ca),
                               std::span<const std::int64_t>(cb), pool_threshold);
}

}  // namespace polya
