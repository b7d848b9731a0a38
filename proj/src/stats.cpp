#include "polya/stats.hpp"

#include <limits>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>

namespace polya {

namespace {

// Greedy left-to-right pooling: close a group once its weight reaches the
// threshold; a short trailing group joins the previous one.
std::vector<std::size_t> pool_groups(std::span<const double> weight, double threshold) {
  std::vector<std::size_t> group(weight.size(), 0);
  std::size_t current = 0;
  double acc = 0.0;
  for (std::size_t i = 0; i < weight.size(); ++i) {
    group[i] = current;
    acc += weight[i];
    if (acc >= threshold) {
      ++current;
      acc = 0.0;
    }
  }
  const bool open_tail = !group.empty() && group.back() == current;
  if (open_tail && current > 0) {
    for (auto& g : group) {
      if (g == current) g = current - 1;
    }
  }
  return group;
}

}  // namespace

void McAccumulator::merge(const McAccumulator& other) {
  if (other.n_ == 0) return;
  if (n_ == 0) {
    *this = other;
    return;
  }
  const double total = static_cast<double>(n_ + other.n_);
  const double delta = other.mean_ - mean_;
  mean_ += delta * static_cast<double>(other.n_) / total;
  m2_ += other.m2_ + delta * delta * static_cast<double>(n_) * static_cast<double>(other.n_) / total;
  n_ += other.n_;
}

double chi_square_survival(double x, int dof) {
  if (dof < 1) throw std::invalid_argument("chi-square needs dof >= 1");
  if (x <= 0.0) return 1.0;
  return boost::math::gamma_q(0.5 * dof, 0.5 * x);
}

ChiSquareResult chi_square_gof(std::span<const std::int64_t> observed,
                               std::span<const double> expected_prob, double pool_threshold) {
  if (observed.size() != expected_prob.size()) {
    throw std::invalid_argument("observed and expected cell counts differ in length");
  }
  std::int64_t n = 0;
  for (auto o : observed) n += o;
  if (n == 0) throw std::invalid_argument("chi-square needs at least one observation");

  std::vector<double> expected(expected_prob.size());
  for (std::size_t i = 0; i < expected.size(); ++i) expected[i] = expected_prob[i] * static_cast<double>(n);
  const auto group = pool_groups(expected, pool_threshold);
  const std::size_t cells = group.empty() ? 0 : group.back() + 1;
  if (cells < 2) throw std::invalid_argument("chi-square is degenerate: fewer than two cells");

  std::vector<double> obs(cells, 0.0), exp(cells, 0.0);
  for (std::size_t i = 0; i < group.size(); ++i) {
    obs[group[i]] += static_cast<double>(observed[i]);
    exp[group[i]] += expected[i];
  }
  ChiSquareResult r;
  for (std::size_t c = 0; c < cells; ++c) {
    if (exp[c] <= 0.0) {
      if (obs[c] > 0.0) r.statistic = std::numeric_limits<double>::infinity();
      continue;
    }
    const double d = obs[c] - exp[c];
    r.statistic += d * d / exp[c];
  }
  r.cells = cells;
  r.dof = static_cast<int>(cells) - 1;
  r.p_value = std::isinf(r.statistic) ? 0.0 : chi_square_survival(r.statistic, r.dof);
  return r;
}

ChiSquareResult chi_square_gof(const CountHistogram& hist,
                               const std::function<double(std::int64_t)>& pmf,
                               std::int64_t min_support, double pool_threshold) {
  if (hist.total == 0) throw std::invalid_argument("chi-square needs at least one observation");
  const std::int64_t max_seen = hist.counts.rbegin()->first;
  if (hist.counts.begin()->first < min_support) {
    throw std::invalid_argument("observation below the pmf support");
  }
  std::vector<std::int64_t> observed;
  std::vector<double> prob;
  double covered = 0.0;
  for (std::int64_t v = min_support; v <= max_seen; ++v) {
    auto it = hist.counts.find(v);
    observed.push_back(it == hist.counts.end() ? 0 : it->second);
    const double p = pmf(v);
    prob.push_back(p);
    covered += p;
  }
  observed.push_back(0);
  prob.push_back(std::max(0.0, 1.0 - covered));
  return chi_square_gof(observed, prob, pool_threshold);
}

ChiSquareResult chi_square_two_sample(std::span<const std::int64_t> a,
                                      std::span<const std::int64_t> b, double pool_threshold) {
  if (a.size() != b.size()) throw std::invalid_argument("two-sample cells differ in length");
  std::int64_t na = 0, nb = 0;
  for (auto x : a) na += x;
  for (auto x : b) nb += x;
  if (na == 0 || nb == 0) throw std::invalid_argument("two-sample test needs two nonempty samples");
  const double total = static_cast<double>(na + nb);
  const double smaller = static_cast<double>(std::min(na, nb));

  std::vector<double> weight(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    weight[i] = static_cast<double>(a[i] + b[i]) * smaller / total;
  }
  const auto group = pool_groups(weight, pool_threshold);
  const std::size_t cells = group.empty() ? 0 : group.back() + 1;
  if (cells < 2) throw std::invalid_argument("chi-square is degenerate: fewer than two cells");

  std::vector<double> ga(cells, 0.0), gb(cells, 0.0);
  for (std::size_t i = 0; i < group.size(); ++i) {
    ga[group[i]] += static_cast<double>(a[i]);
    gb[group[i]] += static_cast<double>(b[i]);
  }
  ChiSquareResult r;
  for (std::size_t c = 0; c < cells; ++c) {
    const double col = ga[c] + gb[c];
    const double ea = col * static_cast<double>(na) / total;
    const double eb = col * static_cast<double>(nb) / total;
    r.statistic += (ga[c] - ea) * (ga[c] - ea) / ea + (gb[c] - eb) * (gb[c] - eb) / eb;
  }
  r.cells = cells;
  r.dof = static_cast<int>(cells) - 1;
  r.p_value = chi_square_survival(r.statistic, r.dof);
  return r;
}

}  // namespace polya
