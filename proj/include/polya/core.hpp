#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace polya {

/// Half-open interval [lo, hi) on the half-line.
class Window {
public:
  Window(double lo, double hi);

  double lo() const { return lo_; }
  double hi() const { return hi_; }
  double length() const { return hi_ - lo_; }
  bool contains(double x) const { return lo_ <= x && x < hi_; }
  bool contains(const Window& other) const { return lo_ <= other.lo_ && other.hi_ <= hi_; }
  bool overlaps(const Window& other) const { return lo_ < other.hi_ && other.lo_ < hi_; }

  friend bool operator==(const Window&, const Window&) = default;

private:
  double lo_;
  double hi_;
};

/// B_k = [0, k * delta), the nested chain used for limit experiments.
Window chain_window(int k, double delta = 1.0);

/// rho = w * Lebesgue on [0, inf).
struct GroundIntensity {
  double w = 1.0;

  double mass(const Window& b) const { return w * b.length(); }
};

/// The pair (z, w). Legal values are z in (0,1) with w > 0, or (0,0) for the
/// empty process.
struct ModelParams {
  double z = 0.0;
  double w = 0.0;

  static ModelParams empty() { return {0.0, 0.0}; }
  bool is_empty() const { return z == 0.0 && w == 0.0; }
  bool is_valid() const;
  /// Throws std::invalid_argument unless is_valid().
  void validate() const;
  double mass(const Window& b) const { return w * b.length(); }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Counts gamma(j) of sites carrying multiplicity j. Only nonzero entries are
/// stored, so equal profiles compare equal.
class OccupationProfile {
public:
  OccupationProfile() = default;
  OccupationProfile(std::initializer_list<std::pair<const int, std::int64_t>> counts);

  /// gamma(j); zero for absent j.
  std::int64_t operator[](int j) const;
  void add(int j, std::int64_t count = 1);
  void remove(int j, std::int64_t count = 1);

  /// gamma(id) = sum_j j * gamma(j).
  std::int64_t total_mass() const;
  /// gamma(N) = sum_j gamma(j).
  std::int64_t block_count() const;
  int largest_part() const;
  bool empty() const { return counts_.empty(); }

  /// Parts in nonincreasing order, e.g. {1:1, 3:1} -> [3, 1].
  std::vector<int> parts() const;
  const std::map<int, std::int64_t>& counts() const { return counts_; }

  std::string to_string() const;

  friend bool operator==(const OccupationProfile&, const OccupationProfile&) = default;
  friend bool operator<(const OccupationProfile& a, const OccupationProfile& b) {
    return a.counts_ < b.counts_;
  }

private:
  std::map<int, std::int64_t> counts_;
};

/// Report ordering: decreasing largest part, ties broken by comparing the
/// nonincreasing part sequences lexicographically (larger first).
bool report_order(const OccupationProfile& a, const OccupationProfile& b);

struct Atom {
  double site;
  std::int64_t mult;

  friend bool operator==(const Atom&, const Atom&) = default;
};

/// Finite point measure: atoms sorted by site, sites pairwise distinct.
class Configuration {
public:
  Configuration() = default;
  /// Duplicate sites are merged by summing multiplicities.
  explicit Configuration(std::vector<Atom> atoms);

  void add(double site, std::int64_t mult = 1);

  std::span<const Atom> atoms() const& { return atoms_; }
  std::span<const Atom> atoms() const&& = delete;
  std::size_t size() const { return atoms_.size(); }
  bool empty() const { return atoms_.empty(); }

  Configuration restricted_to(const Window& b) const;
  Configuration outside_of(const Window& b) const;
  /// Superposition of two point measures.
  Configuration operator+(const Configuration& other) const;

  friend bool operator==(const Configuration&, const Configuration&) = default;

private:
  void normalize();

  std::vector<Atom> atoms_;
};

std::int64_t zeta(const Configuration& cfg, const Window& b);
std::int64_t xi(const Configuration& cfg, const Window& b);
OccupationProfile occupation_profile(const Configuration& cfg, const Window& b);

/// Seeded draw source. Equal (seed, stream) pairs give equal sequences;
/// split() derives independent child streams for parallel replicas.
class RandomSource {
public:
  using engine_type = std::mt19937_64;

  explicit RandomSource(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }
  RandomSource split(std::uint64_t index) const;

  /// Uniform on [0, 1).
  double uniform();
  /// Uniform on [lo, hi).
  double uniform(const Window& b);
  engine_type& engine() { return engine_; }

private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  engine_type engine_;
};

}  // namespace polya
