#include "polya/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace polya {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

Window::Window(double lo, double hi) : lo_(lo), hi_(hi) {
  if (!(lo < hi)) {
    throw std::invalid_argument("window must satisfy lo < hi");
  }
}

Window chain_window(int k, double delta) {
  if (k < 1 || !(delta > 0.0)) {
    throw std::invalid_argument("chain window needs k >= 1 and delta > 0");
  }
  return Window(0.0, k * delta);
}

bool ModelParams::is_valid() const {
  if (is_empty()) return true;
  return z > 0.0 && z < 1.0 && w > 0.0;
}

void ModelParams::validate() const {
  if (!is_valid()) {
    std::ostringstream os;
    os << "illegal model parameters (z=" << z << ", w=" << w
       << "): need z in (0,1) and w > 0, or (0,0)";
    throw std::invalid_argument(os.str());
  }
}

OccupationProfile::OccupationProfile(
    std::initializer_list<std::pair<const int, std::int64_t>> counts) {
  for (const auto& [j, c] : counts) add(j, c);
}

std::int64_t OccupationProfile::operator[](int j) const {
  auto it = counts_.find(j);
  return it == counts_.end() ? 0 : it->second;
}

void OccupationProfile::add(int j, std::int64_t count) {
  if (j < 1 || count < 0) throw std::invalid_argument("profile entries need j >= 1, count >= 0");
  if (count == 0) return;
  counts_[j] += count;
}

void OccupationProfile::remove(int j, std::int64_t count) {
  auto it = counts_.find(j);
  if (it == counts_.end() || it->second < count) {
    throw std::invalid_argument("profile entry would become negative");
  }
  it->second -= count;
  if (it->second == 0) counts_.erase(it);
}

std::int64_t OccupationProfile::total_mass() const {
  std::int64_t m = 0;
  for (const auto& [j, c] : counts_) m += j * c;
  return m;
}

std::int64_t OccupationProfile::block_count() const {
  std::int64_t k = 0;
  for (const auto& [j, c] : counts_) k += c;
  return k;
}

int OccupationProfile::largest_part() const {
  return counts_.empty() ? 0 : counts_.rbegin()->first;
}

std::vector<int> OccupationProfile::parts() const {
  std::vector<int> out;
  for (auto it = counts_.rbegin(); it != counts_.rend(); ++it) {
    out.insert(out.end(), static_cast<std::size_t>(it->second), it->first);
  }
  return out;
}

std::string OccupationProfile::to_string() const {
  std::ostringstream os;
  os << '{';
  bool first = true;
  for (const auto& [j, c] : counts_) {
    if (!first) os << ',';
    os << j << ':' << c;
    first = false;
  }
  os << '}';
  return os.str();
}

bool report_order(const OccupationProfile& a, const OccupationProfile& b) {
  const auto pa = a.parts();
  const auto pb = b.parts();
  return std::lexicographical_compare(pb.begin(), pb.end(), pa.begin(), pa.end());
}

Configuration::Configuration(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
  for (const auto& a : atoms_) {
    if (a.mult < 1) throw std::invalid_argument("atom multiplicity must be >= 1");
  }
  normalize();
}

void Configuration::add(double site, std::int64_t mult) {
  if (mult < 1) throw std::invalid_argument("atom multiplicity must be >= 1");
  auto it = std::lower_bound(atoms_.begin(), atoms_.end(), site,
                             [](const Atom& a, double s) { return a.site < s; });
  if (it != atoms_.end() && it->site == site) {
    it->mult += mult;
  } else {
    atoms_.insert(it, Atom{site, mult});
  }
}

void Configuration::normalize() {
  std::sort(atoms_.begin(), atoms_.end(),
            [](const Atom& a, const Atom& b) { return a.site < b.site; });
  std::vector<Atom> merged;
  merged.reserve(atoms_.size());
  for (const auto& a : atoms_) {
    if (!merged.empty() && merged.back().site == a.site) {
      merged.back().mult += a.mult;
    } else {
      merged.push_back(a);
    }
  }
  atoms_ = std::move(merged);
}

Configuration Configuration::restricted_to(const Window& b) const {
  Configuration out;
  for (const auto& a : atoms_) {
    if (b.contains(a.site)) out.atoms_.push_back(a);
  }
  return out;
}

Configuration Configuration::outside_of(const Window& b) const {
  Configuration out;
  for (const auto& a : atoms_) {
    if (!b.contains(a.site)) out.atoms_.push_back(a);
  }
  return out;
}

Configuration Configuration::operator+(const Configuration& other) const {
  std::vector<Atom> all = atoms_;
  all.insert(all.end(), other.atoms_.begin(), other.atoms_.end());
  return Configuration(std::move(all));
}

std::int64_t zeta(const Configuration& cfg, const Window& b) {
  std::int64_t total = 0;
  for (const auto& a : cfg.atoms()) {
    if (b.contains(a.site)) total += a.mult;
  }
  return total;
}

std::int64_t xi(const Configuration& cfg, const Window& b) {
  std::int64_t count = 0;
  for (const auto& a : cfg.atoms()) {
    if (b.contains(a.site)) ++count;
  }
  return count;
}

OccupationProfile occupation_profile(const Configuration& cfg, const Window& b) {
  OccupationProfile gamma;
  for (const auto& a : cfg.atoms()) {
    if (b.contains(a.site)) gamma.add(static_cast<int>(a.mult));
  }
  return gamma;
}

RandomSource::RandomSource(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  engine_.seed(seq);
}

RandomSource RandomSource::split(std::uint64_t index) const {
  return RandomSource(seed_, splitmix64(stream_ ^ splitmix64(index + 1)));
}

double RandomSource::uniform() {
  // 53 random mantissa bits; never returns 1.0.
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RandomSource::uniform(const Window& b) {
  const double x = b.lo() + uniform() * b.length();
  return x < b.hi() ? x : std::nextafter(b.hi(), b.lo());
}

}  // namespace polya
