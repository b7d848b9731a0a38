#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "polya/core.hpp"
#include "polya/ensembles.hpp"
#include "polya/sampler.hpp"
#include "polya/stats.hpp"

namespace polya {

/// Statistics that cannot come from any Polya sum process, e.g. v >= u > 0.
class InfeasibleStatistics : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

class NumericError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Window counts normalized by the reference mass rho(B).
struct LimitStats {
  double rho_mass = 0.0;
  std::int64_t zeta = 0;
  std::int64_t xi = 0;

  double u() const { return static_cast<double>(zeta) / rho_mass; }
  double v() const { return static_cast<double>(xi) / rho_mass; }
  /// xi / (-log(1-z) rho(B)).
  double w_hat(double z) const;
};

LimitStats limit_stats(const Configuration& cfg, const Window& b, const GroundIntensity& rho = {});

/// Stats on B_1, ..., B_K of the chain B_k = [0, k delta).
std::vector<LimitStats> limit_stats_along_chain(const Configuration& cfg, int K, double delta = 1.0,
                                                const GroundIntensity& rho = {});

struct Estimate {
  double value = 0.0;
  double se = 0.0;
};

/// Occupied-sites ensemble: w = xi / (-log(1-z) rho(B)), se from the Poisson
/// variance of xi.
Estimate recover_w_occupied(const LimitStats& stats, double z);

/// Total-height ensemble: Z solves Z/(1-Z) = u.
double recover_z_height(double u);

struct ZW {
  double z = 0.0;
  double w = 0.0;
};

/// (z, w) -> (w z/(1-z), -w log(1-z)).
std::array<double, 2> forward_map(double z, double w);

/// (z/(1-z)) / (-log(1-z)): mean multiplicity per occupied site. Strictly
/// increasing from 1 (z -> 0) to infinity (z -> 1).
double mean_multiplicity(double z);

/// Checks strict monotonicity of mean_multiplicity on a uniform grid in (0,1).
bool mean_multiplicity_is_monotone(int grid_points = 10000);

/// Size-and-height ensemble: solves w z/(1-z) = u, -w log(1-z) = v by
/// bisection on mean_multiplicity(z) = u/v. (0,0) maps to (0,0). Throws
/// InfeasibleStatistics unless u > v > 0 or u = v = 0.
ZW recover_zw_size_height(double u, double v);

/// Nonnegative measure kappa(1..J) on the positive integers.
struct RateMeasure {
  Eigen::VectorXd values;

  RateMeasure() = default;
  explicit RateMeasure(Eigen::VectorXd v) : values(std::move(v)) {}

  int support() const { return static_cast<int>(values.size()); }
  double operator()(int j) const { return values(j - 1); }
  double mass() const { return values.sum(); }
  double first_moment() const;
};

/// tau_z(j) = z^j / j, j = 1..J.
Eigen::VectorXd tau_vector(double z, int J);

/// I(kappa; tau_z) = sum_j tau_z(j) (f log f - f + 1), f = kappa/tau_z, with
/// kappa taken as zero beyond its support (each such j contributes tau_z(j)).
/// +inf if kappa(j) > 0 where tau_z(j) underflows to zero.
double rate_function(const RateMeasure& kappa, double z);

/// Closed-form minimizer of I over {kappa(id) = u} or, with v, over
/// {kappa(id) = u, kappa(N) = v}: kappa(j) = w z^j / j (w = 1 without v).
/// The reference z of I does not enter.
RateMeasure analytic_minimizer(double u, std::optional<double> v, int J);

struct MinimizerResult {
  RateMeasure kappa;
  double rate = 0.0;
  int iterations = 0;
  /// lambda_1 (first moment) and lambda_2 (mass, zero without v).
  std::array<double, 2> multipliers{0.0, 0.0};
};

/// Minimizes I(.; tau_{z_ref}) over [0,inf)^J under the same constraints by a
/// damped Newton iteration on the convex dual: kappa(j) = tau(j) exp(l1 j + l2).
/// Throws NumericError after 200 iterations without convergence.
MinimizerResult numeric_minimizer(double u, std::optional<double> v, double z_ref, int J);

/// Mean total-variation distance between gamma_B / rho(B) under the
/// total-height kernel with m = u rho(B) points and the limit profile
/// sum_j z_u^j / j delta_j. rho(B) * u must be an integer.
McEstimate total_height_profile_distance(double u, double rho_mass, std::int64_t samples,
                                         const RandomSource& rng);

/// Posterior over a finite prior given zeta_B, xi_B on a window of reference
/// mass rho(B). The profile likelihood reduces to
/// xi log(w rho) + zeta log z + w rho log(1-z).
std::vector<double> posterior_weights(const DiscretePrior& prior, std::int64_t zeta,
                                      std::int64_t xi, double rho_mass);

struct PosteriorReport {
  std::vector<int> checkpoints;
  /// Median over replicas of the posterior mass on the prior atom that
  /// generated the data, one entry per checkpoint.
  std::vector<double> median_mass_on_truth;
  std::vector<double> mean_mass_on_truth;
  std::int64_t replicas = 0;
};

/// Draws (theta, mu) from the mixture on B_K and evaluates the exact posterior
/// on the sub-windows B_k, k in checkpoints.
PosteriorReport posterior_concentration_experiment(const DiscretePrior& prior, int K, double delta,
                                                   std::vector<int> checkpoints,
                                                   std::int64_t replicas, const RandomSource& rng);

struct RecoveryReport {
  EnsembleKind kind = EnsembleKind::OccupiedSites;
  ModelParams truth;
  double rho_mass = 0.0;
  std::vector<double> z_hat;
  std::vector<double> w_hat;

  struct Tolerance {
    std::optional<double> z_abs;
    std::optional<double> z_rel;
    std::optional<double> w_rel;
  };
  /// Fraction of replicas meeting every tolerance that is set.
  double fraction_within(const Tolerance& tol) const;
};

/// Repeatedly samples Poy_{z, w Leb} on [0, length) and recovers the
/// parameters the chosen ensemble identifies (w for sites, z for height, both
/// for size-and-height; the other coordinate is copied from the truth).
RecoveryReport boundary_recovery_experiment(EnsembleKind kind, const ModelParams& truth,
                                            double length, std::int64_t replicas,
                                            const RandomSource& rng);

}  // namespace polya
