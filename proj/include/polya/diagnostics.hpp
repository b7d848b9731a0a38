#pragma once

#include <functional>
#include <string>
#include <vector>

#include "polya/core.hpp"
#include "polya/ensembles.hpp"
#include "polya/stats.hpp"

namespace polya {

struct StepPiece {
  Window window;
  double level = 0.0;
};

/// Nonnegative step function with finitely many disjoint pieces; zero off
/// the pieces.
class StepFunction {
public:
  StepFunction() = default;
  /// Throws std::invalid_argument for negative or non-finite levels or
  /// overlapping pieces.
  explicit StepFunction(std::vector<StepPiece> pieces);

  static StepFunction constant(const Window& b, double level);

  double operator()(double x) const;
  /// mu(f) = sum over atoms of mult * f(site).
  double apply(const Configuration& cfg) const;
  bool supported_in(const Window& b) const;
  /// Piece endpoints, sorted and deduplicated.
  std::vector<double> breakpoints() const;
  const std::vector<StepPiece>& pieces() const { return pieces_; }

private:
  std::vector<StepPiece> pieces_;
};

/// h(x, mu) = g(x) exp(-mu(f)).
struct TestFunction {
  StepFunction g;
  StepFunction f;
};

/// int g(x) exp(-f(x)) w dx, exact for step functions.
double integral_g_exp_minus_f(const TestFunction& h, double w);

/// exp{-w sum_pieces len * log((1 - z e^{-c}) / (1 - z))}.
double laplace_closed_form(const StepFunction& f, const ModelParams& params);

using ConfigurationSampler = std::function<Configuration(RandomSource&)>;

/// Sum over atoms (x, m) of m g(x) exp(-mu(f)), averaged over n draws of Poy.
McEstimate estimate_campbell(const TestFunction& h, const ModelParams& params, const Window& b,
                             std::int64_t n, const RandomSource& rng);

struct IdentityReport {
  std::string name;
  McEstimate lhs;
  /// se = 0 when the side is a closed form.
  McEstimate rhs;
  double difference = 0.0;
  double pooled_se = 0.0;
  double relative_error = 0.0;
  double relative_cap = 0.0;
  bool pass = false;
};

/// Pass iff |lhs - rhs| < 3 pooled se and the relative error is below the cap.
/// Two zero sides pass.
void judge(IdentityReport& report, double relative_cap);

/// C_P(h) against z * E[ int h(x, mu + delta_x) (rho + mu)(dx) ] for mu drawn
/// from `sampler`. LHS and RHS use independent streams.
IdentityReport check_integral_equation(const TestFunction& h, double z, double w,
                                       const ConfigurationSampler& sampler, std::int64_t n,
                                       const RandomSource& rng);
IdentityReport check_integral_equation(const TestFunction& h, const ModelParams& params,
                                       const Window& b, std::int64_t n, const RandomSource& rng);

/// Poisson process of intensity z/(1-z) rho with unit multiplicities: same
/// first moment as Poy_{z, rho}, no reinforcement.
Configuration sample_poisson_control(const ModelParams& params, const Window& b, RandomSource& rng);

/// C_P(h) against nu^1(B) E[g(x) exp(-(mu + G delta_x)(f))] with x uniform in
/// b and P(G = j) = (1-z) z^{j-1}.
IdentityReport check_palm(const TestFunction& h, const ModelParams& params, const Window& b,
                          std::int64_t n, const RandomSource& rng);

/// E exp(-mu(f)) against the closed-form Laplace functional.
IdentityReport check_laplace(const StepFunction& f, const ModelParams& params, const Window& b,
                             std::int64_t n, const RandomSource& rng);

struct GridPoint {
  double z = 0.0;
  double rho_mass = 0.0;
};

/// {0.3, 0.5, 0.7} x {0.5, 1, 2}.
std::vector<GridPoint> default_grid();

/// The fixed test pair used on B = [0, L): g = 1 then 2 on the halves of B,
/// f = log 2 then 1/2.
TestFunction standard_test_function(const Window& b);

struct VerifyReport {
  std::vector<GridPoint> grid;
  std::vector<IdentityReport> checks;
  IdentityReport negative_control;
  /// Every identity check passes and the Poisson control fails.
  bool all_pass() const;
};

/// Integral equation, Palm and Laplace checks at every grid point (w = 1,
/// B = [0, rho_mass)) plus the Poisson control at z = 0.5, rho(B) = 2.
VerifyReport verify_grid(const std::vector<GridPoint>& grid, std::int64_t n, const RandomSource& rng);

struct DistCheckReport {
  GridPoint point;
  std::int64_t n = 0;
  ChiSquareResult zeta_negbin;
  ChiSquareResult xi_poisson;
  ChiSquareResult multiplicity_logarithmic;
  /// Homogeneity of the joint (xi, zeta, gamma(1)) law under both samplers.
  ChiSquareResult levy_vs_urn;

  bool pass(double alpha = 0.01) const;
};

/// Draws n configurations from each sampler on B = [0, rho_mass) with w = 1.
DistCheckReport dist_check(const GridPoint& point, std::int64_t n, const RandomSource& rng);

struct EnsembleCheck {
  ChiSquareResult chi;
  std::int64_t n = 0;
  /// Observed profiles (total-height and size-and-height kernels).
  std::map<OccupationProfile, std::int64_t> profiles;
  /// Observed per-site multiplicities (occupied-sites kernel).
  CountHistogram multiplicities;
};

/// Chi-square comparison of n kernel draws on cond.window against the exact
/// conditional law: per-site multiplicities against logarithmic(z) for the
/// occupied-sites kernel, occupation profiles against the partition law
/// otherwise (m up to the enumeration bound).
EnsembleCheck ensemble_gof(const EnsembleCondition& cond, const ModelParams& params, std::int64_t n,
                           const RandomSource& rng);

/// Profile histogram against an exact law, cells in the law's order; a profile
/// outside the support gives an infinite statistic.
ChiSquareResult profile_gof(const std::map<OccupationProfile, std::int64_t>& observed,
                            const PartitionLaw& law);

}  // namespace polya
