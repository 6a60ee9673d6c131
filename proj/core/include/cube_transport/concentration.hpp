#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cube_transport/density.hpp"
#include "cube_transport/sampler.hpp"
#include "cube_transport/verification.hpp"

namespace cube_transport {

/// 3 ell exp(M ell^2 / 8)
double alpha_theorem1(double ell, double M);
/// exp(M ell^2 / 8); alpha_theorem1(ell, M) = 3 ell r_from_m(M, ell).
double r_from_m(double M, double ell = 1.0);

/// t -> mu({x . u <= c + t}) for the halfspace A = {x . u <= c} through the
/// mu-median c, against 1 - exp(-t^2 / alpha^2).
struct ConcentrationProfile {
  std::vector<double> direction;
  double median = 0.0;
  double mass_of_a = 0.0;
  double alpha = 0.0;
  std::vector<double> ts;
  std::vector<double> measured;
  /// Monte Carlo standard error; zero in grid mode.
  std::vector<double> standard_error;
  std::vector<double> bound;
  /// Number of samples; zero in grid mode.
  std::size_t sample_count = 0;
};

/// Grid mode: exact masses of the piecewise-constant density.
ConcentrationProfile halfspace_profile(const GridDensity& mu, std::span<const double> u, std::span<const double> ts,
                                       double alpha);
/// Sample mode: empirical fractions with binomial standard errors.
ConcentrationProfile halfspace_profile(const SampleBatch& batch, std::span<const double> u,
                                       std::span<const double> ts, double alpha);

/// measured + 3 SE >= bound at every t. The report carries the tightest t:
/// lhs = bound, rhs = measured + 3 SE there.
VerificationReport check_concentration(const ConcentrationProfile& profile, std::string name, std::string tag,
                                       int grid_m = 0);

/// Empirical mu{|F - mean F| >= t} with a least-squares fit of
/// log tail = log C - c t^2 / alpha^2 over the positive tails.
struct TailFit {
  std::vector<double> ts;
  std::vector<double> tails;
  double mean = 0.0;
  double c = 0.0;
  double C = 0.0;
  std::size_t fitted_points = 0;
};
TailFit lipschitz_tail(const SampleBatch& batch, const std::function<double(std::span<const double>)>& fn,
                       std::span<const double> ts, double alpha);

struct CovarianceSummary {
  /// Row-major n x n covariance.
  std::vector<double> covariance;
  double top_eigenvalue = 0.0;
  std::vector<double> top_eigenvector;
  /// top_eigenvalue / alpha^2
  double ratio = 0.0;
};
/// Exact covariance of the piecewise-constant density (cell centres plus
/// the within-cell variance h^2 / 12).
CovarianceSummary covariance_ratio(const GridDensity& mu, double alpha);
CovarianceSummary covariance_ratio(const SampleBatch& batch, double alpha);
/// Soft check ratio <= 1.
VerificationReport covariance_report(const CovarianceSummary& summary, std::string name, int grid_m = 0);

struct TestFunction {
  std::string name;
  /// Cell values in flat grid order.
  std::vector<double> values;
};

struct FunctionalInequalityChecks {
  std::vector<VerificationReport> reports;
  /// Functions that vanish after normalization (LSI not applicable).
  std::vector<std::string> skipped;
};

/// Poincare: int f^2 <= (20/9) ell^2 e^{M ell^2/4} int |grad f|^2 for centred f.
/// Log-Sobolev: int f^2 log f^2 <= (160/9) ell^2 e^{M ell^2/4} int |grad f|^2
/// for f scaled to int f^2 = 1. Gradients by finite differences.
FunctionalInequalityChecks poincare_lsi_check(const GridDensity& mu, double M, double ell,
                                              std::span<const TestFunction> fns, Tolerance tol = {});

struct ScalingRow {
  int n = 0;
  double t_star = 0.0;
  double predicted = 0.0;
  double mass_of_a = 0.0;
  double acceptance_rate = 0.0;
  double m_hat = 0.0;
};

struct ScalingTable {
  std::vector<ScalingRow> rows;
  std::size_t sample_count = 0;
  std::uint64_t seed = 0;
  /// kappa in predicted = kappa sqrt(n / log n), fitted at the smallest n.
  double kappa = 0.0;
  /// Least-squares slope of log t_star against log n.
  double slope = 0.0;
};

/// Euclidean distance from y in [-1/2, 1/2]^n to {x in the cube : sum x <= 0}.
double distance_to_negative_halfcube(std::span<const double> y);

/// For each n, t_star = largest t with empirical mu(A + tB) <= 2/3 for
/// A = {sum x <= 0} under the conditioned correlated Gaussian.
ScalingTable counterexample_scaling(std::span<const int> ns, std::size_t count, std::uint64_t seed,
                                    int threads = 1);

nlohmann::json to_json(const ConcentrationProfile& p);
nlohmann::json to_json(const TailFit& fit);
nlohmann::json to_json(const CovarianceSummary& s);
nlohmann::json to_json(const ScalingTable& table);

/// Columns t,measured,se,bound.
void write_profile_csv(const ConcentrationProfile& p, const std::filesystem::path& path);
/// Columns n,t_star,predicted,mass_of_a,acceptance_rate,m_hat.
void write_scaling_csv(const ScalingTable& table, const std::filesystem::path& path);

/// Line plot: measured curve, bound curve and the measured +- 3 SE band.
std::string profile_svg(const ConcentrationProfile& p, const std::string& title);
void write_profile_svg(const ConcentrationProfile& p, const std::string& title, const std::filesystem::path& path);

}  // namespace cube_transport
