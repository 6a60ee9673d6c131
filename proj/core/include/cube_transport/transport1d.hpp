#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "cube_transport/density.hpp"
#include "cube_transport/verification.hpp"

namespace cube_transport {

/// Lambda(t) = min(|t|, t^2).
inline double lambda_cost(double t) noexcept {
  const double a = std::abs(t);
  return a < 1.0 ? a * a : a;
}

/// -log x + (x - 1) - (3/10) Lambda(x - 1); nonnegative for every x > 0.
double log_inequality_gap(double x);

/// Increasing map T with F(x) = G(T(x)) for the normalized piecewise-linear
/// CDFs of two positive 1D grid densities.
class MonotoneMap1D {
 public:
  const Grid& source_grid() const noexcept { return source_; }
  const Grid& target_grid() const noexcept { return target_; }

  /// T at the m + 1 source cell boundaries.
  std::span<const double> node_values() const noexcept { return nodes_; }
  /// T' at the m source cell centres from the Jacobian identity.
  std::span<const double> derivative() const noexcept { return derivative_; }

  /// Exact G^{-1}(F(x)); x is clamped into the source interval.
  double operator()(double x) const noexcept;

  double source_cdf(double x) const noexcept;
  double target_quantile(double u) const noexcept;

 private:
  friend MonotoneMap1D monotone_map(const GridDensity& f, const GridDensity& g);

  MonotoneMap1D(Grid source, Grid target) : source_(std::move(source)), target_(std::move(target)) {}

  Grid source_;
  Grid target_;
  std::vector<double> source_cdf_;
  std::vector<double> target_cdf_;
  std::vector<double> nodes_;
  std::vector<double> derivative_;
};

/// Builds the monotone transportation map from f to g. Both must be 1D,
/// strictly positive, with positive mass.
MonotoneMap1D monotone_map(const GridDensity& f, const GridDensity& g);

/// (int g / int f) f(x) / g(T(x)) at source cell centres, g read
/// piecewise-constant at T(x). Throws kPositivity if g(T(x)) = 0.
std::vector<double> map_derivative(const MonotoneMap1D& map, const GridDensity& f, const GridDensity& g);

/// int S_T{g, f} - (int f) log(int g / int f) by the midpoint rule, with
/// S_T{g, f}(x) = f log(g(T x) / f) - f'(x) (T x - x) and f' from
/// finite_difference.
double deficit_1d(const GridDensity& f, const GridDensity& g, const MonotoneMap1D& map);

/// int Lambda(T' - 1) f  <=  (10/3) * deficit
VerificationReport check_lemma_lambda(const GridDensity& f, const GridDensity& g, Tolerance tol = {});

/// int |T(x) - x|^2 f  <=  (40/9) R^2 * deficit   (unit-length interval)
VerificationReport check_prop_quadratic(const GridDensity& f, const GridDensity& g, double R,
                                        Tolerance tol = {});

/// int_a^b rho  <=  (R/2) (rho(a) + rho(b))
VerificationReport check_segment_bound(const GridDensity& rho, double R, double a, double b,
                                       Tolerance tol = {});

/// int Lambda(f) rho  <=  (4/3) R^2 int Lambda(f') rho, for the piecewise
/// linear f through `test_f` (m + 1 node values, zero at both ends).
VerificationReport check_cheeger_lambda(const GridDensity& rho, double R, std::span<const double> test_f,
                                        Tolerance tol = {});

}  // namespace cube_transport
