#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "cube_transport/grid.hpp"

namespace cube_transport {

/// Nonnegative cell-centred values on a Grid, read as a piecewise-constant
/// density. All integrals are cell sums times the cell volume.
class GridDensity {
 public:
  GridDensity(Grid grid, std::vector<double> values);

  const Grid& grid() const noexcept { return grid_; }
  std::span<const double> values() const noexcept { return values_; }
  double value(std::size_t flat) const noexcept { return values_[flat]; }
  double total_mass() const noexcept { return total_mass_; }

  /// Piecewise-constant value at a point (clamped into the cube).
  double value_at_point(std::span<const double> x) const;

  /// True iff every cell is strictly positive.
  bool is_positive() const noexcept;

 private:
  Grid grid_;
  std::vector<double> values_;
  double total_mass_;
};

// Analytic families that can be sampled onto a grid.

/// exp(-(x - c)^T A (x - c) / 2) with A the inverse covariance.
struct RestrictedGaussian {
  std::vector<double> center;
  std::vector<std::vector<double>> inverse_covariance;
};

/// exp(x . v)
struct ExponentialTilt {
  std::vector<double> v;
};

/// (b + x . v)^p with p >= 1; log-concave and convex.
struct ConvexPower {
  double b = 0.0;
  std::vector<double> v;
  double p = 1.0;
};

struct Uniform {};

/// Gaussian with covariance scale^2 (Id + J), J the all-ones matrix; this is
/// the law of (X_1 + X_0, ..., X_n + X_0) * scale for i.i.d. standard normals.
struct CorrelatedGaussianRemark {
  int n = 2;
  double scale = 0.0;
};

/// Explicit cell values in flat grid order.
struct CustomGrid {
  std::vector<double> values;
};

using DensitySpec = std::variant<RestrictedGaussian, ExponentialTilt, ConvexPower, Uniform,
                                 CorrelatedGaussianRemark, CustomGrid>;

/// Default scale 1 / (100 sqrt(log n)) of the correlated construction.
double remark_default_scale(int n);

std::string variant_name(const DensitySpec& spec);

/// Evaluates `spec` at cell centres and normalizes to total mass one.
/// Throws kInvalidSpec for parameter mismatches or nonpositive values.
GridDensity build_density(const DensitySpec& spec, const Grid& grid);

/// Scales values uniformly so the total mass is one. Throws
/// kDegenerateDensity on zero mass.
GridDensity normalize(const GridDensity& d);

/// Smallest R >= 1 with f(mid) <= R (f(a) + f(b)) / 2 over all axis-parallel
/// grid triples whose midpoint is a cell centre.
double estimate_axis_convexity_ratio(const GridDensity& d);

struct LogConcavityCheck {
  bool log_concave = true;
  /// max over triples of 1 - f(mid)^2 / (f(a) f(b)), clamped at zero.
  double worst_violation = 0.0;
};

/// Midpoint log-concavity over axis and diagonal directions in {-1,0,1}^n.
LogConcavityCheck check_midpoint_log_concavity(const GridDensity& d, double tol);

/// max over axes and interior cells of the centred second difference of
/// psi = -log f divided by h^2.
double estimate_diag_second_derivative_bound(const GridDensity& d);

/// pi(f)(y) = h * sum_r f(y, r). Requires dim >= 2.
GridDensity marginalize_last(const GridDensity& d);

/// Unnormalized 1D slice along the last axis at base index `y_index`.
GridDensity fiber(const GridDensity& d, std::span<const int> y_index);

/// Partial derivative of the cell values along `axis`: centred differences
/// in the interior, one-sided at the two boundary cells.
std::vector<double> finite_difference(const GridDensity& d, int axis);
/// Same scheme for arbitrary cell values on `grid`.
std::vector<double> finite_difference(const Grid& grid, std::span<const double> values, int axis);

/// Marginal onto one axis (dimension 1).
GridDensity axis_marginal(const GridDensity& d, int axis);

/// Normalized CDF of a 1D density at its m + 1 nodes.
std::vector<double> node_cdf(const GridDensity& d1);

/// Stable hex fingerprint of grid geometry and values.
std::string fingerprint(const GridDensity& d);

// Serialization: a JSON header {dim, m, origin, side, format, values_file}
// plus the values as CSV (one per line) or raw little-endian doubles.

enum class ValuesFormat { kCsv, kBinary };

/// Writes `<stem>.json` and `<stem>.csv` / `<stem>.bin`; returns the header path.
std::filesystem::path write_grid_density(const GridDensity& d, const std::filesystem::path& stem,
                                         ValuesFormat format = ValuesFormat::kCsv);
GridDensity read_grid_density(const std::filesystem::path& header);

}  // namespace cube_transport
