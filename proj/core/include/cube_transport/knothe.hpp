#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "cube_transport/density.hpp"
#include "cube_transport/transport1d.hpp"
#include "cube_transport/verification.hpp"

namespace cube_transport {

/// Triangular transport T(y, r) = (P(y), T_y(r)): P is the Knothe map of the
/// (n-1)-marginals and T_y the monotone map of each last-coordinate fiber.
///
/// The fiber target at base cell y is g interpolated multilinearly in the
/// base coordinates at P(centre of y). The stored displacement is
/// theta = T - id at every cell centre.
class KnotheMap {
 public:
  int dim() const noexcept { return grid_.dim(); }
  const Grid& grid() const noexcept { return grid_; }

  /// Map of the first dim - 1 coordinates; null in dimension one.
  const KnotheMap* base() const noexcept { return base_.get(); }
  /// One monotone map per base cell (a single map in dimension one).
  std::span<const MonotoneMap1D> fiber_maps() const noexcept { return fibers_; }

  std::span<const double> displacement(std::size_t cell) const noexcept {
    return std::span<const double>(displacement_).subspan(cell * static_cast<std::size_t>(dim()),
                                                          static_cast<std::size_t>(dim()));
  }
  std::span<const double> displacement_field() const noexcept { return displacement_; }

  /// T(x) at an arbitrary point of the cube: P(y) recursively, then the
  /// fiber map of the base cell containing y.
  void evaluate(std::span<const double> x, std::span<double> out) const;

 private:
  friend KnotheMap knothe_map(const GridDensity& f, const GridDensity& g, int threads);

  explicit KnotheMap(Grid grid) : grid_(std::move(grid)) {}

  Grid grid_;
  std::shared_ptr<const KnotheMap> base_;
  std::vector<MonotoneMap1D> fibers_;
  std::vector<double> displacement_;
};

/// Recursive Knothe construction, conditioning on the last coordinate.
/// f and g must be positive on the same grid.
KnotheMap knothe_map(const GridDensity& f, const GridDensity& g, int threads = 1);

/// Fiber of g along the last axis, interpolated multilinearly at a point
/// `base_point` of the first dim - 1 coordinates (constant beyond the
/// outermost cell centres).
GridDensity interpolated_fiber(const GridDensity& g, std::span<const double> base_point);

/// Multilinear interpolation of cell-centred values at x (clamped).
double interpolate(const GridDensity& d, std::span<const double> x);

/// sum |theta|^2 f h^n
double displacement_cost(const KnotheMap& map, const GridDensity& f);

struct CostSplit {
  /// sum_y |P(y) - y|^2 pi(f)(y) h^(n-1)
  double base = 0.0;
  /// sum_{y,r} |T_y(r) - r|^2 f(y, r) h^n
  double fibers = 0.0;
};
CostSplit split_displacement_cost(const KnotheMap& map, const GridDensity& f);

/// int S_T{g, f} with grad f by finite differences and g(T x) by
/// multilinear interpolation.
double s_integral_nd(const GridDensity& f, const GridDensity& g, const KnotheMap& map);

/// s_integral_nd - (int f) log(int g / int f): a lower bound for Tire(g || f).
double tire_bracket(const GridDensity& f, const GridDensity& g, const KnotheMap& map);

/// int |T(x) - x|^2 f  <=  (40/9) R^2 * tire_bracket   on the unit cube.
VerificationReport check_theorem31(const GridDensity& f, const GridDensity& g, const KnotheMap& map, double R,
                                   Tolerance tol = {});
VerificationReport check_theorem31(const GridDensity& f, const GridDensity& g, double R, Tolerance tol = {});

/// Max over coordinates of the Kolmogorov distance between the marginals of
/// T(X), X ~ f, and the marginals of g.
double pushforward_error(const KnotheMap& map, const GridDensity& f, const GridDensity& g, std::size_t count,
                         std::uint64_t seed, int threads = 1);

/// max |theta_i| over points of the facets {x_i = lower} and {x_i = upper},
/// evaluated at the facet projection of every boundary cell; passes iff <= 2h.
VerificationReport check_facet_preservation(const KnotheMap& map);

/// CSV with columns i0..i{n-1}, theta0..theta{n-1}.
void write_displacement_csv(const KnotheMap& map, const std::filesystem::path& path);

}  // namespace cube_transport
