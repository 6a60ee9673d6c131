#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "cube_transport/density.hpp"
#include "cube_transport/knothe.hpp"
#include "cube_transport/transport_simplex.hpp"
#include "cube_transport/verification.hpp"

namespace cube_transport {

/// D(g || f) = sum g log(g / f) h^n for the normalized densities, with
/// 0 log 0 = 0. Returns +infinity when g > 0 on a cell where f = 0.
double relative_entropy(const GridDensity& g, const GridDensity& f);

/// tire_bracket(f, g, T) <= D(g || f). f must pass the midpoint
/// log-concavity check, otherwise kPrecondition is thrown.
VerificationReport check_tire_le_entropy(const GridDensity& f, const GridDensity& g, const KnotheMap& map,
                                         Tolerance tol = {});

struct LegendreBound {
  /// int [phi*(grad psi) f - f log f + grad f . x] - (int f) log(int g / int f)
  /// with psi = -log f, phi = -log g. Bounds tire_bracket for every map.
  double bound = 0.0;
  /// int [phi*(grad psi) - log((int g / int f) f) - n] f; equals `bound`
  /// minus `boundary_flux`.
  double whole_space_form = 0.0;
  /// int (grad f . x + n f), the boundary term dropped by the whole-space form.
  double boundary_flux = 0.0;
  /// phi* overflowed (non-finite or beyond exp range) on some cell.
  bool saturated = false;
  /// Every `target_stride`-th target cell enters the discrete sup.
  std::size_t target_stride = 1;
};

/// phi*(v) = max_y [v . y + log g(y)] over target cell centres with g > 0.
/// Above `max_targets` cells the targets are subsampled with a fixed stride;
/// the source cell itself is always included when both densities share a grid.
LegendreBound legendre_tire_bound(const GridDensity& f, const GridDensity& g,
                                  std::size_t max_targets = std::size_t{1} << 14);

/// Coupling between the cells of two grids; weights sum to one.
struct CouplingPlan {
  std::size_t source_cells = 0;
  std::size_t target_cells = 0;
  std::vector<PlanEntry> entries;

  std::vector<double> row_sums() const;
  std::vector<double> column_sums() const;
};

struct W2Result {
  double cost = 0.0;
  CouplingPlan plan;
};

inline constexpr std::size_t kMaxExactW2Cells = 4096;

/// Exact discrete W2^2 between the normalized densities, each cell split
/// into subdivisions^n equal atoms at the sub-cell centres (1: one atom per
/// cell centre). The plan is aggregated back to cells. Each side may hold at
/// most kMaxExactW2Cells atoms (kSizeLimit otherwise).
///
/// Centre atoms overestimate W2 of the piecewise-constant densities by
/// O(h^2); subdividing shrinks that bias by subdivisions^2.
W2Result exact_w2_small(const GridDensity& f, const GridDensity& g, int subdivisions = 1);

/// Cost of the discrete Knothe coupling between the same atoms
/// exact_w2_small uses: the base marginals (all axes but the last) are
/// coupled recursively, then each coupled pair of base atoms splits its mass
/// monotonically between the two conditional last-axis fibers. The plan is
/// feasible, so the result is never below exact_w2_small(f, g, subdivisions).
double discrete_knothe_cost(const GridDensity& f, const GridDensity& g, int subdivisions = 1);

/// Sparse CSV with header source_cell,target_cell,weight.
void write_plan_csv(const CouplingPlan& plan, const std::filesystem::path& path);

}  // namespace cube_transport
