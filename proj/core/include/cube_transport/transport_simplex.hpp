#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cube_transport {

struct PlanEntry {
  std::size_t source = 0;
  std::size_t target = 0;
  double weight = 0.0;
};

/// Optimal basic solution of a balanced transportation problem with dual
/// potentials: cost(i, j) - u[i] - v[j] >= 0 everywhere, with equality on
/// the basis.
struct TransportSolution {
  double cost = 0.0;
  std::vector<PlanEntry> plan;
  std::vector<double> u;
  std::vector<double> v;
  std::size_t pivots = 0;
};

/// Transportation simplex (MODI) started from the north-west corner rule.
/// `cost` is row-major supply.size() x demand.size(); supplies and demands
/// must be nonnegative with equal totals.
TransportSolution solve_transportation(std::span<const double> supply, std::span<const double> demand,
                                       std::span<const double> cost);

}  // namespace cube_transport
