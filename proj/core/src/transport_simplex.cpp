#include "cube_transport/transport_simplex.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

#include "cube_transport/error.hpp"

namespace cube_transport {

namespace {

struct BasicCell {
  std::size_t row;
  std::size_t col;
  double flow;
};

// Spanning tree over rows [0, R) and columns [R, R + C).
class BasisTree {
 public:
  BasisTree(std::size_t rows, std::size_t cols) : rows_(rows), adjacency_(rows + cols) {}

  void rebuild(const std::vector<BasicCell>& basis) {
    for (auto& list : adjacency_) {
      list.clear();
    }
    for (std::size_t b = 0; b < basis.size(); ++b) {
      adjacency_[basis[b].row].push_back(b);
      adjacency_[rows_ + basis[b].col].push_back(b);
    }
  }

  void potentials(const std::vector<BasicCell>& basis, std::span<const double> cost, std::size_t cols,
                  std::vector<double>& u, std::vector<double>& v) const {
    std::vector<char> seen(adjacency_.size(), 0);
    std::deque<std::size_t> queue{0};
    seen[0] = 1;
    u[0] = 0.0;
    while (!queue.empty()) {
      const std::size_t node = queue.front();
      queue.pop_front();
      for (std::size_t b : adjacency_[node]) {
        const auto& cell = basis[b];
        const double c = cost[cell.row * cols + cell.col];
        const std::size_t col_node = rows_ + cell.col;
        if (node < rows_ && !seen[col_node]) {
          v[cell.col] = c - u[cell.row];
          seen[col_node] = 1;
          queue.push_back(col_node);
        } else if (node >= rows_ && !seen[cell.row]) {
          u[cell.row] = c - v[cell.col];
          seen[cell.row] = 1;
          queue.push_back(cell.row);
        }
      }
    }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
      throw Error(ErrorCode::kPrecondition, "transportation basis is not a spanning tree");
    }
  }

  // Basis indices along the tree path from column `col` to row `row`.
  std::vector<std::size_t> path(const std::vector<BasicCell>& basis, std::size_t col, std::size_t row) const {
    const std::size_t start = rows_ + col;
    std::vector<std::size_t> via(adjacency_.size(), kNone);
    std::vector<char> seen(adjacency_.size(), 0);
    std::deque<std::size_t> queue{start};
    seen[start] = 1;
    while (!queue.empty() && !seen[row]) {
      const std::size_t node = queue.front();
      queue.pop_front();
      for (std::size_t b : adjacency_[node]) {
        const std::size_t next = node < rows_ ? rows_ + basis[b].col : basis[b].row;
        if (!seen[next]) {
          seen[next] = 1;
          via[next] = b;
          queue.push_back(next);
        }
      }
    }
    std::vector<std::size_t> edges;
    for (std::size_t node = row; node != start;) {
      const std::size_t b = via[node];
      edges.push_back(b);
      node = node < rows_ ? rows_ + basis[b].col : basis[b].row;
    }
    std::reverse(edges.begin(), edges.end());
    return edges;
  }

 private:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::size_t rows_;
  std::vector<std::vector<std::size_t>> adjacency_;
};

}  // namespace

TransportSolution solve_transportation(std::span<const double> supply, std::span<const double> demand,
                                       std::span<const double> cost) {
  const std::size_t rows = supply.size();
  const std::size_t cols = demand.size();
  if (rows == 0 || cols == 0 || cost.size() != rows * cols) {
    throw Error(ErrorCode::kDimension, "transportation problem has inconsistent sizes");
  }
  const double total_supply = std::accumulate(supply.begin(), supply.end(), 0.0);
  const double total_demand = std::accumulate(demand.begin(), demand.end(), 0.0);
  if (std::any_of(supply.begin(), supply.end(), [](double s) { return !(s >= 0.0); }) ||
      std::any_of(demand.begin(), demand.end(), [](double d) { return !(d >= 0.0); })) {
    throw Error(ErrorCode::kPrecondition, "supplies and demands must be nonnegative");
  }
  if (std::abs(total_supply - total_demand) > 1e-9 * std::max(1.0, total_supply)) {
    throw Error(ErrorCode::kPrecondition, "unbalanced transportation problem");
  }

  // North-west corner: a staircase of rows + cols - 1 cells, always a tree.
  std::vector<BasicCell> basis;
  basis.reserve(rows + cols - 1);
  {
    std::size_t i = 0;
    std::size_t j = 0;
    double left_row = supply[0];
    double left_col = demand[0];
    while (true) {
      const double flow = std::max(0.0, std::min(left_row, left_col));
      basis.push_back({i, j, flow});
      left_row -= flow;
      left_col -= flow;
      if (i + 1 == rows && j + 1 == cols) {
        break;
      }
      if (j + 1 == cols || (i + 1 < rows && left_row <= left_col)) {
        ++i;
        left_row = supply[i];
      } else {
        ++j;
        left_col = demand[j];
      }
    }
  }

  const double max_cost = *std::max_element(cost.begin(), cost.end());
  const double eps = 1e-12 * std::max(1.0, std::abs(max_cost));
  const std::size_t max_pivots = 64 * (rows + cols) * (rows + cols) + 1000;

  BasisTree tree(rows, cols);
  TransportSolution solution;
  solution.u.assign(rows, 0.0);
  solution.v.assign(cols, 0.0);
  while (true) {
    tree.rebuild(basis);
    tree.potentials(basis, cost, cols, solution.u, solution.v);

    double best = -eps;
    std::size_t enter_row = rows;
    std::size_t enter_col = cols;
    for (std::size_t i = 0; i < rows; ++i) {
      const double ui = solution.u[i];
      const double* row_cost = cost.data() + i * cols;
      for (std::size_t j = 0; j < cols; ++j) {
        const double reduced = row_cost[j] - ui - solution.v[j];
        if (reduced < best) {
          best = reduced;
          enter_row = i;
          enter_col = j;
        }
      }
    }
    if (enter_row == rows) {
      break;
    }
    if (++solution.pivots > max_pivots) {
      throw Error(ErrorCode::kPrecondition, "transportation simplex did not converge");
    }

    // Cycle: entering cell (+), then the tree path from its column back to
    // its row with alternating signs starting with (-).
    const auto cycle = tree.path(basis, enter_col, enter_row);
    double theta = std::numeric_limits<double>::infinity();
    std::size_t leaving = cycle.front();
    for (std::size_t k = 0; k < cycle.size(); k += 2) {
      if (basis[cycle[k]].flow < theta) {
        theta = basis[cycle[k]].flow;
        leaving = cycle[k];
      }
    }
    for (std::size_t k = 0; k < cycle.size(); ++k) {
      basis[cycle[k]].flow += (k % 2 == 0) ? -theta : theta;
    }
    basis[leaving] = {enter_row, enter_col, theta};
  }

  for (const auto& cell : basis) {
    if (cell.flow > 0.0) {
      solution.plan.push_back({cell.row, cell.col, cell.flow});
      solution.cost += cell.flow * cost[cell.row * cols + cell.col];
    }
  }
  std::sort(solution.plan.begin(), solution.plan.end(), [](const PlanEntry& a, const PlanEntry& b) {
    return a.source != b.source ? a.source < b.source : a.target < b.target;
  });
  return solution;
}

}  // namespace cube_transport
