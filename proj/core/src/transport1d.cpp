#include "cube_transport/transport1d.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cube_transport/error.hpp"

namespace cube_transport {

namespace {

void require_1d_positive(const GridDensity& d, const char* role) {
  if (d.grid().dim() != 1) {
    throw Error(ErrorCode::kDimension, std::string(role) + " must be one-dimensional");
  }
  if (!(d.total_mass() > 0.0)) {
    throw Error(ErrorCode::kDegenerateDensity, std::string(role) + " has zero mass");
  }
  if (!d.is_positive()) {
    throw Error(ErrorCode::kPositivity, std::string(role) + " must be strictly positive");
  }
}

void require_unit_interval(const Grid& grid, const char* what) {
  if (std::abs(grid.side() - 1.0) > 1e-12) {
    throw Error(ErrorCode::kPrecondition, std::string(what) + " requires an interval of length one");
  }
}

// Exact integral over [lo, hi] of Lambda(u) for u linear from u0 to u1.
double integrate_lambda_linear(double u0, double u1, double length) {
  if (length <= 0.0) {
    return 0.0;
  }
  // Split at the points where |u| crosses one.
  double cuts[4] = {0.0, 1.0, 1.0, 1.0};
  int count = 1;
  const double du = u1 - u0;
  if (du != 0.0) {
    for (double level : {-1.0, 1.0}) {
      const double s = (level - u0) / du;
      if (s > 0.0 && s < 1.0) {
        cuts[count++] = s;
      }
    }
  }
  cuts[count++] = 1.0;
  std::sort(cuts, cuts + count);
  double total = 0.0;
  for (int i = 0; i + 1 < count; ++i) {
    const double s0 = cuts[i];
    const double s1 = cuts[i + 1];
    if (s1 <= s0) {
      continue;
    }
    const double a = u0 + s0 * du;
    const double b = u0 + s1 * du;
    const double piece = (s1 - s0) * length;
    if (std::abs(0.5 * (a + b)) < 1.0) {
      total += piece * (a * a + a * b + b * b) / 3.0;
    } else {
      total += piece * 0.5 * (std::abs(a) + std::abs(b));
    }
  }
  return total;
}

}  // namespace

double log_inequality_gap(double x) {
  if (!(x > 0.0)) {
    throw Error(ErrorCode::kOutOfRange, "log inequality is stated for x > 0");
  }
  return -std::log(x) + (x - 1.0) - 0.3 * lambda_cost(x - 1.0);
}

double MonotoneMap1D::source_cdf(double x) const noexcept {
  const double h = source_.cell_width();
  if (x <= source_.lower(0)) {
    return 0.0;
  }
  if (x >= source_.upper(0)) {
    return 1.0;
  }
  const int k = source_.locate(0, x);
  const double s = (x - source_.node(0, k)) / h;
  const auto ku = static_cast<std::size_t>(k);
  return source_cdf_[ku] + s * (source_cdf_[ku + 1] - source_cdf_[ku]);
}

double MonotoneMap1D::target_quantile(double u) const noexcept {
  if (u <= 0.0) {
    return target_.lower(0);
  }
  if (u >= 1.0) {
    return target_.upper(0);
  }
  // First node with cdf > u; the segment before it has positive width.
  const auto it = std::upper_bound(target_cdf_.begin(), target_cdf_.end(), u);
  auto j = static_cast<std::size_t>(std::distance(target_cdf_.begin(), it));
  j = std::clamp<std::size_t>(j, 1, target_cdf_.size() - 1) - 1;
  const double width = target_cdf_[j + 1] - target_cdf_[j];
  const double s = width > 0.0 ? (u - target_cdf_[j]) / width : 0.0;
  return target_.node(0, static_cast<int>(j)) + s * target_.cell_width();
}

double MonotoneMap1D::operator()(double x) const noexcept { return target_quantile(source_cdf(x)); }

MonotoneMap1D monotone_map(const GridDensity& f, const GridDensity& g) {
  require_1d_positive(f, "source density");
  require_1d_positive(g, "target density");
  MonotoneMap1D map(f.grid(), g.grid());
  map.source_cdf_ = node_cdf(f);
  map.target_cdf_ = node_cdf(g);

  const int m = f.grid().cells_per_axis();
  map.nodes_.resize(static_cast<std::size_t>(m) + 1);
  for (int k = 0; k <= m; ++k) {
    map.nodes_[static_cast<std::size_t>(k)] = map.target_quantile(map.source_cdf_[static_cast<std::size_t>(k)]);
  }
  map.nodes_.front() = g.grid().lower(0);
  map.nodes_.back() = g.grid().upper(0);
  map.derivative_ = map_derivative(map, f, g);
  return map;
}

std::vector<double> map_derivative(const MonotoneMap1D& map, const GridDensity& f, const GridDensity& g) {
  const Grid& grid = f.grid();
  const int m = grid.cells_per_axis();
  const double mass_ratio = g.total_mass() / f.total_mass();
  std::vector<double> out(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) {
    const double target = map(grid.center(0, k));
    const double g_at = g.value(static_cast<std::size_t>(g.grid().locate(0, target)));
    if (!(g_at > 0.0)) {
      throw Error(ErrorCode::kPositivity, "target density vanishes at T(x)");
    }
    out[static_cast<std::size_t>(k)] = mass_ratio * f.value(static_cast<std::size_t>(k)) / g_at;
  }
  return out;
}

double deficit_1d(const GridDensity& f, const GridDensity& g, const MonotoneMap1D& map) {
  const Grid& grid = f.grid();
  const int m = grid.cells_per_axis();
  const double h = grid.cell_width();
  const auto df = finite_difference(f, 0);
  double integral = 0.0;
  for (int k = 0; k < m; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    const double x = grid.center(0, k);
    const double tx = map(x);
    const double g_at = g.value(static_cast<std::size_t>(g.grid().locate(0, tx)));
    if (!(g_at > 0.0)) {
      throw Error(ErrorCode::kPositivity, "log of nonpositive g(T(x))");
    }
    const double fx = f.value(ku);
    integral += fx * std::log(g_at / fx) - df[ku] * (tx - x);
  }
  integral *= h;
  return integral - f.total_mass() * std::log(g.total_mass() / f.total_mass());
}

VerificationReport check_lemma_lambda(const GridDensity& f, const GridDensity& g, Tolerance tol) {
  const auto map = monotone_map(f, g);
  const int m = f.grid().cells_per_axis();
  double lhs = 0.0;
  for (int k = 0; k < m; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    lhs += lambda_cost(map.derivative()[ku] - 1.0) * f.value(ku);
  }
  lhs *= f.grid().cell_width();
  constexpr double kConstant = 10.0 / 3.0;
  return make_report("lemma-2.2", "lemma-2.2", lhs, kConstant * deficit_1d(f, g, map), kConstant, m, tol);
}

VerificationReport check_prop_quadratic(const GridDensity& f, const GridDensity& g, double R, Tolerance tol) {
  require_unit_interval(f.grid(), "quadratic transport bound");
  const auto map = monotone_map(f, g);
  const Grid& grid = f.grid();
  const int m = grid.cells_per_axis();
  double lhs = 0.0;
  for (int k = 0; k < m; ++k) {
    const double x = grid.center(0, k);
    const double d = map(x) - x;
    lhs += d * d * f.value(static_cast<std::size_t>(k));
  }
  lhs *= grid.cell_width();
  const double constant = 40.0 / 9.0 * R * R;
  return make_report("prop-2.1", "prop-2.1", lhs, constant * deficit_1d(f, g, map), constant, m, tol);
}

VerificationReport check_segment_bound(const GridDensity& rho, double R, double a, double b, Tolerance tol) {
  require_1d_positive(rho, "segment density");
  const Grid& grid = rho.grid();
  if (grid.side() > 1.0 + 1e-12) {
    throw Error(ErrorCode::kPrecondition, "segment bound requires an interval of length at most one");
  }
  if (!(a < b) || a < grid.lower(0) || b > grid.upper(0)) {
    throw Error(ErrorCode::kOutOfRange, "segment [a, b] must satisfy lower <= a < b <= upper");
  }
  const double h = grid.cell_width();
  const int ka = grid.locate(0, a);
  const int kb = grid.locate(0, b);
  double lhs = 0.0;
  for (int k = ka; k <= kb; ++k) {
    const double lo = std::max(a, grid.node(0, k));
    const double hi = std::min(b, grid.node(0, k) + h);
    if (hi > lo) {
      lhs += rho.value(static_cast<std::size_t>(k)) * (hi - lo);
    }
  }
  const double rhs = 0.5 * R * (rho.value(static_cast<std::size_t>(ka)) + rho.value(static_cast<std::size_t>(kb)));
  return make_report("lemma-2.4", "lemma-2.4", lhs, rhs, R, grid.cells_per_axis(), tol);
}

VerificationReport check_cheeger_lambda(const GridDensity& rho, double R, std::span<const double> test_f,
                                        Tolerance tol) {
  require_1d_positive(rho, "weight density");
  const Grid& grid = rho.grid();
  require_unit_interval(grid, "Poincare-type bound");
  const int m = grid.cells_per_axis();
  if (test_f.size() != static_cast<std::size_t>(m) + 1) {
    throw Error(ErrorCode::kDimension, "test function needs m + 1 node values");
  }
  if (test_f.front() != 0.0 || test_f.back() != 0.0) {
    throw Error(ErrorCode::kPrecondition, "test function must vanish at both endpoints");
  }
  const double h = grid.cell_width();
  double lhs = 0.0;
  double grad = 0.0;
  for (int k = 0; k < m; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    const double w = rho.value(ku);
    lhs += w * integrate_lambda_linear(test_f[ku], test_f[ku + 1], h);
    grad += w * lambda_cost((test_f[ku + 1] - test_f[ku]) / h) * h;
  }
  const double constant = 4.0 / 3.0 * R * R;
  return make_report("lemma-2.5", "lemma-2.5", lhs, constant * grad, constant, m, tol);
}

}  // namespace cube_transport
