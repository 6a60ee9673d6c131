#include "cube_transport/knothe.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <string>

#include "cube_transport/error.hpp"
#include "cube_transport/parallel.hpp"
#include "cube_transport/sampler.hpp"

namespace cube_transport {

namespace {

// Corner offsets and weights for multilinear interpolation over the leading
// p.size() axes of `grid`.
struct Stencil {
  std::vector<std::size_t> offsets;
  std::vector<double> weights;
};

Stencil make_stencil(const Grid& grid, std::span<const double> p) {
  const int m = grid.cells_per_axis();
  const std::size_t k = p.size();
  std::vector<std::size_t> lo(k), hi(k);
  std::vector<double> w(k);
  for (std::size_t a = 0; a < k; ++a) {
    const int axis = static_cast<int>(a);
    double s = (p[a] - grid.lower(axis)) / grid.cell_width() - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(m - 1));
    const int i0 = std::min(static_cast<int>(s), std::max(m - 2, 0));
    lo[a] = static_cast<std::size_t>(i0) * grid.stride(axis);
    hi[a] = static_cast<std::size_t>(std::min(i0 + 1, m - 1)) * grid.stride(axis);
    w[a] = s - i0;
  }
  Stencil st;
  const std::size_t corners = std::size_t{1} << k;
  st.offsets.reserve(corners);
  st.weights.reserve(corners);
  for (std::size_t mask = 0; mask < corners; ++mask) {
    std::size_t offset = 0;
    double weight = 1.0;
    for (std::size_t a = 0; a < k; ++a) {
      const bool upper = (mask >> a) & 1U;
      offset += upper ? hi[a] : lo[a];
      weight *= upper ? w[a] : 1.0 - w[a];
    }
    if (weight > 0.0) {
      st.offsets.push_back(offset);
      st.weights.push_back(weight);
    }
  }
  return st;
}

void require_pair(const GridDensity& f, const GridDensity& g) {
  if (!f.grid().same_geometry(g.grid())) {
    throw Error(ErrorCode::kDimension, "source and target densities live on different grids");
  }
  if (!(f.total_mass() > 0.0) || !(g.total_mass() > 0.0)) {
    throw Error(ErrorCode::kDegenerateDensity, "transport needs densities with positive mass");
  }
  if (!f.is_positive() || !g.is_positive()) {
    throw Error(ErrorCode::kPositivity, "transport needs strictly positive densities");
  }
}

}  // namespace

double interpolate(const GridDensity& d, std::span<const double> x) {
  if (x.size() != static_cast<std::size_t>(d.grid().dim())) {
    throw Error(ErrorCode::kDimension, "interpolation point has the wrong dimension");
  }
  const auto st = make_stencil(d.grid(), x);
  double v = 0.0;
  for (std::size_t c = 0; c < st.offsets.size(); ++c) {
    v += st.weights[c] * d.value(st.offsets[c]);
  }
  return v;
}

GridDensity interpolated_fiber(const GridDensity& g, std::span<const double> base_point) {
  const Grid& grid = g.grid();
  const int n = grid.dim();
  if (base_point.size() != static_cast<std::size_t>(n - 1)) {
    throw Error(ErrorCode::kDimension, "base point must have dim - 1 coordinates");
  }
  const auto st = make_stencil(grid, base_point);
  const std::size_t m = static_cast<std::size_t>(grid.cells_per_axis());
  std::vector<double> values(m, 0.0);
  for (std::size_t c = 0; c < st.offsets.size(); ++c) {
    for (std::size_t r = 0; r < m; ++r) {
      values[r] += st.weights[c] * g.value(st.offsets[c] + r);
    }
  }
  return GridDensity(grid.axis_grid(n - 1), std::move(values));
}

void KnotheMap::evaluate(std::span<const double> x, std::span<double> out) const {
  const int n = dim();
  if (x.size() != static_cast<std::size_t>(n) || out.size() != x.size()) {
    throw Error(ErrorCode::kDimension, "evaluate: point dimension mismatch");
  }
  if (n == 1) {
    out[0] = fibers_.front()(x[0]);
    return;
  }
  base_->evaluate(x.first(static_cast<std::size_t>(n - 1)), out.first(static_cast<std::size_t>(n - 1)));
  std::size_t cell = 0;
  const Grid& base_grid = base_->grid();
  for (int a = 0; a + 1 < n; ++a) {
    cell += static_cast<std::size_t>(base_grid.locate(a, x[static_cast<std::size_t>(a)])) * base_grid.stride(a);
  }
  out[static_cast<std::size_t>(n - 1)] = fibers_[cell](x[static_cast<std::size_t>(n - 1)]);
}

KnotheMap knothe_map(const GridDensity& f, const GridDensity& g, int threads) {
  require_pair(f, g);
  const Grid& grid = f.grid();
  const int n = grid.dim();
  const std::size_t un = static_cast<std::size_t>(n);
  KnotheMap map(grid);
  map.displacement_.assign(grid.cell_count() * un, 0.0);

  if (n == 1) {
    map.fibers_.push_back(monotone_map(f, g));
    for (int k = 0; k < grid.cells_per_axis(); ++k) {
      const double x = grid.center(0, k);
      map.displacement_[static_cast<std::size_t>(k)] = map.fibers_.front()(x) - x;
    }
    return map;
  }

  map.base_ = std::make_shared<const KnotheMap>(knothe_map(marginalize_last(f), marginalize_last(g), threads));
  const KnotheMap& base = *map.base_;
  const Grid& base_grid = base.grid();
  const std::size_t base_cells = base_grid.cell_count();
  const std::size_t m = static_cast<std::size_t>(grid.cells_per_axis());

  std::vector<std::optional<MonotoneMap1D>> fibers(base_cells);
  parallel_for(base_cells, threads, [&](std::size_t y) {
    std::vector<double> image(un - 1);
    base_grid.cell_center(y, image);
    const auto theta = base.displacement(y);
    for (std::size_t a = 0; a + 1 < un; ++a) {
      image[a] += theta[a];
    }
    const auto source = f.values().subspan(y * m, m);
    GridDensity f_y(grid.axis_grid(n - 1), std::vector<double>(source.begin(), source.end()));
    fibers[y].emplace(monotone_map(f_y, interpolated_fiber(g, image)));
    const MonotoneMap1D& fiber_map = *fibers[y];
    for (std::size_t r = 0; r < m; ++r) {
      double* cell = map.displacement_.data() + (y * m + r) * un;
      std::copy(theta.begin(), theta.end(), cell);
      const double c = grid.center(n - 1, static_cast<int>(r));
      cell[un - 1] = fiber_map(c) - c;
    }
  });
  map.fibers_.reserve(base_cells);
  for (auto& fm : fibers) {
    map.fibers_.push_back(std::move(*fm));
  }
  return map;
}

double displacement_cost(const KnotheMap& map, const GridDensity& f) {
  const auto split = split_displacement_cost(map, f);
  return split.base + split.fibers;
}

CostSplit split_displacement_cost(const KnotheMap& map, const GridDensity& f) {
  if (!map.grid().same_geometry(f.grid())) {
    throw Error(ErrorCode::kDimension, "map and density grids differ");
  }
  const std::size_t n = static_cast<std::size_t>(map.dim());
  CostSplit split;
  for (std::size_t c = 0; c < f.values().size(); ++c) {
    const auto theta = map.displacement(c);
    double base = 0.0;
    for (std::size_t a = 0; a + 1 < n; ++a) {
      base += theta[a] * theta[a];
    }
    split.base += base * f.value(c);
    split.fibers += theta[n - 1] * theta[n - 1] * f.value(c);
  }
  const double volume = f.grid().cell_volume();
  split.base *= volume;
  split.fibers *= volume;
  return split;
}

double s_integral_nd(const GridDensity& f, const GridDensity& g, const KnotheMap& map) {
  require_pair(f, g);
  const Grid& grid = f.grid();
  const std::size_t n = static_cast<std::size_t>(grid.dim());
  std::vector<std::vector<double>> gradient(n);
  for (std::size_t a = 0; a < n; ++a) {
    gradient[a] = finite_difference(f, static_cast<int>(a));
  }
  std::vector<double> target(n);
  double integral = 0.0;
  for (std::size_t c = 0; c < grid.cell_count(); ++c) {
    grid.cell_center(c, target);
    const auto theta = map.displacement(c);
    double drift = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      target[a] += theta[a];
      drift += gradient[a][c] * theta[a];
    }
    const double g_at = interpolate(g, target);
    if (!(g_at > 0.0)) {
      throw Error(ErrorCode::kPositivity, "interpolated g(T(x)) is not positive");
    }
    const double fx = f.value(c);
    integral += fx * std::log(g_at / fx) - drift;
  }
  return integral * grid.cell_volume();
}

double tire_bracket(const GridDensity& f, const GridDensity& g, const KnotheMap& map) {
  return s_integral_nd(f, g, map) - f.total_mass() * std::log(g.total_mass() / f.total_mass());
}

VerificationReport check_theorem31(const GridDensity& f, const GridDensity& g, const KnotheMap& map, double R,
                                   Tolerance tol) {
  if (std::abs(f.grid().side() - 1.0) > 1e-12) {
    throw Error(ErrorCode::kPrecondition, "the quadratic Knothe bound is stated on a unit cube");
  }
  const double constant = 40.0 / 9.0 * R * R;
  return make_report("thm-3.1", "thm-3.1", displacement_cost(map, f), constant * tire_bracket(f, g, map), constant,
                     f.grid().cells_per_axis(), tol);
}

VerificationReport check_theorem31(const GridDensity& f, const GridDensity& g, double R, Tolerance tol) {
  return check_theorem31(f, g, knothe_map(f, g), R, tol);
}

double pushforward_error(const KnotheMap& map, const GridDensity& f, const GridDensity& g, std::size_t count,
                         std::uint64_t seed, int threads) {
  require_pair(f, g);
  const auto batch = sample_grid(f, count, seed, threads);
  const std::size_t n = static_cast<std::size_t>(map.dim());
  std::vector<double> images(batch.points.size());
  parallel_for(batch.size(), threads, [&](std::size_t i) {
    map.evaluate(batch.point(i), std::span<double>(images).subspan(i * n, n));
  });
  double worst = 0.0;
  std::vector<double> coords(batch.size());
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t i = 0; i < batch.size(); ++i) {
      coords[i] = images[i * n + a];
    }
    worst = std::max(worst, kolmogorov_distance(coords, axis_marginal(g, static_cast<int>(a))));
  }
  return worst;
}

VerificationReport check_facet_preservation(const KnotheMap& map) {
  const Grid& grid = map.grid();
  const int n = grid.dim();
  const int m = grid.cells_per_axis();
  const std::size_t un = static_cast<std::size_t>(n);
  std::vector<int> index(un);
  std::vector<double> x(un), image(un);
  double worst = 0.0;
  for (std::size_t c = 0; c < grid.cell_count(); ++c) {
    grid.unflatten(c, index);
    for (int i = 0; i < n; ++i) {
      const int k = index[static_cast<std::size_t>(i)];
      for (int side = 0; side < 2; ++side) {
        if ((side == 0 && k != 0) || (side == 1 && k != m - 1)) {
          continue;
        }
        const double facet = side == 0 ? grid.lower(i) : grid.upper(i);
        grid.cell_center(c, x);
        x[static_cast<std::size_t>(i)] = facet;
        map.evaluate(x, image);
        worst = std::max(worst, std::abs(image[static_cast<std::size_t>(i)] - facet));
      }
    }
  }
  return make_report("eq-5.3/facets", "eq-5.3", worst, 2.0 * grid.cell_width(), 2.0, m, Tolerance{0.0, 0.0});
}

void write_displacement_csv(const KnotheMap& map, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorCode::kIo, "cannot write " + path.string());
  }
  const Grid& grid = map.grid();
  const int n = grid.dim();
  out.precision(17);
  for (int a = 0; a < n; ++a) {
    out << (a ? "," : "") << 'i' << a;
  }
  for (int a = 0; a < n; ++a) {
    out << ",theta" << a;
  }
  out << '\n';
  std::vector<int> index(static_cast<std::size_t>(n));
  for (std::size_t c = 0; c < grid.cell_count(); ++c) {
    grid.unflatten(c, index);
    for (int a = 0; a < n; ++a) {
      out << (a ? "," : "") << index[static_cast<std::size_t>(a)];
    }
    for (double t : map.displacement(c)) {
      out << ',' << t;
    }
    out << '\n';
  }
}

}  // namespace cube_transport
