#include "cube_transport/density.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <sstream>
#include <iomanip>

#include "cube_transport/error.hpp"

namespace cube_transport {

namespace {

void require_positive(const GridDensity& d, const char* what) {
  if (!d.is_positive()) {
    throw Error(ErrorCode::kPositivity, std::string(what) + " requires strictly positive cell values");
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += a[i] * b[i];
  }
  return s;
}

void require_size(std::size_t got, int dim, const char* field) {
  if (got != static_cast<std::size_t>(dim)) {
    throw Error(ErrorCode::kInvalidSpec, std::string(field) + " has " + std::to_string(got) +
                                             " entries, grid dimension is " + std::to_string(dim));
  }
}

// Calls fn(start) for the first cell of every line along `axis`.
template <typename Fn>
void for_each_line(const Grid& grid, int axis, Fn&& fn) {
  const std::size_t stride = grid.stride(axis);
  const std::size_t block = stride * static_cast<std::size_t>(grid.cells_per_axis());
  for (std::size_t outer = 0; outer < grid.cell_count(); outer += block) {
    for (std::size_t s = 0; s < stride; ++s) {
      fn(outer + s);
    }
  }
}

// Log-density of an analytic family at x, up to an additive constant.
struct LogDensityVisitor {
  std::span<const double> x;

  double operator()(const RestrictedGaussian& g) const {
    double q = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double di = x[i] - g.center[i];
      for (std::size_t j = 0; j < x.size(); ++j) {
        q += di * g.inverse_covariance[i][j] * (x[j] - g.center[j]);
      }
    }
    return -0.5 * q;
  }
  double operator()(const ExponentialTilt& t) const { return dot(x, t.v); }
  double operator()(const ConvexPower& c) const {
    const double base = c.b + dot(x, c.v);
    if (!(base > 0.0)) {
      throw Error(ErrorCode::kInvalidSpec, "convex power base b + x.v is nonpositive on the grid");
    }
    return c.p * std::log(base);
  }
  double operator()(const Uniform&) const { return 0.0; }
  double operator()(const CorrelatedGaussianRemark& r) const {
    double sum = 0.0;
    double sq = 0.0;
    for (double xi : x) {
      sum += xi;
      sq += xi * xi;
    }
    const double n = static_cast<double>(x.size());
    const double scale = r.scale > 0.0 ? r.scale : remark_default_scale(r.n);
    // (Id + J)^{-1} = Id - J / (n + 1)
    return -0.5 * (sq - sum * sum / (n + 1.0)) / (scale * scale);
  }
  double operator()(const CustomGrid&) const { return 0.0; }
};

void validate_spec(const DensitySpec& spec, const Grid& grid) {
  const int n = grid.dim();
  if (const auto* g = std::get_if<RestrictedGaussian>(&spec)) {
    require_size(g->center.size(), n, "center");
    require_size(g->inverse_covariance.size(), n, "inverse_covariance");
    for (std::size_t i = 0; i < g->inverse_covariance.size(); ++i) {
      require_size(g->inverse_covariance[i].size(), n, "inverse_covariance row");
      for (std::size_t j = 0; j < i; ++j) {
        const double a = g->inverse_covariance[i][j];
        const double b = g->inverse_covariance[j][i];
        if (std::abs(a - b) > 1e-12 * (1.0 + std::abs(a))) {
          throw Error(ErrorCode::kInvalidSpec, "inverse_covariance is not symmetric");
        }
      }
      if (g->inverse_covariance[i][i] < 0.0) {
        throw Error(ErrorCode::kInvalidSpec, "inverse_covariance has a negative diagonal entry");
      }
    }
  } else if (const auto* t = std::get_if<ExponentialTilt>(&spec)) {
    require_size(t->v.size(), n, "v");
  } else if (const auto* c = std::get_if<ConvexPower>(&spec)) {
    require_size(c->v.size(), n, "v");
    if (!(c->p >= 1.0)) {
      throw Error(ErrorCode::kInvalidSpec, "convex power exponent must be >= 1");
    }
  } else if (const auto* r = std::get_if<CorrelatedGaussianRemark>(&spec)) {
    if (r->n != n) {
      throw Error(ErrorCode::kInvalidSpec, "correlated construction dimension " + std::to_string(r->n) +
                                               " does not match grid dimension " + std::to_string(n));
    }
    if (r->n < 2 || r->scale < 0.0) {
      throw Error(ErrorCode::kInvalidSpec, "correlated construction needs n >= 2 and scale >= 0");
    }
  } else if (const auto* cg = std::get_if<CustomGrid>(&spec)) {
    if (cg->values.size() != grid.cell_count()) {
      throw Error(ErrorCode::kInvalidSpec, "custom grid has " + std::to_string(cg->values.size()) +
                                               " values, grid has " + std::to_string(grid.cell_count()));
    }
  }
}

}  // namespace

GridDensity::GridDensity(Grid grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)), total_mass_(0.0) {
  if (values_.size() != grid_.cell_count()) {
    throw Error(ErrorCode::kDimension, "density has " + std::to_string(values_.size()) +
                                           " values for " + std::to_string(grid_.cell_count()) +
                                           " cells");
  }
  double sum = 0.0;
  for (double v : values_) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw Error(ErrorCode::kInvalidSpec, "density values must be finite and nonnegative");
    }
    sum += v;
  }
  total_mass_ = sum * grid_.cell_volume();
}

double GridDensity::value_at_point(std::span<const double> x) const {
  if (x.size() != static_cast<std::size_t>(grid_.dim())) {
    throw Error(ErrorCode::kDimension, "point dimension mismatch");
  }
  std::size_t flat = 0;
  for (int a = 0; a < grid_.dim(); ++a) {
    flat += static_cast<std::size_t>(grid_.locate(a, x[static_cast<std::size_t>(a)])) * grid_.stride(a);
  }
  return values_[flat];
}

bool GridDensity::is_positive() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return v > 0.0; });
}

double remark_default_scale(int n) {
  return 1.0 / (100.0 * std::sqrt(std::log(static_cast<double>(n))));
}

std::string variant_name(const DensitySpec& spec) {
  static constexpr const char* kNames[] = {"restricted_gaussian", "exponential_tilt", "convex_power",
                                           "uniform", "correlated_gaussian_remark", "custom_grid"};
  return kNames[spec.index()];
}

GridDensity build_density(const DensitySpec& spec, const Grid& grid) {
  validate_spec(spec, grid);
  std::vector<double> values(grid.cell_count());
  if (const auto* custom = std::get_if<CustomGrid>(&spec)) {
    values = custom->values;
  } else {
    std::vector<double> x(static_cast<std::size_t>(grid.dim()));
    double max_log = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < grid.cell_count(); ++c) {
      grid.cell_center(c, x);
      values[c] = std::visit(LogDensityVisitor{x}, spec);
      max_log = std::max(max_log, values[c]);
    }
    for (double& v : values) {
      v = std::exp(v - max_log);
    }
  }
  return normalize(GridDensity(grid, std::move(values)));
}

GridDensity normalize(const GridDensity& d) {
  const double mass = d.total_mass();
  if (!(mass > 0.0)) {
    throw Error(ErrorCode::kDegenerateDensity, "cannot normalize a density with zero mass");
  }
  std::vector<double> values(d.values().begin(), d.values().end());
  for (double& v : values) {
    v /= mass;
  }
  return GridDensity(d.grid(), std::move(values));
}

double estimate_axis_convexity_ratio(const GridDensity& d) {
  require_positive(d, "axis convexity ratio");
  const Grid& grid = d.grid();
  const int m = grid.cells_per_axis();
  const auto vals = d.values();
  double ratio = 1.0;
  std::vector<double> line(static_cast<std::size_t>(m));
  for (int axis = 0; axis < grid.dim(); ++axis) {
    const std::size_t stride = grid.stride(axis);
    for_each_line(grid, axis, [&](std::size_t start) {
      for (int i = 0; i < m; ++i) {
        line[static_cast<std::size_t>(i)] = vals[start + static_cast<std::size_t>(i) * stride];
      }
      for (int a = 0; a < m; ++a) {
        for (int b = a + 2; b < m; b += 2) {
          const double mid = line[static_cast<std::size_t>((a + b) / 2)];
          const double avg = 0.5 * (line[static_cast<std::size_t>(a)] + line[static_cast<std::size_t>(b)]);
          ratio = std::max(ratio, mid / avg);
        }
      }
    });
  }
  return ratio;
}

LogConcavityCheck check_midpoint_log_concavity(const GridDensity& d, double tol) {
  require_positive(d, "log-concavity check");
  const Grid& grid = d.grid();
  const int n = grid.dim();
  const int m = grid.cells_per_axis();
  std::vector<double> log_values(d.values().size());
  std::transform(d.values().begin(), d.values().end(), log_values.begin(),
                 [](double v) { return std::log(v); });

  // Directions in {-1,0,1}^n with first nonzero entry +1.
  std::vector<std::vector<int>> directions;
  std::vector<int> dir(static_cast<std::size_t>(n), -1);
  while (true) {
    const auto first = std::find_if(dir.begin(), dir.end(), [](int v) { return v != 0; });
    if (first != dir.end() && *first == 1) {
      directions.push_back(dir);
    }
    int a = n - 1;
    while (a >= 0 && dir[static_cast<std::size_t>(a)] == 1) {
      dir[static_cast<std::size_t>(a)] = -1;
      --a;
    }
    if (a < 0) {
      break;
    }
    ++dir[static_cast<std::size_t>(a)];
  }

  double worst = 0.0;
  std::vector<int> start(static_cast<std::size_t>(n));
  for (const auto& direction : directions) {
    std::ptrdiff_t step = 0;
    for (int a = 0; a < n; ++a) {
      step += direction[static_cast<std::size_t>(a)] * static_cast<std::ptrdiff_t>(grid.stride(a));
    }
    for (std::size_t c = 0; c < grid.cell_count(); ++c) {
      grid.unflatten(c, start);
      // Largest k with start + k * direction inside the grid.
      int reach = m;
      for (int a = 0; a < n; ++a) {
        const int di = direction[static_cast<std::size_t>(a)];
        const int i = start[static_cast<std::size_t>(a)];
        if (di > 0) {
          reach = std::min(reach, m - 1 - i);
        } else if (di < 0) {
          reach = std::min(reach, i);
        }
      }
      const double la = log_values[c];
      for (int k = 1; 2 * k <= reach; ++k) {
        const double lm = log_values[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(c) + k * step)];
        const double lb = log_values[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(c) + 2 * k * step)];
        const double violation = 1.0 - std::exp(2.0 * lm - la - lb);
        worst = std::max(worst, violation);
      }
    }
  }
  return LogConcavityCheck{worst <= tol, worst};
}

double estimate_diag_second_derivative_bound(const GridDensity& d) {
  require_positive(d, "second-derivative bound");
  const Grid& grid = d.grid();
  const int m = grid.cells_per_axis();
  const double h2 = grid.cell_width() * grid.cell_width();
  const auto vals = d.values();
  double bound = 0.0;
  for (int axis = 0; axis < grid.dim(); ++axis) {
    const std::size_t stride = grid.stride(axis);
    for_each_line(grid, axis, [&](std::size_t start) {
      // One-sided second differences at the ends coincide with the centred
      // ones of the adjacent interior cells, so the interior suffices.
      for (int i = 1; i + 1 < m; ++i) {
        const std::size_t c = start + static_cast<std::size_t>(i) * stride;
        const double second = (-std::log(vals[c - stride]) + 2.0 * std::log(vals[c]) -
                               std::log(vals[c + stride])) / h2;
        bound = std::max(bound, second);
      }
    });
  }
  return bound;
}

GridDensity marginalize_last(const GridDensity& d) {
  const Grid& grid = d.grid();
  if (grid.dim() < 2) {
    throw Error(ErrorCode::kDimension, "marginalize_last needs dimension >= 2");
  }
  Grid base = grid.drop_last();
  const std::size_t m = static_cast<std::size_t>(grid.cells_per_axis());
  const double h = grid.cell_width();
  const auto vals = d.values();
  std::vector<double> out(base.cell_count());
  for (std::size_t y = 0; y < out.size(); ++y) {
    double s = 0.0;
    for (std::size_t r = 0; r < m; ++r) {
      s += vals[y * m + r];
    }
    out[y] = h * s;
  }
  return GridDensity(std::move(base), std::move(out));
}

GridDensity fiber(const GridDensity& d, std::span<const int> y_index) {
  const Grid& grid = d.grid();
  const int n = grid.dim();
  if (y_index.size() != static_cast<std::size_t>(n - 1)) {
    throw Error(ErrorCode::kDimension, "fiber index must have dim - 1 entries");
  }
  const int m = grid.cells_per_axis();
  std::size_t start = 0;
  for (int a = 0; a + 1 < n; ++a) {
    const int i = y_index[static_cast<std::size_t>(a)];
    if (i < 0 || i >= m) {
      throw Error(ErrorCode::kOutOfRange, "fiber index " + std::to_string(i) + " outside [0, " +
                                              std::to_string(m) + ")");
    }
    start += static_cast<std::size_t>(i) * grid.stride(a);
  }
  const auto vals = d.values();
  std::vector<double> out(vals.begin() + static_cast<std::ptrdiff_t>(start),
                          vals.begin() + static_cast<std::ptrdiff_t>(start + static_cast<std::size_t>(m)));
  return GridDensity(grid.axis_grid(n - 1), std::move(out));
}

std::vector<double> finite_difference(const GridDensity& d, int axis) {
  return finite_difference(d.grid(), d.values(), axis);
}

std::vector<double> finite_difference(const Grid& grid, std::span<const double> vals, int axis) {
  if (vals.size() != grid.cell_count()) {
    throw Error(ErrorCode::kDimension, "cell values do not match the grid");
  }
  const int m = grid.cells_per_axis();
  const double h = grid.cell_width();
  std::vector<double> out(vals.size(), 0.0);
  if (m < 2) {
    return out;
  }
  const std::size_t stride = grid.stride(axis);
  for_each_line(grid, axis, [&](std::size_t start) {
    for (int i = 0; i < m; ++i) {
      const std::size_t c = start + static_cast<std::size_t>(i) * stride;
      if (i == 0) {
        out[c] = (vals[c + stride] - vals[c]) / h;
      } else if (i == m - 1) {
        out[c] = (vals[c] - vals[c - stride]) / h;
      } else {
        out[c] = (vals[c + stride] - vals[c - stride]) / (2.0 * h);
      }
    }
  });
  return out;
}

GridDensity axis_marginal(const GridDensity& d, int axis) {
  const Grid& grid = d.grid();
  Grid line = grid.axis_grid(axis);
  const std::size_t m = static_cast<std::size_t>(grid.cells_per_axis());
  const double weight = grid.cell_volume() / grid.cell_width();
  std::vector<double> out(m, 0.0);
  const auto vals = d.values();
  const std::size_t stride = grid.stride(axis);
  for (std::size_t c = 0; c < vals.size(); ++c) {
    out[(c / stride) % m] += vals[c];
  }
  for (double& v : out) {
    v *= weight;
  }
  return GridDensity(std::move(line), std::move(out));
}

std::vector<double> node_cdf(const GridDensity& d1) {
  if (d1.grid().dim() != 1) {
    throw Error(ErrorCode::kDimension, "node_cdf expects a 1D density");
  }
  const auto vals = d1.values();
  const double total = d1.total_mass() / d1.grid().cell_width();
  if (!(total > 0.0)) {
    throw Error(ErrorCode::kDegenerateDensity, "CDF of a zero-mass density");
  }
  std::vector<double> cdf(vals.size() + 1, 0.0);
  double running = 0.0;
  for (std::size_t i = 0; i < vals.size(); ++i) {
    running += vals[i];
    cdf[i + 1] = running / total;
  }
  cdf.back() = 1.0;
  return cdf;
}

std::string fingerprint(const GridDensity& d) {
  std::uint64_t hash = 1469598103934665603ULL;
  auto mix = [&hash](const void* data, std::size_t bytes) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < bytes; ++i) {
      hash ^= p[i];
      hash *= 1099511628211ULL;
    }
  };
  const Grid& g = d.grid();
  const int dim = g.dim();
  const int m = g.cells_per_axis();
  const double side = g.side();
  mix(&dim, sizeof dim);
  mix(&m, sizeof m);
  mix(g.origin().data(), g.origin().size_bytes());
  mix(&side, sizeof side);
  mix(d.values().data(), d.values().size_bytes());
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << hash;
  return out.str();
}

}  // namespace cube_transport
