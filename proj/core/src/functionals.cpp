#include "cube_transport/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <span>

#include "cube_transport/error.hpp"

namespace cube_transport {

double relative_entropy(const GridDensity& g, const GridDensity& f) {
  if (!g.grid().same_geometry(f.grid())) {
    throw Error(ErrorCode::kDimension, "relative entropy needs densities on the same grid");
  }
  const GridDensity gn = normalize(g);
  const GridDensity fn = normalize(f);
  double total = 0.0;
  for (std::size_t c = 0; c < gn.grid().cell_count(); ++c) {
    const double gv = gn.value(c);
    if (gv == 0.0) {
      continue;
    }
    const double fv = fn.value(c);
    if (fv == 0.0) {
      return std::numeric_limits<double>::infinity();
    }
    total += gv * std::log(gv / fv);
  }
  return total * gn.grid().cell_volume();
}

VerificationReport check_tire_le_entropy(const GridDensity& f, const GridDensity& g, const KnotheMap& map,
                                         Tolerance tol) {
  const auto concavity = check_midpoint_log_concavity(f, 1e-9);
  if (!concavity.log_concave) {
    throw Error(ErrorCode::kPrecondition,
                "source density is not log-concave (violation " + std::to_string(concavity.worst_violation) + ")");
  }
  const double lhs = tire_bracket(normalize(f), normalize(g), map);
  const double rhs = relative_entropy(g, f);
  return make_report("lemma-4.1", "lemma-4.1", lhs, rhs, 1.0, f.grid().cells_per_axis(), tol);
}

LegendreBound legendre_tire_bound(const GridDensity& f, const GridDensity& g, std::size_t max_targets) {
  if (f.grid().dim() != g.grid().dim()) {
    throw Error(ErrorCode::kDimension, "source and target dimensions differ");
  }
  if (!f.is_positive()) {
    throw Error(ErrorCode::kPositivity, "source density must be strictly positive");
  }
  if (!(g.total_mass() > 0.0)) {
    throw Error(ErrorCode::kDegenerateDensity, "target density has zero mass");
  }
  const Grid& fg = f.grid();
  const Grid& gg = g.grid();
  const int n = fg.dim();
  const auto un = static_cast<std::size_t>(n);
  const bool shared = fg.same_geometry(gg);

  LegendreBound out;
  out.target_stride = std::max<std::size_t>(1, (gg.cell_count() + max_targets - 1) / std::max<std::size_t>(1, max_targets));

  // Candidate targets: centres and log g of the cells with g > 0.
  std::vector<double> centers;
  std::vector<double> log_g;
  std::vector<double> point(un);
  for (std::size_t c = 0; c < gg.cell_count(); c += out.target_stride) {
    if (g.value(c) > 0.0) {
      gg.cell_center(c, point);
      centers.insert(centers.end(), point.begin(), point.end());
      log_g.push_back(std::log(g.value(c)));
    }
  }

  std::vector<std::vector<double>> grad(un);
  for (int a = 0; a < n; ++a) {
    grad[static_cast<std::size_t>(a)] = finite_difference(f, a);
  }

  std::vector<double> x(un);
  std::vector<double> v(un);
  double bound = 0.0;
  double flux = 0.0;
  double mass = 0.0;
  double conjugate_sum = 0.0;
  double entropy_sum = 0.0;
  for (std::size_t c = 0; c < fg.cell_count(); ++c) {
    const double fv = f.value(c);
    fg.cell_center(c, x);
    double grad_dot_x = 0.0;
    for (std::size_t a = 0; a < un; ++a) {
      v[a] = -grad[a][c] / fv;
      grad_dot_x += grad[a][c] * x[a];
    }
    double conjugate = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < log_g.size(); ++j) {
      double s = log_g[j];
      for (std::size_t a = 0; a < un; ++a) {
        s += v[a] * centers[j * un + a];
      }
      conjugate = std::max(conjugate, s);
    }
    if (shared && out.target_stride > 1 && g.value(c) > 0.0) {
      double s = std::log(g.value(c));
      for (std::size_t a = 0; a < un; ++a) {
        s += v[a] * x[a];
      }
      conjugate = std::max(conjugate, s);
    }
    if (!std::isfinite(conjugate) || conjugate > 700.0) {
      out.saturated = true;
    }
    conjugate_sum += fv * conjugate;
    entropy_sum += fv * std::log(fv);
    bound += grad_dot_x;
    flux += grad_dot_x + n * fv;
    mass += fv;
  }
  const double vol = fg.cell_volume();
  const double log_ratio = std::log(g.total_mass() / f.total_mass());
  out.bound = (conjugate_sum - entropy_sum + bound) * vol - f.total_mass() * log_ratio;
  out.boundary_flux = flux * vol;
  out.whole_space_form = (conjugate_sum - entropy_sum - mass * (log_ratio + n)) * vol;
  return out;
}

std::vector<double> CouplingPlan::row_sums() const {
  std::vector<double> sums(source_cells, 0.0);
  for (const auto& e : entries) {
    sums[e.source] += e.weight;
  }
  return sums;
}

std::vector<double> CouplingPlan::column_sums() const {
  std::vector<double> sums(target_cells, 0.0);
  for (const auto& e : entries) {
    sums[e.target] += e.weight;
  }
  return sums;
}

namespace {

struct Atoms {
  std::vector<double> mass;
  std::vector<double> position;
  std::vector<std::size_t> cell;
};

Atoms atomize(const GridDensity& d, int subdivisions) {
  const Grid& grid = d.grid();
  const auto un = static_cast<std::size_t>(grid.dim());
  std::size_t per_cell = 1;
  for (std::size_t a = 0; a < un; ++a) {
    per_cell *= static_cast<std::size_t>(subdivisions);
  }
  const double sub = grid.cell_width() / subdivisions;
  const double weight = grid.cell_volume() / d.total_mass() / static_cast<double>(per_cell);
  Atoms out;
  out.mass.reserve(grid.cell_count() * per_cell);
  std::vector<int> index(un);
  for (std::size_t c = 0; c < grid.cell_count(); ++c) {
    grid.unflatten(c, index);
    for (std::size_t s = 0; s < per_cell; ++s) {
      std::size_t rest = s;
      for (std::size_t a = 0; a < un; ++a) {
        const auto k = static_cast<double>(rest % static_cast<std::size_t>(subdivisions));
        rest /= static_cast<std::size_t>(subdivisions);
        out.position.push_back(grid.node(static_cast<int>(a), index[a]) + (k + 0.5) * sub);
      }
      out.mass.push_back(d.value(c) * weight);
      out.cell.push_back(c);
    }
  }
  return out;
}

// Probability masses on the grid refined `k` times per axis.
struct RefinedGrid {
  std::vector<double> mass;
  int m = 0;
  double width = 0.0;
  std::vector<double> lower;

  double center(int axis, std::size_t index) const {
    return lower[static_cast<std::size_t>(axis)] + (static_cast<double>(index) + 0.5) * width;
  }
};

RefinedGrid refine(const GridDensity& d, int k) {
  const Grid& grid = d.grid();
  const int n = grid.dim();
  RefinedGrid out;
  out.m = grid.cells_per_axis() * k;
  out.width = grid.cell_width() / k;
  out.lower.assign(grid.origin().begin(), grid.origin().end());
  std::size_t count = 1;
  for (int a = 0; a < n; ++a) {
    count *= static_cast<std::size_t>(out.m);
  }
  const double weight = grid.cell_volume() / d.total_mass() / std::pow(static_cast<double>(k), n);
  out.mass.resize(count);
  std::vector<int> coarse(static_cast<std::size_t>(n));
  for (std::size_t fine = 0; fine < count; ++fine) {
    std::size_t rest = fine;
    for (int a = n - 1; a >= 0; --a) {
      coarse[static_cast<std::size_t>(a)] = static_cast<int>(rest % static_cast<std::size_t>(out.m)) / k;
      rest /= static_cast<std::size_t>(out.m);
    }
    out.mass[fine] = d.value(grid.flatten(coarse)) * weight;
  }
  return out;
}

struct DiscreteCoupling {
  std::vector<PlanEntry> plan;
  double cost = 0.0;
};

// North-west corner rule on two sorted 1D supports: the monotone coupling.
template <typename Emit>
void monotone_coupling(std::span<const double> a, std::span<const double> b, Emit emit) {
  std::size_t i = 0;
  std::size_t j = 0;
  double ra = a.empty() ? 0.0 : a[0];
  double rb = b.empty() ? 0.0 : b[0];
  while (i < a.size() && j < b.size()) {
    const double w = std::min(ra, rb);
    if (w > 0.0) {
      emit(i, j, w);
    }
    if (ra <= rb) {
      rb -= ra;
      if (++i < a.size()) ra = a[i];
    } else {
      ra -= rb;
      if (++j < b.size()) rb = b[j];
    }
  }
}

// Knothe coupling of masses over the first `dim` axes of the refined grids.
DiscreteCoupling knothe_coupling(const std::vector<double>& a, const std::vector<double>& b, int dim,
                                 const RefinedGrid& fs, const RefinedGrid& gs) {
  const auto mf = static_cast<std::size_t>(fs.m);
  const auto mg = static_cast<std::size_t>(gs.m);
  const int axis = dim - 1;
  DiscreteCoupling out;
  auto couple_fibers = [&](std::size_t p, std::size_t q, std::span<const double> fa, std::span<const double> fb) {
    monotone_coupling(fa, fb, [&](std::size_t r, std::size_t s, double w) {
      const double d = fs.center(axis, r) - gs.center(axis, s);
      out.cost += w * d * d;
      out.plan.push_back({p * mf + r, q * mg + s, w});
    });
  };
  if (dim == 1) {
    couple_fibers(0, 0, a, b);
    return out;
  }
  std::vector<double> base_a(a.size() / mf, 0.0);
  std::vector<double> base_b(b.size() / mg, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) base_a[i / mf] += a[i];
  for (std::size_t j = 0; j < b.size(); ++j) base_b[j / mg] += b[j];
  const auto base = knothe_coupling(base_a, base_b, dim - 1, fs, gs);
  out.cost = base.cost;
  std::vector<double> fa(mf);
  std::vector<double> fb(mg);
  for (const auto& e : base.plan) {
    const double sa = e.weight / base_a[e.source];
    const double sb = e.weight / base_b[e.target];
    for (std::size_t r = 0; r < mf; ++r) fa[r] = a[e.source * mf + r] * sa;
    for (std::size_t s = 0; s < mg; ++s) fb[s] = b[e.target * mg + s] * sb;
    couple_fibers(e.source, e.target, fa, fb);
  }
  return out;
}

}  // namespace

W2Result exact_w2_small(const GridDensity& f, const GridDensity& g, int subdivisions) {
  const Grid& fg = f.grid();
  const Grid& gg = g.grid();
  if (fg.dim() != gg.dim()) {
    throw Error(ErrorCode::kDimension, "source and target dimensions differ");
  }
  if (subdivisions < 1) {
    throw Error(ErrorCode::kInvalidSpec, "subdivisions must be positive");
  }
  const double per_cell = std::pow(static_cast<double>(subdivisions), fg.dim());
  if (static_cast<double>(fg.cell_count()) * per_cell > kMaxExactW2Cells ||
      static_cast<double>(gg.cell_count()) * per_cell > kMaxExactW2Cells) {
    throw Error(ErrorCode::kSizeLimit, "exact W2 is limited to " + std::to_string(kMaxExactW2Cells) + " atoms per density");
  }
  if (!(f.total_mass() > 0.0) || !(g.total_mass() > 0.0)) {
    throw Error(ErrorCode::kDegenerateDensity, "exact W2 needs positive total mass");
  }
  const auto un = static_cast<std::size_t>(fg.dim());
  const auto source = atomize(f, subdivisions);
  auto target = atomize(g, subdivisions);
  const std::size_t rows = source.mass.size();
  const std::size_t cols = target.mass.size();
  // Absorb rounding so both sides total exactly the same.
  double diff = 0.0;
  for (double s : source.mass) diff += s;
  for (double d : target.mass) diff -= d;
  *std::max_element(target.mass.begin(), target.mass.end()) += diff;

  std::vector<double> cost(rows * cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      double d2 = 0.0;
      for (std::size_t a = 0; a < un; ++a) {
        const double d = source.position[i * un + a] - target.position[j * un + a];
        d2 += d * d;
      }
      cost[i * cols + j] = d2;
    }
  }

  const auto solution = solve_transportation(source.mass, target.mass, cost);
  W2Result out;
  out.cost = solution.cost;
  out.plan.source_cells = fg.cell_count();
  out.plan.target_cells = gg.cell_count();
  std::map<std::pair<std::size_t, std::size_t>, double> merged;
  for (const auto& e : solution.plan) {
    merged[{source.cell[e.source], target.cell[e.target]}] += e.weight;
  }
  for (const auto& [key, weight] : merged) {
    out.plan.entries.push_back({key.first, key.second, weight});
  }
  return out;
}

double discrete_knothe_cost(const GridDensity& f, const GridDensity& g, int subdivisions) {
  if (f.grid().dim() != g.grid().dim()) {
    throw Error(ErrorCode::kDimension, "source and target dimensions differ");
  }
  if (subdivisions < 1) {
    throw Error(ErrorCode::kInvalidSpec, "subdivisions must be positive");
  }
  if (!(f.total_mass() > 0.0) || !(g.total_mass() > 0.0)) {
    throw Error(ErrorCode::kDegenerateDensity, "discrete Knothe coupling needs positive total mass");
  }
  const double per_cell = std::pow(static_cast<double>(subdivisions), f.grid().dim());
  if (static_cast<double>(std::max(f.grid().cell_count(), g.grid().cell_count())) * per_cell >
      static_cast<double>(kMaxGridCells)) {
    throw Error(ErrorCode::kSizeLimit, "refined grid exceeds 2^24 cells");
  }
  const auto fs = refine(f, subdivisions);
  const auto gs = refine(g, subdivisions);
  return knothe_coupling(fs.mass, gs.mass, f.grid().dim(), fs, gs).cost;
}

void write_plan_csv(const CouplingPlan& plan, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorCode::kIo, "cannot write " + path.string());
  }
  out.precision(17);
  out << "source_cell,target_cell,weight\n";
  for (const auto& e : plan.entries) {
    out << e.source << ',' << e.target << ',' << e.weight << '\n';
  }
}

}  // namespace cube_transport
