#include <doctest.h>

#include <cmath>
#include <random>

#include "cube_transport/error.hpp"
#include "cube_transport/knothe.hpp"
#include "oracles.hpp"

using namespace cube_transport;

namespace {

GridDensity product_density(int m, const std::function<double(double)>& a, const std::function<double(double)>& b) {
  auto grid = Grid::unit_cube(2, m);
  std::vector<double> v(grid.cell_count());
  for (std::size_t c = 0; c < v.size(); ++c) {
    const auto idx = grid.unflatten(c);
    v[c] = a(grid.center(0, idx[0])) * b(grid.center(1, idx[1]));
  }
  return normalize(GridDensity(grid, std::move(v)));
}

GridDensity four_xy(int m) {
  return product_density(m, [](double x) { return 2 * x; }, [](double y) { return 2 * y; });
}

}  // namespace

TEST_CASE("identity map") {
  const auto f = build_density(Uniform{}, Grid::unit_cube(3, 8));
  const auto t = knothe_map(f, f);
  for (double th : t.displacement_field()) CHECK(std::abs(th) <= 1e-12);
  CHECK(displacement_cost(t, f) <= 1e-20);
  CHECK(std::abs(tire_bracket(f, f, t)) <= 1e-12);
  CHECK(check_facet_preservation(t).lhs <= 1e-12);
}

TEST_CASE("uniform to 4xy closed forms") {
  const int m = 64;
  const auto f = build_density(Uniform{}, Grid::unit_cube(2, m));
  const auto g = four_xy(m);
  const auto t = knothe_map(f, g);
  const double h = 1.0 / m;
  std::vector<double> x(2);
  std::vector<double> out(2);
  for (int i = 0; i <= m; i += 8) {
    for (int j = 0; j <= m; j += 8) {
      x = {i * h, j * h};
      t.evaluate(x, out);
      CHECK(std::abs(out[0] - std::sqrt(x[0])) <= 2 * h);
      CHECK(std::abs(out[1] - std::sqrt(x[1])) <= 2 * h);
    }
  }
  CHECK(std::abs(displacement_cost(t, f) - 2.0 * oracle::sqrt_map_cost()) <= 2e-3);
  // The midpoint rule on log(2 sqrt x) loses (1 - log 2) h / 2 per coordinate.
  CHECK(std::abs(s_integral_nd(f, g, t) - 2.0 * oracle::sqrt_map_entropy()) <= (1.0 - std::log(2.0)) * h * 1.05);

  const auto r = check_theorem31(f, g, t, 1.0);
  CHECK(r.pass);
  CHECK(r.tag == "thm-3.1");
  const auto facets = check_facet_preservation(t);
  CHECK(facets.pass);
  CHECK(facets.lhs <= 2 * h);
  CHECK(pushforward_error(t, f, g, 100000, 4) <= 0.02);

  const auto fine = build_density(Uniform{}, Grid::unit_cube(2, 512));
  const auto gfine = four_xy(512);
  CHECK(std::abs(tire_bracket(fine, gfine, knothe_map(fine, gfine)) - 2.0 * (std::log(2.0) - 0.5)) <= 2e-3);
}

TEST_CASE("product densities reduce to coordinatewise 1D maps") {
  const int m = 48;
  const auto fa = [](double x) { return 1.0 + x; };
  const auto fb = [](double y) { return std::exp(-y); };
  const auto ga = [](double x) { return 0.5 + x * x; };
  const auto gb = [](double y) { return 1.0 + std::sin(3.0 * y); };
  const auto f = product_density(m, fa, fb);
  const auto g = product_density(m, ga, gb);
  const auto t = knothe_map(f, g);

  const auto line = [&](const std::function<double(double)>& fn) {
    auto grid = Grid::unit_cube(1, m);
    std::vector<double> v(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) v[static_cast<std::size_t>(i)] = fn(grid.center(0, i));
    return normalize(GridDensity(grid, v));
  };
  const auto t0 = monotone_map(line(fa), line(ga));
  const auto t1 = monotone_map(line(fb), line(gb));
  std::vector<double> c(2);
  for (std::size_t cell = 0; cell < f.grid().cell_count(); cell += 7) {
    f.grid().cell_center(cell, c);
    const auto th = t.displacement(cell);
    CHECK(std::abs(th[0] - (t0(c[0]) - c[0])) <= 1e-9);
    CHECK(std::abs(th[1] - (t1(c[1]) - c[1])) <= 1e-9);
  }
  // Tire bracket of a product is the sum of the 1D deficits.
  const double sum = deficit_1d(line(fa), line(ga), t0) + deficit_1d(line(fb), line(gb), t1);
  CHECK(std::abs(tire_bracket(f, g, t) - sum) <= 5.0 / m);
}

TEST_CASE("cost splits into base and fiber parts") {
  std::mt19937_64 rng(17);
  for (int n : {2, 3}) {
    const int m = n == 2 ? 32 : 12;
    const auto f = oracle::random_smooth(n, m, rng);
    const auto g = oracle::random_smooth(n, m, rng);
    const auto t = knothe_map(f, g);
    const auto split = split_displacement_cost(t, f);
    const double h = 1.0 / m;
    CHECK(std::abs(split.base + split.fibers - displacement_cost(t, f)) <= 5 * h);

    // Base part recomputed from the marginal and the base map directly.
    const auto pi = marginalize_last(f);
    double base = 0.0;
    const auto* p = t.base();
    REQUIRE(p != nullptr);
    for (std::size_t y = 0; y < pi.grid().cell_count(); ++y) {
      double d2 = 0.0;
      for (double th : p->displacement(y)) d2 += th * th;
      base += d2 * pi.value(y) * pi.grid().cell_volume();
    }
    CHECK(std::abs(base - split.base) <= 5 * h);

    // Fiber maps are strictly increasing with fixed endpoints.
    for (const auto& fm : t.fiber_maps()) {
      const auto nodes = fm.node_values();
      CHECK(nodes.front() == 0.0);
      CHECK(nodes.back() == 1.0);
      for (std::size_t k = 1; k < nodes.size(); ++k) CHECK(nodes[k] > nodes[k - 1]);
    }
    CHECK(check_facet_preservation(t).pass);
    for (double th : t.displacement_field()) CHECK(std::abs(th) <= 1.0);
  }
}

TEST_CASE("gradient identity along the base coordinates") {
  // sum_{y,r} grad_y f . (P(y) - y) h^n equals sum_y grad pi(f) . (P(y) - y) h^{n-1}
  std::mt19937_64 rng(23);
  const int m = 32;
  const auto f = oracle::random_smooth(2, m, rng);
  const auto g = oracle::random_smooth(2, m, rng);
  const auto t = knothe_map(f, g);
  const auto dfx = finite_difference(f, 0);
  const auto pi = marginalize_last(f);
  const auto dpi = finite_difference(pi, 0);
  double full = 0.0;
  for (std::size_t c = 0; c < f.grid().cell_count(); ++c) {
    full += dfx[c] * t.base()->displacement(c / m)[0];
  }
  full *= f.grid().cell_volume();
  double reduced = 0.0;
  for (std::size_t y = 0; y < pi.grid().cell_count(); ++y) reduced += dpi[y] * t.base()->displacement(y)[0];
  reduced *= pi.grid().cell_volume();
  CHECK(full == doctest::Approx(reduced).epsilon(1e-9));
}

TEST_CASE("theorem suite on random pairs") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 6; ++trial) {
    const int n = 2 + trial % 2;
    const int m = n == 2 ? 32 : 12;
    RestrictedGaussian spec;
    spec.center.assign(static_cast<std::size_t>(n), 0.3);
    spec.inverse_covariance.assign(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n), 0.0));
    for (int i = 0; i < n; ++i) spec.inverse_covariance[i][i] = 1.0;
    const auto f = build_density(spec, Grid::unit_cube(n, m));
    const auto g = oracle::random_smooth(n, m, rng);
    const auto r = check_theorem31(f, g, estimate_axis_convexity_ratio(f));
    CHECK(r.pass);
    CHECK(tire_bracket(f, g, knothe_map(f, g)) >= -1e-6);
  }
}

TEST_CASE("errors and interpolation") {
  const auto f = build_density(Uniform{}, Grid::unit_cube(2, 4));
  const auto other = build_density(Uniform{}, Grid::unit_cube(2, 5));
  CHECK_THROWS_AS(knothe_map(f, other), Error);
  const GridDensity zero(Grid::unit_cube(2, 4), std::vector<double>(16, 0.0));
  CHECK_THROWS_AS(knothe_map(f, zero), Error);
  const auto wide = build_density(Uniform{}, Grid(2, 4, {0.0, 0.0}, 2.0));
  CHECK_THROWS_AS(check_theorem31(wide, wide, 1.0), Error);

  // Multilinear interpolation is exact for affine values.
  auto grid = Grid::unit_cube(2, 8);
  std::vector<double> v(grid.cell_count());
  std::vector<double> c(2);
  for (std::size_t i = 0; i < v.size(); ++i) {
    grid.cell_center(i, c);
    v[i] = 1.0 + 2.0 * c[0] + 3.0 * c[1];
  }
  const GridDensity lin(grid, v);
  const std::vector<double> x{0.37, 0.61};
  CHECK(interpolate(lin, x) == doctest::Approx(1.0 + 0.74 + 1.83));
}

TEST_CASE("threaded construction is deterministic") {
  std::mt19937_64 rng(41);
  const auto f = oracle::random_smooth(3, 10, rng);
  const auto g = oracle::random_smooth(3, 10, rng);
  const auto a = knothe_map(f, g, 1);
  const auto b = knothe_map(f, g, 4);
  const auto da = a.displacement_field();
  const auto db = b.displacement_field();
  REQUIRE(da.size() == db.size());
  for (std::size_t i = 0; i < da.size(); ++i) CHECK(da[i] == db[i]);
}
