#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "cube_transport/error.hpp"
#include "cube_transport/functionals.hpp"
#include "oracles.hpp"

using namespace cube_transport;

namespace {

GridDensity uniform(int n, int m) { return build_density(Uniform{}, Grid::unit_cube(n, m)); }
GridDensity linear1(int m) { return build_density(ConvexPower{0.0, {2.0}, 1.0}, Grid::unit_cube(1, m)); }

GridDensity four_xy(int m) {
  auto grid = Grid::unit_cube(2, m);
  std::vector<double> v(grid.cell_count());
  std::vector<double> x(2);
  for (std::size_t c = 0; c < v.size(); ++c) {
    grid.cell_center(c, x);
    v[c] = 4 * x[0] * x[1];
  }
  return normalize(GridDensity(grid, v));
}

GridDensity log_concave(int n, int m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  if (rng() % 2 == 0) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (double& x : v) x = 2.0 * u(rng);
    return build_density(ExponentialTilt{v}, Grid::unit_cube(n, m));
  }
  RestrictedGaussian g;
  for (int i = 0; i < n; ++i) g.center.push_back(0.5 + 0.5 * u(rng));
  const double off = 0.4 * u(rng);
  g.inverse_covariance = {{2.0, off}, {off, 1.5}};
  g.inverse_covariance.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) g.inverse_covariance[i].resize(static_cast<std::size_t>(n), 0.0);
  return build_density(g, Grid::unit_cube(n, m));
}

}  // namespace

TEST_CASE("relative entropy") {
  const auto f = uniform(1, 1024);
  CHECK(relative_entropy(f, f) == doctest::Approx(0.0));
  CHECK(std::abs(relative_entropy(linear1(1024), f) - (std::log(2.0) - 0.5)) <= 1e-3);

  std::vector<double> half(1024, 0.0);
  for (std::size_t i = 0; i < 512; ++i) half[i] = 2.0;
  const GridDensity g(f.grid(), half);
  CHECK(std::abs(relative_entropy(g, f) - std::log(2.0)) <= 1e-3);
  CHECK(std::isinf(relative_entropy(f, g)));

  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = oracle::random_smooth(2, 16, rng);
    const auto b = oracle::random_smooth(2, 16, rng);
    CHECK(relative_entropy(a, b) >= 0.0);
  }
}

TEST_CASE("tire bracket below relative entropy") {
  const auto f = uniform(1, 1024);
  const auto g = linear1(1024);
  // Reuse the Knothe construction in one dimension.
  const auto t = knothe_map(f, g);
  const auto r = check_tire_le_entropy(f, g, t);
  CHECK(r.pass);
  CHECK(r.lhs == doctest::Approx(r.rhs).epsilon(1e-3));
  CHECK(check_tire_le_entropy(f, f, knothe_map(f, f)).pass);

  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 12; ++trial) {
    const int n = 1 + trial % 2;
    const int m = n == 1 ? 256 : 32;
    const auto a = log_concave(n, m, rng);
    const auto b = oracle::random_smooth(n, m, rng);
    CHECK(check_tire_le_entropy(a, b, knothe_map(a, b)).pass);
  }

  std::vector<double> step(64);
  for (int i = 0; i < 64; ++i) step[static_cast<std::size_t>(i)] = i < 32 ? 1.0 : 10.0;
  const GridDensity jump(Grid::unit_cube(1, 64), step);
  CHECK_THROWS_AS(check_tire_le_entropy(jump, uniform(1, 64), knothe_map(jump, uniform(1, 64))), Error);
}

TEST_CASE("Legendre bound") {
  const auto u1 = uniform(1, 256);
  const auto same = legendre_tire_bound(u1, u1);
  CHECK(std::abs(same.bound) <= 1e-9);
  // The whole-space form drops int (grad f . x + n f) = n on the cube.
  CHECK(same.whole_space_form == doctest::Approx(-1.0));
  CHECK(same.boundary_flux == doctest::Approx(1.0));
  CHECK_FALSE(same.saturated);

  // Brute-force quadrature: f uniform so grad psi = 0 and phi*(0) = max log g.
  const auto g = linear1(1024);
  const auto b = legendre_tire_bound(uniform(1, 1024), g);
  const double oracle_bound = std::log(2.0 * (1.0 - 0.5 / 1024));
  CHECK(b.bound == doctest::Approx(oracle_bound).epsilon(1e-9));
  CHECK(b.bound >= std::log(2.0) - 0.5);

  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 12; ++trial) {
    const int n = 1 + trial % 2;
    const int m = n == 1 ? 128 : 16;
    const auto f = oracle::random_smooth(n, m, rng);
    const auto gg = oracle::random_smooth(n, m, rng);
    const double bracket = tire_bracket(f, gg, knothe_map(f, gg));
    CHECK(legendre_tire_bound(f, gg).bound >= bracket - 1e-6);
  }

  // Subsampled targets still include the source cell.
  const auto f2 = oracle::random_smooth(2, 32, rng);
  const auto coarse = legendre_tire_bound(f2, f2, 64);
  CHECK(coarse.target_stride == 16);
  CHECK(coarse.bound >= tire_bracket(f2, f2, knothe_map(f2, f2)) - 1e-6);

  const auto steep = build_density(ExponentialTilt{{-300.0}}, Grid::unit_cube(1, 64));
  CHECK(legendre_tire_bound(steep, uniform(1, 64)).saturated);
}

TEST_CASE("transportation simplex") {
  // Equal masses: the optimum is a permutation.
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t k = 6;
    std::vector<double> cost(k * k);
    for (double& c : cost) c = u(rng);
    const std::vector<double> w(k, 1.0 / k);
    const auto sol = solve_transportation(w, w, cost);
    CHECK(sol.cost == doctest::Approx(oracle::brute_force_assignment(cost, k)).epsilon(1e-12));
    // Dual feasibility and zero duality gap certify optimality.
    double dual = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      dual += w[i] * (sol.u[i] + sol.v[i]);
      for (std::size_t j = 0; j < k; ++j) CHECK(cost[i * k + j] - sol.u[i] - sol.v[j] >= -1e-12);
    }
    CHECK(dual == doctest::Approx(sol.cost).epsilon(1e-12));
  }
  // Unequal masses and rectangular problems.
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t r = 5 + trial % 4;
    const std::size_t c = 3 + trial % 7;
    std::vector<double> a(r);
    std::vector<double> b(c);
    for (double& x : a) x = u(rng) + 0.01;
    for (double& x : b) x = u(rng) + 0.01;
    double sa = 0.0, sb = 0.0;
    for (double x : a) sa += x;
    for (double x : b) sb += x;
    for (double& x : b) x *= sa / sb;
    std::vector<double> cost(r * c);
    for (double& x : cost) x = u(rng);
    const auto sol = solve_transportation(a, b, cost);
    double dual = 0.0;
    for (std::size_t i = 0; i < r; ++i) dual += a[i] * sol.u[i];
    for (std::size_t j = 0; j < c; ++j) dual += b[j] * sol.v[j];
    CHECK(dual == doctest::Approx(sol.cost).epsilon(1e-10));
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) CHECK(cost[i * c + j] - sol.u[i] - sol.v[j] >= -1e-10);
  }
  const std::vector<double> one{1.0};
  const std::vector<double> two{2.0};
  CHECK_THROWS_AS(solve_transportation(one, two, std::vector<double>{0.0}), Error);
}

TEST_CASE("exact W2 on small grids") {
  const auto u = uniform(2, 6);
  const auto self = exact_w2_small(u, u);
  CHECK(self.cost <= 1e-15);
  for (const auto& e : self.plan.entries) {
    if (e.weight > 1e-15) CHECK(e.source == e.target);
  }

  const int m = 64;
  const auto f = uniform(1, m);
  const auto g = linear1(m);
  const auto w = exact_w2_small(f, g);
  CHECK(std::abs(w.cost - 1.0 / 30.0) <= 3.0 / m);
  std::vector<std::pair<double, double>> a;
  std::vector<std::pair<double, double>> b;
  for (int i = 0; i < m; ++i) {
    a.emplace_back(f.grid().center(0, i), f.value(static_cast<std::size_t>(i)));
    b.emplace_back(g.grid().center(0, i), g.value(static_cast<std::size_t>(i)));
  }
  CHECK(w.cost == doctest::Approx(oracle::quantile_w2(a, b)).epsilon(1e-10));
  const auto rows = w.plan.row_sums();
  const auto cols = w.plan.column_sums();
  for (int i = 0; i < m; ++i) {
    CHECK(std::abs(rows[static_cast<std::size_t>(i)] - f.value(static_cast<std::size_t>(i)) / m) <= 1e-9);
    CHECK(std::abs(cols[static_cast<std::size_t>(i)] - g.value(static_cast<std::size_t>(i)) / m) <= 1e-9);
  }
  // Monotone map cost agrees within 3h.
  const auto t = knothe_map(f, g);
  CHECK(std::abs(w.cost - displacement_cost(t, f)) <= 3.0 / m);

  CHECK_THROWS_AS(exact_w2_small(uniform(2, 65), uniform(2, 65)), Error);

  const auto dir = std::filesystem::temp_directory_path() / "cube_transport_plan.csv";
  write_plan_csv(w.plan, dir);
  std::ifstream in(dir);
  std::string header;
  std::getline(in, header);
  CHECK(header == "source_cell,target_cell,weight");
  std::filesystem::remove(dir);
}

TEST_CASE("sandwich on tiny instances") {
  const int m = 8;
  const auto f = uniform(2, m);
  const auto g = four_xy(m);
  const double w2 = exact_w2_small(f, g, 2).cost;
  // Centre atoms overestimate the piecewise-constant W2.
  CHECK(exact_w2_small(f, g, 1).cost > w2);
  const double knothe = displacement_cost(knothe_map(f, g), f);
  const double entropy = relative_entropy(g, f);
  const Tolerance tol;
  CHECK(w2 <= knothe * (1 + tol.rel) + tol.abs);
  CHECK(knothe <= 40.0 / 9.0 * entropy * (1 + tol.rel) + tol.abs);
}

TEST_CASE("discrete Knothe coupling") {
  std::mt19937_64 rng(31);
  SUBCASE("monotone coupling is optimal in one dimension") {
    for (int trial = 0; trial < 5; ++trial) {
      const auto f = oracle::random_smooth_1d(32, rng);
      const auto g = oracle::random_smooth_1d(32, rng);
      for (int k : {1, 2}) {
        CHECK(discrete_knothe_cost(f, g, k) == doctest::Approx(exact_w2_small(f, g, k).cost).epsilon(1e-10));
      }
    }
  }
  SUBCASE("product measures couple coordinatewise") {
    const int m = 6;
    const auto a = oracle::random_smooth_1d(m, rng);
    const auto b = oracle::random_smooth_1d(m, rng);
    const auto grid = Grid::unit_cube(2, m);
    std::vector<double> v(grid.cell_count());
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) {
        v[static_cast<std::size_t>(i * m + j)] = a.value(static_cast<std::size_t>(i)) * b.value(static_cast<std::size_t>(j));
      }
    }
    const auto g = normalize(GridDensity(grid, v));
    const auto f = uniform(2, m);
    CHECK(discrete_knothe_cost(f, g) == doctest::Approx(exact_w2_small(f, g).cost).epsilon(1e-9));
  }
  SUBCASE("feasible plan never beats the optimum") {
    for (int trial = 0; trial < 6; ++trial) {
      const auto f = log_concave(2, 8, rng);
      const auto g = oracle::random_smooth(2, 8, rng);
      CHECK(discrete_knothe_cost(f, g, 2) >= exact_w2_small(f, g, 2).cost - 1e-12);
    }
  }
  SUBCASE("refinement approaches the Knothe map cost") {
    const auto f = uniform(2, 16);
    const auto g = four_xy(16);
    const double map_cost = displacement_cost(knothe_map(f, g), f);
    const double coarse = discrete_knothe_cost(f, g, 1);
    const double fine = discrete_knothe_cost(f, g, 8);
    CHECK(std::abs(fine - map_cost) < std::abs(coarse - map_cost));
    CHECK(std::abs(fine - map_cost) <= 0.02 * map_cost);
  }
  CHECK_THROWS_AS(discrete_knothe_cost(uniform(1, 4), uniform(2, 4)), Error);
  CHECK_THROWS_AS(discrete_knothe_cost(uniform(1, 4), uniform(1, 4), 0), Error);
}
