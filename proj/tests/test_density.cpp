#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "cube_transport/density.hpp"
#include "cube_transport/error.hpp"
#include "cube_transport/spec_json.hpp"
#include "oracles.hpp"

using namespace cube_transport;

namespace {

GridDensity gaussian(int n, int m) {
  RestrictedGaussian spec;
  spec.center.assign(static_cast<std::size_t>(n), 0.0);
  spec.inverse_covariance.assign(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n), 0.0));
  for (int i = 0; i < n; ++i) spec.inverse_covariance[i][i] = 1.0;
  return build_density(spec, Grid::unit_cube(n, m));
}

}  // namespace

TEST_CASE("grid geometry and indexing") {
  Grid g(3, 4, {1.0, -1.0, 0.5}, 2.0);
  CHECK(g.cell_count() == 64);
  CHECK(g.cell_width() == doctest::Approx(0.5));
  CHECK(g.cell_volume() == doctest::Approx(0.125));
  CHECK(g.stride(2) == 1);
  CHECK(g.stride(0) == 16);
  const std::vector<int> idx{1, 2, 3};
  const auto flat = g.flatten(idx);
  CHECK(g.unflatten(flat) == idx);
  CHECK(g.locate(1, -5.0) == 0);
  CHECK(g.locate(1, 100.0) == 3);
  CHECK(g.center(0, 0) == doctest::Approx(1.25));
  CHECK_THROWS_AS(Grid(2, 0, {0.0, 0.0}, 1.0), Error);
  CHECK_THROWS_AS(Grid(2, 2, {0.0}, 1.0), Error);
  CHECK_THROWS_AS(Grid::unit_cube(3, 257), Error);
}

TEST_CASE("build_density examples") {
  const auto u = build_density(Uniform{}, Grid::unit_cube(1, 4));
  for (double v : u.values()) CHECK(v == doctest::Approx(1.0));
  CHECK(u.total_mass() == doctest::Approx(1.0));

  const auto lin = build_density(ConvexPower{0.0, {2.0}, 1.0}, Grid::unit_cube(1, 1024));
  CHECK(std::abs(lin.total_mass() - 1.0) <= 1e-12);
  CHECK(lin.value(512) == doctest::Approx(2.0 * lin.grid().center(0, 512)).epsilon(1e-12));

  // b + x.v <= 0 somewhere on the cube.
  CHECK_THROWS_AS(build_density(ConvexPower{-0.5, {1.0}, 2.0}, Grid::unit_cube(1, 8)), Error);
  CHECK_THROWS_AS(build_density(ConvexPower{1.0, {1.0}, 0.5}, Grid::unit_cube(1, 8)), Error);
  CHECK_THROWS_AS(build_density(ExponentialTilt{{1.0, 2.0}}, Grid::unit_cube(1, 8)), Error);
}

TEST_CASE("normalize") {
  const auto grid = Grid::unit_cube(1, 2);
  auto a = normalize(GridDensity(grid, {2.0, 2.0}));
  CHECK(a.value(0) == doctest::Approx(1.0));
  auto b = normalize(GridDensity(grid, {1.0, 3.0}));
  CHECK(b.value(0) == doctest::Approx(0.5));
  CHECK(b.value(1) == doctest::Approx(1.5));
  CHECK_THROWS_AS(normalize(GridDensity(grid, {0.0, 0.0})), Error);
  CHECK_THROWS_AS(GridDensity(grid, {-1.0, 1.0}), Error);
}

TEST_CASE("axis convexity ratio") {
  CHECK(estimate_axis_convexity_ratio(build_density(Uniform{}, Grid::unit_cube(2, 16))) == doctest::Approx(1.0));
  CHECK(estimate_axis_convexity_ratio(build_density(ConvexPower{0.0, {2.0}, 1.0}, Grid::unit_cube(1, 128))) ==
        doctest::Approx(1.0));
  const double r = estimate_axis_convexity_ratio(gaussian(2, 64));
  CHECK(r >= 1.0);
  CHECK(r <= std::exp(0.125) + 1e-3);

  // Scale invariance and convex families.
  const auto tilt = build_density(ExponentialTilt{{1.5, -2.0}}, Grid::unit_cube(2, 32));
  CHECK(std::abs(estimate_axis_convexity_ratio(tilt) - 1.0) <= 1e-9);
  const auto pw = build_density(ConvexPower{0.3, {1.0, 2.0}, 3.0}, Grid::unit_cube(2, 32));
  CHECK(std::abs(estimate_axis_convexity_ratio(pw) - 1.0) <= 1e-9);
  std::vector<double> scaled(pw.values().begin(), pw.values().end());
  for (double& v : scaled) v *= 7.5;
  CHECK(estimate_axis_convexity_ratio(GridDensity(pw.grid(), scaled)) ==
        doctest::Approx(estimate_axis_convexity_ratio(pw)).epsilon(1e-12));

  CHECK_THROWS_AS(estimate_axis_convexity_ratio(GridDensity(Grid::unit_cube(1, 3), {1.0, 0.0, 1.0})), Error);
}

TEST_CASE("marginal of a density never worsens the axis ratio") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const auto d = oracle::random_smooth(3, 12, rng, 0.8);
    const double r = estimate_axis_convexity_ratio(d);
    CHECK(estimate_axis_convexity_ratio(marginalize_last(d)) <= r + 1e-9);
  }
}

TEST_CASE("midpoint log-concavity") {
  const auto u = check_midpoint_log_concavity(build_density(Uniform{}, Grid::unit_cube(2, 8)), 1e-12);
  CHECK(u.log_concave);
  CHECK(u.worst_violation == doctest::Approx(0.0));
  CHECK(check_midpoint_log_concavity(gaussian(3, 10), 1e-12).log_concave);

  const auto grid = Grid::unit_cube(1, 64);
  std::vector<double> step(64);
  for (int i = 0; i < 64; ++i) step[static_cast<std::size_t>(i)] = grid.center(0, i) > 0.5 ? 10.0 : 1.0;
  const auto jump = check_midpoint_log_concavity(GridDensity(grid, step), 1e-9);
  CHECK_FALSE(jump.log_concave);
  CHECK(jump.worst_violation > 0.5);
}

TEST_CASE("diagonal second derivative bound") {
  CHECK(estimate_diag_second_derivative_bound(build_density(Uniform{}, Grid::unit_cube(2, 8))) ==
        doctest::Approx(0.0));
  CHECK(estimate_diag_second_derivative_bound(gaussian(2, 64)) == doctest::Approx(1.0).epsilon(0.05));
  CHECK(estimate_diag_second_derivative_bound(build_density(ExponentialTilt{{3.0, -1.0}}, Grid::unit_cube(2, 32))) <=
        1e-9);
}

TEST_CASE("marginals and fibers") {
  const auto u2 = build_density(Uniform{}, Grid::unit_cube(2, 8));
  const auto u1 = marginalize_last(u2);
  CHECK(u1.grid().dim() == 1);
  for (double v : u1.values()) CHECK(v == doctest::Approx(1.0));
  CHECK_THROWS_AS(marginalize_last(u1), Error);

  // Separable Gaussian: the marginal is the 1D restricted Gaussian.
  const auto g2 = gaussian(2, 64);
  const auto g1 = gaussian(1, 64);
  const auto marg = marginalize_last(g2);
  for (std::size_t i = 0; i < 64; ++i) CHECK(std::abs(marg.value(i) - g1.value(i)) <= 1e-10);
  CHECK(std::abs(marg.total_mass() - g2.total_mass()) <= 1e-12);

  // g(x, y) = 4xy: each fiber is proportional to y.
  const auto prod = build_density(CustomGrid{[] {
                                    auto grid = Grid::unit_cube(2, 16);
                                    std::vector<double> v(grid.cell_count());
                                    for (std::size_t c = 0; c < v.size(); ++c) {
                                      auto idx = grid.unflatten(c);
                                      v[c] = 4.0 * grid.center(0, idx[0]) * grid.center(1, idx[1]);
                                    }
                                    return v;
                                  }()},
                                  Grid::unit_cube(2, 16));
  const std::vector<int> y{3};
  const auto f = fiber(prod, y);
  const double ratio = f.value(0) / f.grid().center(0, 0);
  for (int r = 0; r < 16; ++r) CHECK(f.value(static_cast<std::size_t>(r)) == doctest::Approx(ratio * f.grid().center(0, r)));
  const std::vector<int> bad{16};
  CHECK_THROWS_AS(fiber(prod, bad), Error);
}

TEST_CASE("finite differences") {
  const auto grid = Grid::unit_cube(1, 4);
  const GridDensity d(grid, {1.0, 2.0, 4.0, 8.0});
  const auto df = finite_difference(d, 0);
  CHECK(df[0] == doctest::Approx(4.0));
  CHECK(df[1] == doctest::Approx(6.0));
  CHECK(df[3] == doctest::Approx(16.0));
  const std::vector<double> signed_values{-1.0, 0.0, 1.0, 2.0};
  CHECK(finite_difference(grid, signed_values, 0)[2] == doctest::Approx(4.0));
}

TEST_CASE("spec JSON and density files round-trip") {
  const DensitySpec specs[] = {RestrictedGaussian{{0.1, 0.2}, {{2.0, 0.5}, {0.5, 1.0}}}, ExponentialTilt{{1.0}},
                               ConvexPower{0.5, {1.0, -0.2}, 2.0}, Uniform{}, CorrelatedGaussianRemark{5, 0.01},
                               CustomGrid{{1.0, 2.0}}};
  for (const auto& spec : specs) {
    const auto j = density_spec_to_json(spec);
    CHECK(density_spec_to_json(density_spec_from_json(j)) == j);
    CHECK(j.at("variant") == variant_name(spec));
  }
  CHECK_THROWS_AS(density_spec_from_json(nlohmann::json{{"variant", "nope"}}), Error);

  const auto d = gaussian(2, 8);
  const auto dir = std::filesystem::temp_directory_path() / "cube_transport_density_io";
  std::filesystem::create_directories(dir);
  for (auto format : {ValuesFormat::kCsv, ValuesFormat::kBinary}) {
    const auto header = write_grid_density(d, dir / (format == ValuesFormat::kCsv ? "csv" : "bin"), format);
    const auto back = read_grid_density(header);
    CHECK(back.grid().same_geometry(d.grid()));
    for (std::size_t c = 0; c < d.grid().cell_count(); ++c) CHECK(back.value(c) == d.value(c));
    CHECK(fingerprint(back) == fingerprint(d));
  }
  CHECK_THROWS_AS(read_grid_density(dir / "missing.json"), Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("correlated construction has the stated inverse covariance") {
  const int n = 3;
  const double s = 0.2;
  const auto d = build_density(CorrelatedGaussianRemark{n, s}, Grid(n, 16, {-0.5, -0.5, -0.5}, 1.0));
  // psi'' along an axis equals (1 - 1/(n+1)) / s^2.
  CHECK(estimate_diag_second_derivative_bound(d) == doctest::Approx((1.0 - 1.0 / (n + 1)) / (s * s)).epsilon(1e-6));
  CHECK(remark_default_scale(1024) == doctest::Approx(1.0 / (100.0 * std::sqrt(std::log(1024.0)))));
}
