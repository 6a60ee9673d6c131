#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "cube_transport/error.hpp"
#include "cube_transport/sampler.hpp"

using namespace cube_transport;

TEST_CASE("uniform and linear means") {
  const std::size_t n = 100000;
  const double tol = 3.0 / std::sqrt(static_cast<double>(n));
  const auto u = sample_grid(build_density(Uniform{}, Grid::unit_cube(3, 8)), n, 1);
  for (int a = 0; a < 3; ++a) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += u.point(i)[static_cast<std::size_t>(a)];
    CHECK(std::abs(mean / n - 0.5) <= tol);
  }
  const auto lin = sample_grid(build_density(ConvexPower{0.0, {2.0}, 1.0}, Grid::unit_cube(1, 256)), n, 2);
  const double mean = std::accumulate(lin.points.begin(), lin.points.end(), 0.0) / n;
  CHECK(std::abs(mean - 2.0 / 3.0) <= tol);
  for (double x : lin.points) {
    CHECK(x >= 0.0);
    CHECK(x <= 1.0);
  }
}

TEST_CASE("determinism across seeds and threads") {
  const auto d = build_density(ExponentialTilt{{1.0, -2.0}}, Grid::unit_cube(2, 16));
  const auto a = sample_grid(d, 40000, 7, 1);
  const auto b = sample_grid(d, 40000, 7, 3);
  CHECK(a.points == b.points);
  CHECK(a.fingerprint == b.fingerprint);
  const auto c = sample_grid(d, 40000, 8, 1);
  CHECK(a.points != c.points);
  // A prefix of a longer run reproduces the shorter run.
  const auto longer = sample_grid(d, 50000, 7, 2);
  CHECK(std::equal(a.points.begin(), a.points.end(), longer.points.begin()));
}

TEST_CASE("empirical marginal distance") {
  const auto d = build_density(ExponentialTilt{{2.0, 1.0}}, Grid::unit_cube(2, 32));
  const auto small = sample_grid(d, 10000, 3);
  const auto big = sample_grid(d, 40000, 3);
  const double ds = empirical_marginal_distance(small, d);
  const double db = empirical_marginal_distance(big, d);
  CHECK(ds <= 2.0 / std::sqrt(10000.0));
  CHECK(db <= 2.0 / std::sqrt(40000.0) + 1.0 / 32);
  const auto other = build_density(ExponentialTilt{{-2.0, 1.0}}, Grid::unit_cube(2, 32));
  CHECK(empirical_marginal_distance(small, other) > 0.2);
  CHECK_THROWS_AS(empirical_marginal_distance(small, build_density(Uniform{}, Grid::unit_cube(1, 4))), Error);

  // sqrt(N) scaling, averaged over seeds.
  double sum_small = 0.0;
  double sum_big = 0.0;
  for (std::uint64_t s = 0; s < 8; ++s) {
    sum_small += empirical_marginal_distance(sample_grid(d, 5000, 100 + s), d);
    sum_big += empirical_marginal_distance(sample_grid(d, 20000, 200 + s), d);
  }
  CHECK(sum_big / sum_small == doctest::Approx(0.5).epsilon(0.35));

  const GridDensity zero(Grid::unit_cube(1, 4), std::vector<double>(4, 0.0));
  CHECK_THROWS_AS(sample_grid(zero, 10, 1), Error);
}

TEST_CASE("correlated construction") {
  const int n = 1024;
  const std::size_t count = 4000;
  const auto s = sample_remark_counterexample(n, count, 5);
  CHECK(s.acceptance_rate >= 0.99);
  CHECK(s.batch.size() == count);
  for (double x : s.batch.points) CHECK(std::abs(x) <= 0.5);

  const double expected_var = 2.0 / (1e4 * std::log(static_cast<double>(n)));
  std::vector<double> mean(2, 0.0);
  double var0 = 0.0, var1 = 0.0, cov = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    mean[0] += s.batch.point(i)[0];
    mean[1] += s.batch.point(i)[1];
  }
  mean[0] /= count;
  mean[1] /= count;
  for (std::size_t i = 0; i < count; ++i) {
    const double a = s.batch.point(i)[0] - mean[0];
    const double b = s.batch.point(i)[1] - mean[1];
    var0 += a * a;
    var1 += b * b;
    cov += a * b;
  }
  CHECK(var0 / count == doctest::Approx(expected_var).epsilon(0.2));
  CHECK(cov / std::sqrt(var0 * var1) == doctest::Approx(0.5).epsilon(0.15));

  CHECK_THROWS_AS(sample_remark_counterexample(1, 10, 1), Error);
  const auto again = sample_remark_counterexample(64, 1000, 9, 2);
  CHECK(again.batch.points == sample_remark_counterexample(64, 1000, 9, 1).batch.points);
}

TEST_CASE("batch CSV with sidecar") {
  const auto d = build_density(Uniform{}, Grid::unit_cube(2, 4));
  const auto batch = sample_grid(d, 10, 42);
  const auto path = std::filesystem::temp_directory_path() / "cube_transport_batch.csv";
  write_batch_csv(batch, path);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "x0,x1");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 10);
  auto sidecar = path;
  sidecar += ".json";
  std::ifstream meta(sidecar);
  const auto j = nlohmann::json::parse(meta);
  CHECK(j.at("seed") == 42);
  CHECK(j.at("N") == 10);
  CHECK(j.at("fingerprint") == fingerprint(d));
  std::filesystem::remove(path);
  std::filesystem::remove(sidecar);
}
