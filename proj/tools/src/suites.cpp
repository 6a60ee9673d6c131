#include "suites.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>

#include "cube_transport/density.hpp"
#include "cube_transport/error.hpp"
#include "cube_transport/functionals.hpp"
#include "cube_transport/knothe.hpp"
#include "cube_transport/sampler.hpp"
#include "cube_transport/spec_json.hpp"
#include "cube_transport/transport1d.hpp"

namespace cube_transport::cli {

namespace {

using nlohmann::json;

// Substream ids keep every suite's randomness independent of the others.
enum Stream : std::uint64_t {
  kStreamQuadratic = 1,
  kStreamLambdaBound,
  kStreamSegment,
  kStreamCheeger,
  kStreamKnothe,
  kStreamTire,
  kStreamSandwich,
  kStreamFunctions,
  kStreamConcentration = 100,
  kStreamCounterexample = 200,
};

std::mt19937_64 suite_rng(const RunConfig& c, std::uint64_t stream) {
  return std::mt19937_64(substream_seed(c.seed, stream));
}

double uniform_in(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

std::string pair_name(const char* prefix, int i) { return std::string(prefix) + "-" + std::to_string(i); }

VerificationReport renamed(VerificationReport r, std::string name) {
  r.name = std::move(name);
  return r;
}

// Sum of a few cosine modes; exponentiated it is a smooth positive density,
// raw it is a smooth test function.
struct CosineField {
  struct Mode {
    std::vector<int> k;
    double phase = 0.0;
    double weight = 0.0;
  };
  std::vector<Mode> modes;

  double operator()(std::span<const double> x) const {
    double s = 0.0;
    for (const auto& mode : modes) {
      double arg = mode.phase;
      for (std::size_t a = 0; a < x.size(); ++a) {
        arg += std::numbers::pi * mode.k[a] * x[a];
      }
      s += mode.weight * std::cos(arg);
    }
    return s;
  }

  std::vector<double> values(const Grid& grid, double scale, bool exponentiate) const {
    std::vector<double> out(grid.cell_count());
    std::vector<double> x(static_cast<std::size_t>(grid.dim()));
    for (std::size_t cell = 0; cell < out.size(); ++cell) {
      grid.cell_center(cell, x);
      const double v = scale * (*this)(x);
      out[cell] = exponentiate ? std::exp(v) : v;
    }
    return out;
  }

  GridDensity density(const Grid& grid, double amplitude) const {
    return build_density(CustomGrid{values(grid, amplitude, true)}, grid);
  }
};

CosineField random_field(int n, std::mt19937_64& rng, int mode_count = 3, int max_k = 2) {
  CosineField field;
  std::uniform_int_distribution<int> k_dist(0, max_k);
  for (int j = 0; j < mode_count; ++j) {
    CosineField::Mode mode;
    mode.k.resize(static_cast<std::size_t>(n));
    do {
      for (int& k : mode.k) {
        k = k_dist(rng);
      }
    } while (std::all_of(mode.k.begin(), mode.k.end(), [](int k) { return k == 0; }));
    mode.phase = uniform_in(rng, 0.0, 2.0 * std::numbers::pi);
    mode.weight = uniform_in(rng, -1.0, 1.0);
    field.modes.push_back(std::move(mode));
  }
  return field;
}

DensitySpec random_convex_spec(int n, std::mt19937_64& rng) {
  const auto un = static_cast<std::size_t>(n);
  if (uniform01(rng) < 0.5) {
    ExponentialTilt t;
    t.v.resize(un);
    for (double& v : t.v) {
      v = uniform_in(rng, -2.0, 2.0);
    }
    return t;
  }
  ConvexPower p;
  p.b = uniform_in(rng, 0.2, 1.0);
  p.v.resize(un);
  for (double& v : p.v) {
    v = uniform_in(rng, 0.0, 1.0);
  }
  p.p = uniform_in(rng, 1.0, 3.0);
  return p;
}

DensitySpec random_log_concave_spec(int n, std::mt19937_64& rng) {
  if (uniform01(rng) < 1.0 / 3.0) {
    const auto un = static_cast<std::size_t>(n);
    RestrictedGaussian g;
    g.center.resize(un);
    g.inverse_covariance.assign(un, std::vector<double>(un, 0.0));
    for (std::size_t a = 0; a < un; ++a) {
      g.center[a] = uniform01(rng);
      g.inverse_covariance[a][a] = uniform_in(rng, 0.5, 4.0);
    }
    return g;
  }
  return random_convex_spec(n, rng);
}

GridDensity four_xy(int m) {
  const Grid grid = Grid::unit_cube(2, m);
  std::vector<double> values(grid.cell_count());
  std::vector<double> x(2);
  for (std::size_t cell = 0; cell < values.size(); ++cell) {
    grid.cell_center(cell, x);
    values[cell] = x[0] * x[1];
  }
  return build_density(CustomGrid{std::move(values)}, grid);
}

Grid config_grid(const RunConfig& c) {
  return Grid(c.n, c.m, std::vector<double>(static_cast<std::size_t>(c.n), 0.0), c.ell);
}

double report_ratio(const VerificationReport& r) {
  if (r.rhs > 0.0) {
    return r.lhs / r.rhs;
  }
  return r.lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
}

json density_summary(const GridDensity& d) {
  json j;
  j["mass"] = d.total_mass();
  j["fingerprint"] = fingerprint(d);
  j["positive"] = d.is_positive();
  if (d.is_positive()) {
    const auto lc = check_midpoint_log_concavity(d, 1e-9);
    j["R_hat"] = estimate_axis_convexity_ratio(d);
    j["M_hat"] = estimate_diag_second_derivative_bound(d);
    j["log_concave"] = lc.log_concave;
    j["log_concavity_violation"] = lc.worst_violation;
  }
  return j;
}

// --- 1D suites -------------------------------------------------------------

void one_d_anchor(SuiteOutput& out, Tolerance tol) {
  const Grid grid = Grid::unit_cube(1, 1024);
  const auto f = build_density(Uniform{}, grid);
  const auto g = build_density(ConvexPower{0.0, {2.0}, 1.0}, grid);
  const auto map = monotone_map(f, g);
  const auto prop = check_prop_quadratic(f, g, 1.0, tol);
  out.diagnostics["verify-1d"]["anchor"] = {{"m", 1024},
                                            {"T(0.25)", map(0.25)},
                                            {"transport_cost", prop.lhs},
                                            {"relative_entropy", relative_entropy(g, f)},
                                            {"deficit", deficit_1d(f, g, map)}};
  out.reports.push_back(renamed(prop, "prop-2.1/anchor"));
  out.reports.push_back(renamed(check_lemma_lambda(f, g, tol), "lemma-2.2/anchor"));
  out.reports.push_back(renamed(check_segment_bound(f, 1.0, 0.0, 1.0, tol), "lemma-2.4/anchor"));
  std::vector<double> bump(1025);
  for (int k = 0; k <= 1024; ++k) {
    const double x = grid.node(0, k);
    bump[static_cast<std::size_t>(k)] = x * (1.0 - x);
  }
  bump.front() = 0.0;
  bump.back() = 0.0;
  out.reports.push_back(renamed(check_cheeger_lambda(f, 1.0, bump, tol), "lemma-2.5/anchor"));
}

void prop21_suite(SuiteOutput& out, const RunConfig& c) {
  auto rng = suite_rng(c, kStreamQuadratic);
  const int m1 = c.suite.m_1d;
  const int m2 = 2 * m1;
  json cases = json::array();
  for (int i = 0; i < c.suite.pairs_1d; ++i) {
    const auto spec = random_convex_spec(1, rng);
    const auto field = random_field(1, rng, 3, 4);
    const std::string name = "prop-2.1/" + pair_name("pair", i);
    VerificationReport coarse;
    VerificationReport fine;
    double r_hat = 1.0;
    for (int m : {m1, m2}) {
      const Grid grid = Grid::unit_cube(1, m);
      const auto f = build_density(spec, grid);
      const auto g = field.density(grid, 0.6);
      r_hat = estimate_axis_convexity_ratio(f);
      auto r = check_prop_quadratic(f, g, r_hat, c.tolerance);
      (m == m1 ? coarse : fine) = r;
      out.reports.push_back(renamed(r, name + "/m=" + std::to_string(m)));
    }
    // Slack must not drift toward violation: lhs/rhs at 2m within 0.02 of m.
    out.reports.push_back(make_report(name + "/refinement", "prop-2.1", report_ratio(fine),
                                      report_ratio(coarse) + 0.02, 1.0, m2, Tolerance{0.0, 0.0}));
    cases.push_back({{"source", density_spec_to_json(spec)}, {"R_hat", r_hat}});
  }
  out.diagnostics["verify-1d"]["prop-2.1"] = cases;
}

void lemma22_suite(SuiteOutput& out, const RunConfig& c) {
  auto rng = suite_rng(c, kStreamLambdaBound);
  const Grid grid = Grid::unit_cube(1, c.suite.m_1d);
  for (int i = 0; i < c.suite.pairs_1d; ++i) {
    const auto f = random_field(1, rng, 3, 4).density(grid, 0.6);
    const auto g = random_field(1, rng, 3, 4).density(grid, 0.6);
    out.reports.push_back(renamed(check_lemma_lambda(f, g, c.tolerance), "lemma-2.2/" + pair_name("pair", i)));
  }
}

void lemma24_suite(SuiteOutput& out, const RunConfig& c) {
  auto rng = suite_rng(c, kStreamSegment);
  const Grid grid = Grid::unit_cube(1, c.suite.m_1d);
  for (int i = 0; i < c.suite.pairs_1d; ++i) {
    const auto rho = build_density(random_convex_spec(1, rng), grid);
    double a = uniform01(rng);
    double b = uniform01(rng);
    if (a > b) {
      std::swap(a, b);
    }
    if (b - a < 1e-3) {
      b = std::min(1.0, a + 0.1);
    }
    out.reports.push_back(renamed(check_segment_bound(rho, estimate_axis_convexity_ratio(rho), a, b, c.tolerance),
                                  "lemma-2.4/" + pair_name("case", i)));
  }
}

void lemma25_suite(SuiteOutput& out, const RunConfig& c) {
  auto rng = suite_rng(c, kStreamCheeger);
  const int m = c.suite.m_1d;
  const Grid grid = Grid::unit_cube(1, m);
  constexpr int kKnots = 8;
  for (int i = 0; i < c.suite.pairs_1d; ++i) {
    const auto rho = build_density(random_convex_spec(1, rng), grid);
    // Piecewise-linear through kKnots + 1 equispaced knots, zero at both ends;
    // values up to 2 so both branches of Lambda occur.
    std::vector<double> knots(kKnots + 1, 0.0);
    for (int k = 1; k < kKnots; ++k) {
      knots[static_cast<std::size_t>(k)] = uniform_in(rng, -2.0, 2.0);
    }
    std::vector<double> test_f(static_cast<std::size_t>(m) + 1);
    for (int k = 0; k <= m; ++k) {
      const double s = static_cast<double>(k) / m * kKnots;
      const int j = std::min(static_cast<int>(s), kKnots - 1);
      const auto ju = static_cast<std::size_t>(j);
      test_f[static_cast<std::size_t>(k)] = knots[ju] + (s - j) * (knots[ju + 1] - knots[ju]);
    }
    test_f.front() = 0.0;
    test_f.back() = 0.0;
    out.reports.push_back(renamed(
        check_cheeger_lambda(rho, estimate_axis_convexity_ratio(rho), test_f, c.tolerance),
        "lemma-2.5/" + pair_name("case", i)));
  }
}

void log_inequality_suite(SuiteOutput& out) {
  constexpr int kPoints = 10000;
  double worst = std::numeric_limits<double>::infinity();
  double worst_x = 1.0;
  for (int k = 0; k < kPoints; ++k) {
    const double x = std::pow(10.0, -3.0 + 6.0 * k / (kPoints - 1));
    const double gap = log_inequality_gap(x);
    if (gap < worst) {
      worst = gap;
      worst_x = x;
    }
  }
  out.reports.push_back(
      make_report("eq-2.3/log-grid", "eq-2.3", -worst, 0.0, 0.3, kPoints, Tolerance{0.0, 1e-12}));
  out.diagnostics["verify-1d"]["eq-2.3"] = {
      {"points", kPoints}, {"min_gap", worst}, {"argmin", worst_x}, {"gap_at_2", log_inequality_gap(2.0)}};
}

// --- Knothe ----------------------------------------------------------------

void knothe_case(SuiteOutput& out, const RunConfig& c, const std::string& label, const GridDensity& f,
                 const GridDensity& g, double R, std::uint64_t seed, json& record) {
  const auto map = knothe_map(f, g, c.threads);
  out.reports.push_back(renamed(check_theorem31(f, g, map, R, c.tolerance), "thm-3.1/" + label));
  out.reports.push_back(renamed(check_facet_preservation(map), "eq-5.3/facets/" + label));
  const int m = f.grid().cells_per_axis();
  const std::size_t count = c.suite.pushforward_n;
  const double err = pushforward_error(map, f, g, count, seed, c.threads);
  const double allowance = 2.0 / std::sqrt(static_cast<double>(count)) + 2.0 * f.grid().cell_width();
  out.reports.push_back(make_report("thm-3.1/pushforward/" + label, "thm-3.1", err, allowance, 1.0, m,
                                    Tolerance{0.0, 0.0}));
  const auto split = split_displacement_cost(map, f);
  record["n"] = f.grid().dim();
  record["m"] = m;
  record["R_hat"] = R;
  record["cost"] = displacement_cost(map, f);
  record["cost_base"] = split.base;
  record["cost_fibers"] = split.fibers;
  record["tire_bracket"] = tire_bracket(f, g, map);
  record["pushforward_error"] = err;
}

// --- concentration helpers -------------------------------------------------

int concentration_grid_m(int n) {
  // Largest m with m^n <= 2^20, capped at 256.
  int m = 1;
  while (m < 256 && std::pow(static_cast<double>(m + 1), n) <= static_cast<double>(1 << 20)) {
    ++m;
  }
  return m;
}

std::vector<double> t_values(int count, double t_max) {
  std::vector<double> ts(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    ts[static_cast<std::size_t>(k)] = t_max * (k + 1) / count;
  }
  return ts;
}

struct Direction {
  std::string name;
  std::vector<double> u;
};

std::vector<Direction> directions(int n) {
  const auto un = static_cast<std::size_t>(n);
  std::vector<double> diag(un, 1.0 / std::sqrt(static_cast<double>(n)));
  std::vector<double> axis(un, 0.0);
  axis[0] = 1.0;
  if (n == 1) {
    return {{"axis0", axis}};
  }
  return {{"diagonal", diag}, {"axis0", axis}};
}

}  // namespace

void SuiteOutput::append(SuiteOutput other) {
  reports.insert(reports.end(), std::make_move_iterator(other.reports.begin()),
                 std::make_move_iterator(other.reports.end()));
  diagnostics.update(other.diagnostics);
  profiles.insert(profiles.end(), std::make_move_iterator(other.profiles.begin()),
                  std::make_move_iterator(other.profiles.end()));
  if (other.scaling) {
    scaling = std::move(other.scaling);
  }
}

SuiteOutput run_density_check(const RunConfig& c) {
  SuiteOutput out;
  const Grid grid = config_grid(c);
  auto check_role = [&](const char* role, const DensitySpec& spec) {
    const auto d = build_density(spec, grid);
    json summary = density_summary(d);
    summary["variant"] = variant_name(spec);
    if (c.n >= 2 && d.is_positive()) {
      const double r = estimate_axis_convexity_ratio(d);
      const double r_marginal = estimate_axis_convexity_ratio(marginalize_last(d));
      summary["R_hat_marginal"] = r_marginal;
      out.reports.push_back(make_report(std::string("lemma-3.3/") + role, "lemma-3.3", r_marginal, r, 1.0, c.m,
                                        Tolerance{0.0, 1e-9}));
    }
    out.diagnostics["density-check"][role] = summary;
  };
  check_role("source", c.source.value_or(DensitySpec{Uniform{}}));
  if (c.target) {
    check_role("target", *c.target);
  }
  return out;
}

SuiteOutput run_verify_1d(const RunConfig& c) {
  SuiteOutput out;
  one_d_anchor(out, c.tolerance);
  prop21_suite(out, c);
  lemma22_suite(out, c);
  lemma24_suite(out, c);
  lemma25_suite(out, c);
  log_inequality_suite(out);
  if (c.n == 1 && c.source && c.target) {
    const Grid grid = config_grid(c);
    const auto f = build_density(*c.source, grid);
    const auto g = build_density(*c.target, grid);
    out.reports.push_back(renamed(check_lemma_lambda(f, g, c.tolerance), "lemma-2.2/configured"));
    if (std::abs(c.ell - 1.0) < 1e-12) {
      out.reports.push_back(renamed(check_prop_quadratic(f, g, estimate_axis_convexity_ratio(f), c.tolerance),
                                    "prop-2.1/configured"));
    }
  }
  return out;
}

SuiteOutput run_verify_knothe(const RunConfig& c) {
  SuiteOutput out;
  json& diag = out.diagnostics["verify-knothe"];
  {
    const auto f = build_density(Uniform{}, Grid::unit_cube(2, 64));
    const auto g = four_xy(64);
    json record;
    knothe_case(out, c, "anchor", f, g, 1.0, substream_seed(c.seed, kStreamKnothe), record);
    record["relative_entropy"] = relative_entropy(g, f);
    diag["anchor"] = record;
  }
  auto rng = suite_rng(c, kStreamKnothe);
  json cases = json::array();
  for (int i = 0; i < c.suite.knothe_pairs; ++i) {
    const int n = i % 2 == 0 ? 2 : 3;
    const Grid grid = Grid::unit_cube(n, n == 2 ? 64 : 16);
    const auto spec = random_log_concave_spec(n, rng);
    const auto f = build_density(spec, grid);
    const auto g = random_field(n, rng).density(grid, 0.5);
    json record;
    record["source"] = density_spec_to_json(spec);
    knothe_case(out, c, pair_name("pair", i), f, g, estimate_axis_convexity_ratio(f),
                substream_seed(c.seed, kStreamKnothe + 1000 + static_cast<std::uint64_t>(i)), record);
    cases.push_back(record);
  }
  diag["pairs"] = cases;
  if (c.source && c.target) {
    const Grid grid = config_grid(c);
    const auto f = build_density(*c.source, grid);
    const auto g = build_density(*c.target, grid);
    json record;
    knothe_case(out, c, "configured", f, g, estimate_axis_convexity_ratio(f),
                substream_seed(c.seed, kStreamKnothe + 999), record);
    diag["configured"] = record;
  }
  return out;
}

SuiteOutput run_tire(const RunConfig& c) {
  SuiteOutput out;
  json& diag = out.diagnostics["tire"];
  auto rng = suite_rng(c, kStreamTire);
  json cases = json::array();
  for (int i = 0; i < c.suite.tire_pairs; ++i) {
    for (int n : {1, 2}) {
      const Grid grid = Grid::unit_cube(n, n == 1 ? 256 : 32);
      const std::string label = pair_name("pair", i) + "/n=" + std::to_string(n);
      const auto spec = random_log_concave_spec(n, rng);
      const auto f = build_density(spec, grid);
      const auto g = random_field(n, rng).density(grid, 0.5);
      const auto map = knothe_map(f, g, c.threads);
      const auto lemma = check_tire_le_entropy(f, g, map, c.tolerance);
      out.reports.push_back(renamed(lemma, "lemma-4.1/" + label));
      const auto legendre = legendre_tire_bound(f, g);
      out.reports.push_back(
          make_report("eq-4.2/" + label, "eq-4.2", lemma.lhs, legendre.bound, 1.0, grid.cells_per_axis(), c.tolerance));
      // The Legendre bound needs no log-concavity; also check it on a smooth source.
      const auto f_smooth = random_field(n, rng).density(grid, 0.5);
      const auto map_smooth = knothe_map(f_smooth, g, c.threads);
      const auto legendre_smooth = legendre_tire_bound(f_smooth, g);
      out.reports.push_back(make_report("eq-4.2/smooth-" + label, "eq-4.2", tire_bracket(f_smooth, g, map_smooth),
                                        legendre_smooth.bound, 1.0, grid.cells_per_axis(), c.tolerance));
      cases.push_back({{"label", label},
                       {"source", density_spec_to_json(spec)},
                       {"tire_bracket", lemma.lhs},
                       {"relative_entropy", lemma.rhs},
                       {"legendre_bound", legendre.bound},
                       {"legendre_whole_space_form", legendre.whole_space_form},
                       {"legendre_saturated", legendre.saturated || legendre_smooth.saturated}});
    }
  }
  diag["pairs"] = cases;

  // Sandwich W2 <= Knothe cost <= (40/9) R^2 D on tiny grids.
  auto sandwich_rng = suite_rng(c, kStreamSandwich);
  constexpr int kSandwichM = 8;
  const Grid grid = Grid::unit_cube(2, kSandwichM);
  json links = json::array();
  for (int i = 0; i < c.suite.tire_pairs; ++i) {
    GridDensity f = build_density(Uniform{}, grid);
    GridDensity g = four_xy(kSandwichM);
    json source = density_spec_to_json(Uniform{});
    if (i > 0) {
      const auto spec = random_log_concave_spec(2, sandwich_rng);
      f = build_density(spec, grid);
      g = random_field(2, sandwich_rng).density(grid, 0.5);
      source = density_spec_to_json(spec);
    }
    const int k = c.suite.sandwich_subdivisions;
    const auto map = knothe_map(f, g, c.threads);
    const double knothe_cost = displacement_cost(map, f);
    // The lower link compares two couplings of the same sub-cell atoms; the
    // map cost carries an O(h^2) quadrature error that m = 8 cannot resolve.
    const double w2 = exact_w2_small(f, g, k).cost;
    const double knothe_atoms = discrete_knothe_cost(f, g, k);
    const double entropy = relative_entropy(g, f);
    const double r_hat = estimate_axis_convexity_ratio(f);
    const double constant = 40.0 / 9.0 * r_hat * r_hat;
    const std::string label = i == 0 ? std::string("anchor") : pair_name("pair", i);
    out.reports.push_back(
        make_report("thm-4.2/w2-knothe/" + label, "thm-4.2", w2, knothe_atoms, 1.0, kSandwichM, c.tolerance));
    out.reports.push_back(make_report("thm-4.2/knothe-entropy/" + label, "thm-4.2", knothe_cost,
                                      constant * entropy, constant, kSandwichM, c.tolerance));
    links.push_back({{"label", label},
                     {"source", source},
                     {"w2", w2},
                     {"knothe_atom_cost", knothe_atoms},
                     {"knothe_map_cost", knothe_cost},
                     {"relative_entropy", entropy},
                     {"R_hat", r_hat}});
  }
  diag["sandwich"] = {{"m", kSandwichM}, {"subdivisions", c.suite.sandwich_subdivisions}, {"links", links}};

  if (c.source && c.target) {
    const Grid cg = config_grid(c);
    const auto f = build_density(*c.source, cg);
    const auto g = build_density(*c.target, cg);
    const auto map = knothe_map(f, g, c.threads);
    out.reports.push_back(renamed(check_tire_le_entropy(f, g, map, c.tolerance), "lemma-4.1/configured"));
    const auto legendre = legendre_tire_bound(f, g);
    out.reports.push_back(make_report("eq-4.2/configured", "eq-4.2", tire_bracket(f, g, map), legendre.bound, 1.0,
                                      c.m, c.tolerance));
  }
  return out;
}

SuiteOutput run_concentration(const RunConfig& c) {
  SuiteOutput out;
  json& diag = out.diagnostics["concentration"];
  const auto ts = t_values(c.suite.t_count, 1.0);
  const double alpha_r = 3.0 * r_from_m(1.0);
  bool control_done = false;

  for (int n : c.suite.concentration_dims) {
    const std::string label = "gaussian-n" + std::to_string(n);
    const int m = concentration_grid_m(n);
    const Grid grid = Grid::unit_cube(n, m);
    const auto un = static_cast<std::size_t>(n);
    RestrictedGaussian spec;
    spec.center.assign(un, 0.5);
    spec.inverse_covariance.assign(un, std::vector<double>(un, 0.0));
    for (std::size_t a = 0; a < un; ++a) {
      spec.inverse_covariance[a][a] = 1.0;
    }
    const auto mu = build_density(spec, grid);
    const double r_hat = estimate_axis_convexity_ratio(mu);
    const double m_hat = std::max(0.0, estimate_diag_second_derivative_bound(mu));
    const double alpha_m = alpha_theorem1(1.0, m_hat);
    const auto batch = sample_grid(mu, c.samples, substream_seed(c.seed, kStreamConcentration + un), c.threads);
    json record = {{"m", m}, {"N", c.samples}, {"R_hat", r_hat}, {"M_hat", m_hat}, {"alpha_thm1", alpha_m},
                   {"alpha_thm2", alpha_r}};

    for (const auto& dir : directions(n)) {
      const std::string base = label + "/" + dir.name;
      auto p_r = halfspace_profile(batch, dir.u, ts, alpha_r);
      out.reports.push_back(check_concentration(p_r, "thm-1.2/" + base, "thm-1.2", m));
      auto p_rhat = halfspace_profile(batch, dir.u, ts, 3.0 * r_hat);
      out.reports.push_back(check_concentration(p_rhat, "thm-1.2/" + base + "/r-hat", "thm-1.2", m));
      auto p_m = halfspace_profile(batch, dir.u, ts, alpha_m);
      out.reports.push_back(check_concentration(p_m, "thm-1.1/" + base, "thm-1.1", m));
      if (!control_done) {
        const auto control = check_concentration(halfspace_profile(batch, dir.u, ts, 0.1), "negative-control", "thm-1.1", m);
        diag["negative_control"] = {{"case", base}, {"alpha", 0.1}, {"pass", control.pass},
                                    {"lhs", control.lhs}, {"rhs", control.rhs}};
        control_done = true;
      }
      out.profiles.push_back({"thm-1.2/" + base, std::move(p_r)});
      out.profiles.push_back({"thm-1.1/" + base, std::move(p_m)});
    }
    const auto cov = covariance_ratio(batch, alpha_m);
    out.reports.push_back(covariance_report(cov, "eq-4.4/" + label, m));
    record["covariance"] = to_json(cov);
    const auto diag_u = directions(n).front().u;
    const auto tail = lipschitz_tail(
        batch,
        [&](std::span<const double> x) {
          double s = 0.0;
          for (std::size_t a = 0; a < x.size(); ++a) {
            s += x[a] * diag_u[a];
          }
          return s;
        },
        t_values(c.suite.t_count, 0.5), alpha_m);
    record["lipschitz_tail"] = to_json(tail);
    diag[label] = record;
  }

  // Uniform density: convex and log-concave, alpha = 3; exact grid quadrature.
  for (int n : c.suite.concentration_dims) {
    const std::string label = "uniform-n" + std::to_string(n);
    constexpr int kUniformM = 4;
    const auto mu = build_density(Uniform{}, Grid::unit_cube(n, std::pow(kUniformM, n) <= 1 << 20 ? kUniformM : 1));
    for (const auto& dir : directions(n)) {
      auto p = halfspace_profile(mu, dir.u, ts, 3.0);
      out.reports.push_back(check_concentration(p, "cor-1.3/" + label + "/" + dir.name, "cor-1.3",
                                                mu.grid().cells_per_axis()));
      out.profiles.push_back({"cor-1.3/" + label + "/" + dir.name, std::move(p)});
    }
    const auto cov = covariance_ratio(mu, 3.0);
    out.reports.push_back(covariance_report(cov, "eq-4.4/" + label, mu.grid().cells_per_axis()));
    diag[label] = {{"covariance", to_json(cov)}};
  }

  // Poincare and log-Sobolev over several admissible measures.
  constexpr int kFunctionalM = 64;
  const Grid grid = Grid::unit_cube(2, kFunctionalM);
  struct Measure {
    std::string name;
    DensitySpec spec;
  };
  const std::vector<Measure> measures{
      {"uniform", Uniform{}},
      {"gaussian", RestrictedGaussian{{0.5, 0.5}, {{1.0, 0.0}, {0.0, 1.0}}}},
      {"convex-power", ConvexPower{0.5, {1.0, 1.0}, 2.0}},
      {"tilt", ExponentialTilt{{1.0, -1.0}}},
  };
  auto fn_rng = suite_rng(c, kStreamFunctions);
  std::vector<CosineField> fields;
  for (int k = 0; k < c.suite.test_functions; ++k) {
    fields.push_back(random_field(2, fn_rng, 3, 3));
  }
  json functional = json::object();
  for (const auto& measure : measures) {
    const auto mu = build_density(measure.spec, grid);
    const double m_hat = std::max(0.0, estimate_diag_second_derivative_bound(mu));
    std::vector<TestFunction> fns;
    std::vector<double> cosine(grid.cell_count());
    std::vector<double> x(2);
    for (std::size_t cell = 0; cell < cosine.size(); ++cell) {
      grid.cell_center(cell, x);
      cosine[cell] = std::cos(std::numbers::pi * x[0]);
    }
    fns.push_back({measure.name + "/cos-pi-x0", std::move(cosine)});
    for (std::size_t k = 0; k < fields.size(); ++k) {
      fns.push_back({measure.name + "/" + pair_name("f", static_cast<int>(k)), fields[k].values(grid, 1.0, false)});
    }
    auto checks = poincare_lsi_check(mu, m_hat, 1.0, fns, c.tolerance);
    out.reports.insert(out.reports.end(), checks.reports.begin(), checks.reports.end());
    functional[measure.name] = {{"M_hat", m_hat}, {"skipped", checks.skipped}};
  }
  {
    // One-dimensional anchor: f = cos(pi x) on the uniform interval.
    const Grid line = Grid::unit_cube(1, 1024);
    std::vector<double> cosine(1024);
    for (int k = 0; k < 1024; ++k) {
      cosine[static_cast<std::size_t>(k)] = std::cos(std::numbers::pi * line.center(0, k));
    }
    const std::vector<TestFunction> anchor{{"anchor/cos-pi-x", cosine}};
    const auto checks = poincare_lsi_check(build_density(Uniform{}, line), 0.0, 1.0, anchor, c.tolerance);
    const auto& poincare = checks.reports.front();
    out.reports.push_back(poincare);
    functional["anchor"] = {{"variance", poincare.lhs}, {"gradient_energy", poincare.rhs / poincare.constant_used}};
  }
  diag["functional_inequalities"] = functional;
  return out;
}

SuiteOutput run_counterexample(const RunConfig& c) {
  SuiteOutput out;
  const auto& ns = c.suite.counterexample_ns;
  auto table = counterexample_scaling(ns, c.samples, substream_seed(c.seed, kStreamCounterexample), c.threads);
  const double allowance = 3.0 / std::sqrt(static_cast<double>(c.samples));
  for (const auto& row : table.rows) {
    out.reports.push_back(make_report("rem-5.1/mass-of-a/n=" + std::to_string(row.n), "rem-5.1",
                                      std::abs(row.mass_of_a - 0.5), allowance, 3.0, 0, Tolerance{0.0, 0.0}));
  }
  if (ns.size() >= 2) {
    out.reports.push_back(make_report("rem-5.1/slope-lower", "rem-5.1", 0.40, table.slope, 1.0, 0, Tolerance{0.0, 0.0}));
    out.reports.push_back(make_report("rem-5.1/slope-upper", "rem-5.1", table.slope, 0.60, 1.0, 0, Tolerance{0.0, 0.0}));
  }
  out.diagnostics["counterexample"] = to_json(table);
  out.scaling = std::move(table);
  return out;
}

SuiteOutput run_suites(const RunConfig& c) {
  switch (c.command) {
    case Command::kDensityCheck:
      return run_density_check(c);
    case Command::kVerify1d:
      return run_verify_1d(c);
    case Command::kVerifyKnothe:
      return run_verify_knothe(c);
    case Command::kTire:
      return run_tire(c);
    case Command::kConcentration:
      return run_concentration(c);
    case Command::kCounterexample:
      return run_counterexample(c);
    case Command::kAll:
      break;
  }
  SuiteOutput out = run_density_check(c);
  out.append(run_verify_1d(c));
  out.append(run_verify_knothe(c));
  out.append(run_tire(c));
  out.append(run_concentration(c));
  out.append(run_counterexample(c));
  return out;
}

}  // namespace cube_transport::cli
