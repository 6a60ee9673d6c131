#include "cube_transport/concentration.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <Eigen/Dense>

#include "cube_transport/error.hpp"

namespace cube_transport {

namespace {

std::vector<double> unit_direction(std::span<const double> u, int dim) {
  if (u.size() != static_cast<std::size_t>(dim)) {
    throw Error(ErrorCode::kDimension, "direction has the wrong dimension");
  }
  const double norm = std::sqrt(std::inner_product(u.begin(), u.end(), u.begin(), 0.0));
  if (std::abs(norm - 1.0) > 1e-9) {
    throw Error(ErrorCode::kInvalidSpec, "direction must be a unit vector");
  }
  return {u.begin(), u.end()};
}

void require_ts(std::span<const double> ts) {
  if (ts.empty()) {
    throw Error(ErrorCode::kInvalidSpec, "empty t list");
  }
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (!(ts[i] >= 0.0) || (i > 0 && !(ts[i] > ts[i - 1]))) {
      throw Error(ErrorCode::kInvalidSpec, "t values must be nonnegative and increasing");
    }
  }
}

// CDF of sum_i w_i U_i for independent uniforms U_i on [0, 1]. Weights below
// 1% of the largest are replaced by their mean to keep the alternating sum
// well conditioned.
class UniformSumCdf {
 public:
  explicit UniformSumCdf(std::span<const double> weights) {
    const double wmax = weights.empty() ? 0.0 : *std::max_element(weights.begin(), weights.end());
    std::vector<double> kept;
    for (double w : weights) {
      total_ += w;
      if (w >= 1e-2 * wmax && w > 0.0) {
        kept.push_back(w);
      } else {
        shift_ += 0.5 * w;
      }
    }
    k_ = static_cast<int>(kept.size());
    long double scale = 1.0L;
    for (int i = 0; i < k_; ++i) {
      scale *= static_cast<long double>(kept[static_cast<std::size_t>(i)]) * (i + 1);
    }
    inv_scale_ = 1.0L / scale;
    kept_total_ = std::accumulate(kept.begin(), kept.end(), 0.0);
    const std::size_t subsets = std::size_t{1} << k_;
    corners_.resize(subsets);
    signs_.resize(subsets);
    for (std::size_t s = 0; s < subsets; ++s) {
      long double sum = 0.0L;
      int bits = 0;
      for (int i = 0; i < k_; ++i) {
        if (s >> i & 1U) {
          sum += kept[static_cast<std::size_t>(i)];
          ++bits;
        }
      }
      corners_[s] = sum;
      signs_[s] = bits % 2 ? -1 : 1;
    }
  }

  double total() const noexcept { return total_; }

  double operator()(double t) const noexcept {
    if (t <= 0.0) {
      return 0.0;
    }
    if (t >= total_) {
      return 1.0;
    }
    const double r = t - shift_;
    if (k_ == 0) {
      return r >= 0.0 ? 1.0 : 0.0;
    }
    if (r <= 0.0) {
      return 0.0;
    }
    if (r >= kept_total_) {
      return 1.0;
    }
    // The law is symmetric about its mean; evaluate on the lower half.
    const bool upper = r > 0.5 * kept_total_;
    const long double x = upper ? kept_total_ - r : r;
    long double sum = 0.0L;
    for (std::size_t s = 0; s < corners_.size(); ++s) {
      const long double d = x - corners_[s];
      if (d > 0.0L) {
        long double p = 1.0L;
        for (int i = 0; i < k_; ++i) {
          p *= d;
        }
        sum += signs_[s] * p;
      }
    }
    const double lower = std::clamp(static_cast<double>(sum * inv_scale_), 0.0, 1.0);
    return upper ? 1.0 - lower : lower;
  }

 private:
  double total_ = 0.0;
  double shift_ = 0.0;
  double kept_total_ = 0.0;
  int k_ = 0;
  long double inv_scale_ = 1.0L;
  std::vector<long double> corners_;
  std::vector<int> signs_;
};

// Cell masses and the minimum of x . u over each cell.
struct HalfspaceMasses {
  std::vector<double> mass;
  std::vector<double> base;
  UniformSumCdf cdf;

  double operator()(double s) const {
    double total = 0.0;
    for (std::size_t c = 0; c < mass.size(); ++c) {
      total += mass[c] * cdf(s - base[c]);
    }
    return total;
  }
};

HalfspaceMasses halfspace_masses(const GridDensity& mu, std::span<const double> u) {
  const Grid& grid = mu.grid();
  const auto un = static_cast<std::size_t>(grid.dim());
  const double h = grid.cell_width();
  std::vector<double> weights(un);
  double offset = 0.0;
  for (std::size_t a = 0; a < un; ++a) {
    weights[a] = std::abs(u[a]) * h;
    offset += std::min(0.0, u[a]) * h;
  }
  HalfspaceMasses out{std::vector<double>(grid.cell_count()), std::vector<double>(grid.cell_count()),
                      UniformSumCdf(weights)};
  const double scale = grid.cell_volume() / mu.total_mass();
  std::vector<int> index(un);
  for (std::size_t c = 0; c < grid.cell_count(); ++c) {
    grid.unflatten(c, index);
    double b = offset;
    for (std::size_t a = 0; a < un; ++a) {
      b += u[a] * grid.node(static_cast<int>(a), index[a]);
    }
    out.mass[c] = mu.value(c) * scale;
    out.base[c] = b;
  }
  return out;
}

void fill_bound(ConcentrationProfile& p) {
  p.bound.resize(p.ts.size());
  for (std::size_t i = 0; i < p.ts.size(); ++i) {
    p.bound[i] = 1.0 - std::exp(-p.ts[i] * p.ts[i] / (p.alpha * p.alpha));
  }
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorCode::kIo, "cannot write " + path.string());
  }
  out.precision(17);
  return out;
}

Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigen_of(const std::vector<double>& cov, int n) {
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      m(i, j) = cov[static_cast<std::size_t>(i * n + j)];
    }
  }
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m);
}

CovarianceSummary summarize(std::vector<double> cov, int n, double alpha) {
  if (!(alpha > 0.0)) {
    throw Error(ErrorCode::kInvalidSpec, "alpha must be positive");
  }
  const auto solver = eigen_of(cov, n);
  CovarianceSummary out;
  out.covariance = std::move(cov);
  out.top_eigenvalue = solver.eigenvalues()(n - 1);
  const auto v = solver.eigenvectors().col(n - 1);
  out.top_eigenvector.assign(v.data(), v.data() + n);
  out.ratio = out.top_eigenvalue / (alpha * alpha);
  return out;
}

}  // namespace

double alpha_theorem1(double ell, double M) {
  if (!(ell > 0.0) || !(M >= 0.0)) {
    throw Error(ErrorCode::kInvalidSpec, "alpha needs ell > 0 and M >= 0");
  }
  return 3.0 * ell * r_from_m(M, ell);
}

double r_from_m(double M, double ell) {
  if (!(ell > 0.0) || !(M >= 0.0)) {
    throw Error(ErrorCode::kInvalidSpec, "R needs ell > 0 and M >= 0");
  }
  return std::exp(M * ell * ell / 8.0);
}

ConcentrationProfile halfspace_profile(const GridDensity& mu, std::span<const double> u, std::span<const double> ts,
                                       double alpha) {
  require_ts(ts);
  if (!(mu.total_mass() > 0.0)) {
    throw Error(ErrorCode::kDegenerateDensity, "profile of a zero-mass density");
  }
  ConcentrationProfile p;
  p.direction = unit_direction(u, mu.grid().dim());
  p.alpha = alpha;
  p.ts.assign(ts.begin(), ts.end());

  const auto masses = halfspace_masses(mu, p.direction);
  double lo = *std::min_element(masses.base.begin(), masses.base.end());
  double hi = *std::max_element(masses.base.begin(), masses.base.end()) + masses.cdf.total();
  // Smallest s with mass >= 1/2.
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    (masses(mid) >= 0.5 ? hi : lo) = mid;
  }
  p.median = hi;
  p.mass_of_a = masses(p.median);
  for (double t : p.ts) {
    p.measured.push_back(std::min(1.0, masses(p.median + t)));
  }
  p.standard_error.assign(p.ts.size(), 0.0);
  fill_bound(p);
  return p;
}

ConcentrationProfile halfspace_profile(const SampleBatch& batch, std::span<const double> u,
                                       std::span<const double> ts, double alpha) {
  require_ts(ts);
  const std::size_t count = batch.size();
  if (count == 0) {
    throw Error(ErrorCode::kDegenerateDensity, "profile of an empty sample");
  }
  ConcentrationProfile p;
  p.direction = unit_direction(u, batch.dim);
  p.alpha = alpha;
  p.ts.assign(ts.begin(), ts.end());
  p.sample_count = count;

  std::vector<double> proj(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto x = batch.point(i);
    proj[i] = std::inner_product(x.begin(), x.end(), p.direction.begin(), 0.0);
  }
  std::sort(proj.begin(), proj.end());
  p.median = proj[(count + 1) / 2 - 1];
  const auto fraction = [&](double s) {
    const auto k = std::upper_bound(proj.begin(), proj.end(), s) - proj.begin();
    return static_cast<double>(k) / static_cast<double>(count);
  };
  p.mass_of_a = fraction(p.median);
  for (double t : p.ts) {
    const double q = fraction(p.median + t);
    p.measured.push_back(q);
    p.standard_error.push_back(std::sqrt(q * (1.0 - q) / static_cast<double>(count)));
  }
  fill_bound(p);
  return p;
}

VerificationReport check_concentration(const ConcentrationProfile& profile, std::string name, std::string tag,
                                       int grid_m) {
  std::size_t worst = 0;
  double worst_slack = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < profile.ts.size(); ++i) {
    const double slack = profile.measured[i] + 3.0 * profile.standard_error[i] - profile.bound[i];
    if (slack < worst_slack) {
      worst_slack = slack;
      worst = i;
    }
  }
  const double lhs = profile.bound[worst];
  const double rhs = profile.measured[worst] + 3.0 * profile.standard_error[worst];
  return make_report(std::move(name), std::move(tag), lhs, rhs, profile.alpha, grid_m, Tolerance{0.0, 0.0});
}

TailFit lipschitz_tail(const SampleBatch& batch, const std::function<double(std::span<const double>)>& fn,
                       std::span<const double> ts, double alpha) {
  require_ts(ts);
  if (!(alpha > 0.0)) {
    throw Error(ErrorCode::kInvalidSpec, "alpha must be positive");
  }
  const std::size_t count = batch.size();
  if (count == 0) {
    throw Error(ErrorCode::kDegenerateDensity, "tail of an empty sample");
  }
  std::vector<double> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    values[i] = fn(batch.point(i));
  }
  TailFit fit;
  fit.ts.assign(ts.begin(), ts.end());
  fit.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(count);
  for (double& v : values) {
    v = std::abs(v - fit.mean);
  }
  std::sort(values.begin(), values.end());
  std::vector<double> xs;
  std::vector<double> ys;
  for (double t : fit.ts) {
    const auto below = std::lower_bound(values.begin(), values.end(), t) - values.begin();
    const double tail = static_cast<double>(values.end() - values.begin() - below) / static_cast<double>(count);
    fit.tails.push_back(tail);
    if (tail > 0.0) {
      xs.push_back(t * t / (alpha * alpha));
      ys.push_back(std::log(tail));
    }
  }
  fit.fitted_points = xs.size();
  if (xs.size() >= 2) {
    const double k = static_cast<double>(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / k;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / k;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxx += (xs[i] - mx) * (xs[i] - mx);
      sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (sxx > 0.0) {
      const double slope = sxy / sxx;
      fit.c = -slope;
      fit.C = std::exp(my - slope * mx);
    }
  }
  return fit;
}

CovarianceSummary covariance_ratio(const GridDensity& mu, double alpha) {
  const Grid& grid = mu.grid();
  const int n = grid.dim();
  const auto un = static_cast<std::size_t>(n);
  if (!(mu.total_mass() > 0.0)) {
    throw Error(ErrorCode::kDegenerateDensity, "covariance of a zero-mass density");
  }
  const double scale = grid.cell_volume() / mu.total_mass();
  std::vector<double> x(un);
  std::vector<double> mean(un, 0.0);
  for (std::size_t c = 0; c < grid.cell_count(); ++c) {
    grid.cell_center(c, x);
    for (std::size_t a = 0; a < un; ++a) {
      mean[a] += mu.value(c) * scale * x[a];
    }
  }
  std::vector<double> cov(un * un, 0.0);
  for (std::size_t c = 0; c < grid.cell_count(); ++c) {
    grid.cell_center(c, x);
    const double p = mu.value(c) * scale;
    for (std::size_t a = 0; a < un; ++a) {
      for (std::size_t b = 0; b < un; ++b) {
        cov[a * un + b] += p * (x[a] - mean[a]) * (x[b] - mean[b]);
      }
    }
  }
  const double h = grid.cell_width();
  for (std::size_t a = 0; a < un; ++a) {
    cov[a * un + a] += h * h / 12.0;
  }
  return summarize(std::move(cov), n, alpha);
}

CovarianceSummary covariance_ratio(const SampleBatch& batch, double alpha) {
  const std::size_t count = batch.size();
  if (count < 2) {
    throw Error(ErrorCode::kDegenerateDensity, "covariance needs at least two samples");
  }
  const auto un = static_cast<std::size_t>(batch.dim);
  std::vector<double> mean(un, 0.0);
  for (std::size_t i = 0; i < count; ++i) {
    const auto x = batch.point(i);
    for (std::size_t a = 0; a < un; ++a) {
      mean[a] += x[a];
    }
  }
  for (double& v : mean) {
    v /= static_cast<double>(count);
  }
  std::vector<double> cov(un * un, 0.0);
  for (std::size_t i = 0; i < count; ++i) {
    const auto x = batch.point(i);
    for (std::size_t a = 0; a < un; ++a) {
      for (std::size_t b = a; b < un; ++b) {
        cov[a * un + b] += (x[a] - mean[a]) * (x[b] - mean[b]);
      }
    }
  }
  for (std::size_t a = 0; a < un; ++a) {
    for (std::size_t b = a; b < un; ++b) {
      cov[a * un + b] /= static_cast<double>(count - 1);
      cov[b * un + a] = cov[a * un + b];
    }
  }
  return summarize(std::move(cov), batch.dim, alpha);
}

VerificationReport covariance_report(const CovarianceSummary& summary, std::string name, int grid_m) {
  return make_report(std::move(name), "eq-4.4", summary.ratio, 1.0, 1.0, grid_m, Tolerance{0.0, 0.0});
}

FunctionalInequalityChecks poincare_lsi_check(const GridDensity& mu, double M, double ell,
                                              std::span<const TestFunction> fns, Tolerance tol) {
  if (!(mu.total_mass() > 0.0)) {
    throw Error(ErrorCode::kDegenerateDensity, "functional inequalities need positive mass");
  }
  const double factor = ell * ell * std::exp(M * ell * ell / 4.0);
  constexpr double kLsi = 160.0 / 9.0;
  constexpr double kPoincare = 20.0 / 9.0;
  const Grid& grid = mu.grid();
  const std::size_t cells = grid.cell_count();
  const double scale = grid.cell_volume() / mu.total_mass();
  const int m = grid.cells_per_axis();

  FunctionalInequalityChecks out;
  for (const auto& fn : fns) {
    if (fn.values.size() != cells) {
      throw Error(ErrorCode::kDimension, "test function '" + fn.name + "' does not match the grid");
    }
    std::vector<double> grad2(cells, 0.0);
    for (int a = 0; a < grid.dim(); ++a) {
      const auto d = finite_difference(grid, fn.values, a);
      for (std::size_t c = 0; c < cells; ++c) {
        grad2[c] += d[c] * d[c];
      }
    }
    double mean = 0.0;
    double second = 0.0;
    double energy = 0.0;
    for (std::size_t c = 0; c < cells; ++c) {
      const double p = mu.value(c) * scale;
      mean += p * fn.values[c];
      second += p * fn.values[c] * fn.values[c];
      energy += p * grad2[c];
    }
    double variance = 0.0;
    for (std::size_t c = 0; c < cells; ++c) {
      const double d = fn.values[c] - mean;
      variance += mu.value(c) * scale * d * d;
    }
    out.reports.push_back(make_report("cor-4.5-poincare/" + fn.name, "cor-4.5-poincare", variance,
                                      kPoincare * factor * energy, kPoincare * factor, m, tol));

    if (!(second > 0.0)) {
      out.skipped.push_back(fn.name);
      continue;
    }
    double entropy = 0.0;
    for (std::size_t c = 0; c < cells; ++c) {
      const double g2 = fn.values[c] * fn.values[c] / second;
      if (g2 > 0.0) {
        entropy += mu.value(c) * scale * g2 * std::log(g2);
      }
    }
    out.reports.push_back(make_report("cor-4.5-lsi/" + fn.name, "cor-4.5-lsi", entropy,
                                      kLsi * factor * energy / second, kLsi * factor, m, tol));
  }
  return out;
}

double distance_to_negative_halfcube(std::span<const double> y) {
  const double sum = std::accumulate(y.begin(), y.end(), 0.0);
  if (sum <= 0.0) {
    return 0.0;
  }
  const double n = static_cast<double>(y.size());
  // Projection x_i = clamp(y_i - lambda, -1/2, 1/2) with sum x = 0.
  const double lambda0 = sum / n;
  if (std::all_of(y.begin(), y.end(), [&](double v) { return v - lambda0 >= -0.5; })) {
    return sum / std::sqrt(n);
  }
  const auto total_at = [&](double lambda) {
    double s = 0.0;
    for (double v : y) {
      s += std::clamp(v - lambda, -0.5, 0.5);
    }
    return s;
  };
  double lo = 0.0;
  double hi = *std::max_element(y.begin(), y.end()) + 0.5;
  for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
    const double mid = 0.5 * (lo + hi);
    (total_at(mid) > 0.0 ? lo : hi) = mid;
  }
  double d2 = 0.0;
  for (double v : y) {
    const double d = v - std::clamp(v - hi, -0.5, 0.5);
    d2 += d * d;
  }
  return std::sqrt(d2);
}

ScalingTable counterexample_scaling(std::span<const int> ns, std::size_t count, std::uint64_t seed, int threads) {
  if (ns.empty()) {
    throw Error(ErrorCode::kInvalidSpec, "empty list of dimensions");
  }
  if (std::any_of(ns.begin(), ns.end(), [](int n) { return n < 64; })) {
    throw Error(ErrorCode::kPrecondition, "the scaling experiment needs n >= 64");
  }
  if (count < 1000) {
    throw Error(ErrorCode::kPrecondition, "the 2/3-quantile needs N >= 1000 samples");
  }
  ScalingTable table;
  table.sample_count = count;
  table.seed = seed;
  for (int n : ns) {
    auto stats = remark_statistics(
        n, count, seed, 1, [](std::span<const double> y, std::span<double> out) { out[0] = distance_to_negative_halfcube(y); },
        threads);
    auto& dist = stats.values;
    ScalingRow row;
    row.n = n;
    row.acceptance_rate = stats.acceptance_rate;
    row.mass_of_a = static_cast<double>(std::count(dist.begin(), dist.end(), 0.0)) / static_cast<double>(count);
    // Largest t with #{d <= t} <= 2N/3 is the order statistic just above.
    const std::size_t k = 2 * count / 3;
    std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    row.t_star = dist[k];
    const double s = remark_default_scale(n);
    row.m_hat = static_cast<double>(n) / (n + 1.0) / (s * s);
    table.rows.push_back(row);
  }
  const auto smallest = std::min_element(table.rows.begin(), table.rows.end(),
                                         [](const ScalingRow& a, const ScalingRow& b) { return a.n < b.n; });
  const auto shape = [](int n) { return std::sqrt(n / std::log(static_cast<double>(n))); };
  table.kappa = smallest->t_star / shape(smallest->n);
  for (auto& row : table.rows) {
    row.predicted = table.kappa * shape(row.n);
  }
  if (table.rows.size() >= 2) {
    double mx = 0.0;
    double my = 0.0;
    for (const auto& row : table.rows) {
      mx += std::log(static_cast<double>(row.n));
      my += std::log(row.t_star);
    }
    const double k = static_cast<double>(table.rows.size());
    mx /= k;
    my /= k;
    double sxx = 0.0;
    double sxy = 0.0;
    for (const auto& row : table.rows) {
      const double dx = std::log(static_cast<double>(row.n)) - mx;
      sxx += dx * dx;
      sxy += dx * (std::log(row.t_star) - my);
    }
    table.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  }
  return table;
}

nlohmann::json to_json(const ConcentrationProfile& p) {
  return {{"direction", p.direction},
          {"median", p.median},
          {"mass_of_a", p.mass_of_a},
          {"alpha", p.alpha},
          {"sample_count", p.sample_count},
          {"t", p.ts},
          {"measured", p.measured},
          {"se", p.standard_error},
          {"bound", p.bound}};
}

nlohmann::json to_json(const TailFit& fit) {
  return {{"t", fit.ts}, {"tail", fit.tails}, {"mean", fit.mean},
          {"c", fit.c},  {"C", fit.C},        {"fitted_points", fit.fitted_points}};
}

nlohmann::json to_json(const CovarianceSummary& s) {
  return {{"covariance", s.covariance},
          {"top_eigenvalue", s.top_eigenvalue},
          {"top_eigenvector", s.top_eigenvector},
          {"ratio", s.ratio}};
}

nlohmann::json to_json(const ScalingTable& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : table.rows) {
    rows.push_back({{"n", r.n},
                    {"t_star", r.t_star},
                    {"predicted", r.predicted},
                    {"mass_of_a", r.mass_of_a},
                    {"acceptance_rate", r.acceptance_rate},
                    {"m_hat", r.m_hat}});
  }
  return {{"rows", rows},
          {"N", table.sample_count},
          {"seed", table.seed},
          {"kappa", table.kappa},
          {"slope", table.slope}};
}

void write_profile_csv(const ConcentrationProfile& p, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "t,measured,se,bound\n";
  for (std::size_t i = 0; i < p.ts.size(); ++i) {
    out << p.ts[i] << ',' << p.measured[i] << ',' << p.standard_error[i] << ',' << p.bound[i] << '\n';
  }
}

void write_scaling_csv(const ScalingTable& table, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "n,t_star,predicted,mass_of_a,acceptance_rate,m_hat\n";
  for (const auto& r : table.rows) {
    out << r.n << ',' << r.t_star << ',' << r.predicted << ',' << r.mass_of_a << ',' << r.acceptance_rate << ','
        << r.m_hat << '\n';
  }
}

}  // namespace cube_transport
