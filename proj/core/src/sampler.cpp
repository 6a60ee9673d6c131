#include "cube_transport/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "cube_transport/error.hpp"
#include "cube_transport/parallel.hpp"

namespace cube_transport {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::size_t batch_count(std::size_t count) { return (count + kSampleBatchSize - 1) / kSampleBatchSize; }

}  // namespace

std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
}

GridSampler::GridSampler(const GridDensity& d) : grid_(d.grid()), fingerprint_(fingerprint(d)) {
  if (!(d.total_mass() > 0.0)) {
    throw Error(ErrorCode::kDegenerateDensity, "cannot sample a zero-mass density");
  }
  const int n = grid_.dim();
  const std::size_t m = static_cast<std::size_t>(grid_.cells_per_axis());
  tables_.resize(static_cast<std::size_t>(n));

  // Marginal over the first k + 1 axes, from the full density downwards.
  std::vector<double> marginal(d.values().begin(), d.values().end());
  for (int k = n - 1; k >= 0; --k) {
    auto& table = tables_[static_cast<std::size_t>(k)];
    table = marginal;
    for (std::size_t row = 0; row < table.size(); row += m) {
      for (std::size_t j = 1; j < m; ++j) {
        table[row + j] += table[row + j - 1];
      }
    }
    if (k > 0) {
      std::vector<double> next(marginal.size() / m, 0.0);
      for (std::size_t p = 0; p < next.size(); ++p) {
        next[p] = table[p * m + m - 1];
      }
      marginal = std::move(next);
    }
  }
}

void GridSampler::draw(std::mt19937_64& rng, std::span<double> out) const {
  const std::size_t m = static_cast<std::size_t>(grid_.cells_per_axis());
  const double h = grid_.cell_width();
  std::size_t prefix = 0;
  for (int k = 0; k < grid_.dim(); ++k) {
    const auto& table = tables_[static_cast<std::size_t>(k)];
    const auto row = table.begin() + static_cast<std::ptrdiff_t>(prefix * m);
    const double total = row[static_cast<std::ptrdiff_t>(m - 1)];
    const double u = uniform01(rng) * total;
    auto it = std::upper_bound(row, row + static_cast<std::ptrdiff_t>(m), u);
    const auto j = std::min(static_cast<std::size_t>(std::distance(row, it)), m - 1);
    out[static_cast<std::size_t>(k)] = grid_.node(k, static_cast<int>(j)) + uniform01(rng) * h;
    prefix = prefix * m + j;
  }
}

SampleBatch GridSampler::sample(std::size_t count, std::uint64_t seed, int threads) const {
  SampleBatch batch;
  batch.dim = grid_.dim();
  batch.seed = seed;
  batch.fingerprint = fingerprint_;
  const std::size_t n = static_cast<std::size_t>(grid_.dim());
  batch.points.resize(count * n);
  parallel_for(batch_count(count), threads, [&](std::size_t b) {
    std::mt19937_64 rng(substream_seed(seed, b));
    const std::size_t begin = b * kSampleBatchSize;
    const std::size_t end = std::min(count, begin + kSampleBatchSize);
    for (std::size_t i = begin; i < end; ++i) {
      draw(rng, std::span<double>(batch.points).subspan(i * n, n));
    }
  });
  return batch;
}

SampleBatch sample_grid(const GridDensity& d, std::size_t count, std::uint64_t seed, int threads) {
  return GridSampler(d).sample(count, seed, threads);
}

RemarkStatistics remark_statistics(int n, std::size_t count, std::uint64_t seed, std::size_t stat_count,
                                   const std::function<void(std::span<const double>, std::span<double>)>& stats,
                                   int threads) {
  if (n < 2) {
    throw Error(ErrorCode::kDimension, "the correlated construction needs n >= 2");
  }
  const double scale = remark_default_scale(n);
  const auto un = static_cast<std::size_t>(n);
  const std::size_t batches = batch_count(count);
  std::vector<std::size_t> drawn(batches, 0);
  RemarkStatistics result;
  result.values.resize(count * stat_count);

  parallel_for(batches, threads, [&](std::size_t b) {
    std::mt19937_64 rng(substream_seed(seed, b));
    std::normal_distribution<double> normal;
    std::vector<double> y(un);
    const std::size_t begin = b * kSampleBatchSize;
    const std::size_t end = std::min(count, begin + kSampleBatchSize);
    std::size_t attempts = 0;
    for (std::size_t i = begin; i < end;) {
      ++attempts;
      const double shared = normal(rng);
      bool inside = true;
      for (std::size_t k = 0; k < un; ++k) {
        y[k] = (normal(rng) + shared) * scale;
        inside = inside && std::abs(y[k]) <= 0.5;
      }
      if (!inside) {
        if (attempts >= 1000 && static_cast<double>(i - begin) < 0.01 * static_cast<double>(attempts)) {
          throw Error(ErrorCode::kPrecondition,
                      "acceptance rate below 1% for n = " + std::to_string(n) + " after " +
                          std::to_string(attempts) + " draws");
        }
        continue;
      }
      stats(y, std::span<double>(result.values).subspan(i * stat_count, stat_count));
      ++i;
    }
    drawn[b] = attempts;
  });

  std::size_t total = 0;
  for (std::size_t a : drawn) {
    total += a;
  }
  result.acceptance_rate = total > 0 ? static_cast<double>(count) / static_cast<double>(total) : 1.0;
  return result;
}

RemarkSample sample_remark_counterexample(int n, std::size_t count, std::uint64_t seed, int threads) {
  RemarkSample out;
  const auto un = static_cast<std::size_t>(n);
  auto stats = remark_statistics(
      n, count, seed, un, [](std::span<const double> y, std::span<double> dst) { std::copy(y.begin(), y.end(), dst.begin()); },
      threads);
  out.batch.dim = n;
  out.batch.seed = seed;
  out.batch.fingerprint = "correlated_gaussian_remark:n=" + std::to_string(n);
  out.batch.points = std::move(stats.values);
  out.acceptance_rate = stats.acceptance_rate;
  return out;
}

double kolmogorov_distance(std::vector<double>& values, const GridDensity& marginal) {
  if (values.empty()) {
    return 0.0;
  }
  const auto cdf = node_cdf(marginal);
  const Grid& grid = marginal.grid();
  const double h = grid.cell_width();
  std::sort(values.begin(), values.end());
  const double count = static_cast<double>(values.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double x = values[i];
    double F;
    if (x <= grid.lower(0)) {
      F = 0.0;
    } else if (x >= grid.upper(0)) {
      F = 1.0;
    } else {
      const int k = grid.locate(0, x);
      const auto ku = static_cast<std::size_t>(k);
      F = cdf[ku] + (x - grid.node(0, k)) / h * (cdf[ku + 1] - cdf[ku]);
    }
    worst = std::max({worst, static_cast<double>(i + 1) / count - F, F - static_cast<double>(i) / count});
  }
  return worst;
}

double empirical_marginal_distance(const SampleBatch& batch, const GridDensity& d) {
  if (batch.dim != d.grid().dim()) {
    throw Error(ErrorCode::kDimension, "sample and density dimensions differ");
  }
  double worst = 0.0;
  std::vector<double> coords(batch.size());
  for (int axis = 0; axis < batch.dim; ++axis) {
    for (std::size_t i = 0; i < batch.size(); ++i) {
      coords[i] = batch.point(i)[static_cast<std::size_t>(axis)];
    }
    worst = std::max(worst, kolmogorov_distance(coords, axis_marginal(d, axis)));
  }
  return worst;
}

void write_batch_csv(const SampleBatch& batch, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorCode::kIo, "cannot write " + path.string());
  }
  out.precision(17);
  for (int a = 0; a < batch.dim; ++a) {
    out << (a ? ",x" : "x") << a;
  }
  out << '\n';
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto p = batch.point(i);
    for (std::size_t a = 0; a < p.size(); ++a) {
      out << (a ? "," : "") << p[a];
    }
    out << '\n';
  }
  std::filesystem::path sidecar = path;
  sidecar += ".json";
  std::ofstream meta(sidecar);
  if (!meta) {
    throw Error(ErrorCode::kIo, "cannot write " + sidecar.string());
  }
  const nlohmann::json j = {{"seed", batch.seed},
                            {"fingerprint", batch.fingerprint},
                            {"N", batch.size()},
                            {"dim", batch.dim}};
  meta << j.dump(2) << '\n';
}

}  // namespace cube_transport
