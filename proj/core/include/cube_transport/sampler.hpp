#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cube_transport/density.hpp"

namespace cube_transport {

/// N points in R^dim, row-major.
struct SampleBatch {
  int dim = 0;
  std::vector<double> points;
  std::uint64_t seed = 0;
  std::string fingerprint;

  std::size_t size() const noexcept { return dim > 0 ? points.size() / static_cast<std::size_t>(dim) : 0; }
  std::span<const double> point(std::size_t i) const noexcept {
    return std::span<const double>(points).subspan(i * static_cast<std::size_t>(dim),
                                                   static_cast<std::size_t>(dim));
  }
};

/// Points are generated in fixed-size batches; batch b uses its own
/// mt19937_64 stream seeded by substream_seed(seed, b).
inline constexpr std::size_t kSampleBatchSize = std::size_t{1} << 14;

std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream);

/// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Sequential conditional inverse-CDF sampler for a piecewise-constant
/// density: first coordinate from its marginal, each next one from the
/// conditional given the cells already chosen, uniform inside the cell.
class GridSampler {
 public:
  explicit GridSampler(const GridDensity& d);

  const Grid& grid() const noexcept { return grid_; }
  void draw(std::mt19937_64& rng, std::span<double> out) const;
  SampleBatch sample(std::size_t count, std::uint64_t seed, int threads = 1) const;

 private:
  Grid grid_;
  std::string fingerprint_;
  // tables_[k][p * m + j]: cumulative weight of cells j' <= j on axis k
  // given the prefix cell p of the first k axes.
  std::vector<std::vector<double>> tables_;
};

SampleBatch sample_grid(const GridDensity& d, std::size_t count, std::uint64_t seed, int threads = 1);

struct RemarkSample {
  SampleBatch batch;
  double acceptance_rate = 1.0;
};

/// Draws Y = (X_1 + X_0, ..., X_n + X_0) / (100 sqrt(log n)) for i.i.d.
/// standard normals and keeps the draws inside [-1/2, 1/2]^n.
RemarkSample sample_remark_counterexample(int n, std::size_t count, std::uint64_t seed, int threads = 1);

/// Same construction without storing points: `stats` maps each accepted
/// point to `stat_count` numbers, returned row-major in sample order.
struct RemarkStatistics {
  std::vector<double> values;
  double acceptance_rate = 1.0;
};
RemarkStatistics remark_statistics(int n, std::size_t count, std::uint64_t seed, std::size_t stat_count,
                                   const std::function<void(std::span<const double>, std::span<double>)>& stats,
                                   int threads = 1);

/// Kolmogorov distance between the empirical law of `values` and the
/// piecewise-linear CDF of the 1D density `marginal`. Sorts `values`.
double kolmogorov_distance(std::vector<double>& values, const GridDensity& marginal);

/// Max over axes of the Kolmogorov distance of each empirical marginal.
double empirical_marginal_distance(const SampleBatch& batch, const GridDensity& d);

/// Writes one point per row to `path` and a JSON sidecar `<path>.json`.
void write_batch_csv(const SampleBatch& batch, const std::filesystem::path& path);

}  // namespace cube_transport
