#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace cube_transport {

/// Largest cell count any grid may hold (m^n <= 2^24).
inline constexpr std::size_t kMaxGridCells = std::size_t{1} << 24;

/// Regular cell grid over the axis-parallel cube origin + [0, side]^dim.
///
/// Cells are stored row-major with the last axis varying fastest, so that a
/// fiber along the last coordinate is contiguous in memory.
class Grid {
 public:
  Grid(int dim, int cells_per_axis, std::vector<double> origin, double side);

  /// [0, 1]^dim split into m cells per axis.
  static Grid unit_cube(int dim, int cells_per_axis);

  int dim() const noexcept { return dim_; }
  int cells_per_axis() const noexcept { return m_; }
  std::span<const double> origin() const noexcept { return origin_; }
  double side() const noexcept { return side_; }
  double cell_width() const noexcept { return side_ / m_; }
  double cell_volume() const noexcept { return cell_volume_; }
  std::size_t cell_count() const noexcept { return cell_count_; }

  /// Number of flat-index steps between neighbours along `axis`.
  std::size_t stride(int axis) const noexcept { return strides_[static_cast<std::size_t>(axis)]; }

  double lower(int axis) const noexcept { return origin_[static_cast<std::size_t>(axis)]; }
  double upper(int axis) const noexcept { return lower(axis) + side_; }
  double center(int axis, int index) const noexcept {
    return lower(axis) + (index + 0.5) * cell_width();
  }
  double node(int axis, int index) const noexcept { return lower(axis) + index * cell_width(); }

  /// Index of the cell containing x along `axis`; points outside are clamped.
  int locate(int axis, double x) const noexcept;

  std::size_t flatten(std::span<const int> index) const;
  void unflatten(std::size_t flat, std::span<int> index) const;
  std::vector<int> unflatten(std::size_t flat) const;

  /// Cell centre of the flat cell `flat`.
  void cell_center(std::size_t flat, std::span<double> out) const;

  /// Grid over the first dim-1 coordinates.
  Grid drop_last() const;
  /// One-dimensional grid along `axis`.
  Grid axis_grid(int axis) const;

  bool same_geometry(const Grid& other) const noexcept;

 private:
  int dim_;
  int m_;
  std::vector<double> origin_;
  double side_;
  std::vector<std::size_t> strides_;
  std::size_t cell_count_;
  double cell_volume_;
};

}  // namespace cube_transport
