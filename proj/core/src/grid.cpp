#include "cube_transport/grid.hpp"

#include <cmath>
#include <string>

#include "cube_transport/error.hpp"

namespace cube_transport {

Grid::Grid(int dim, int cells_per_axis, std::vector<double> origin, double side)
    : dim_(dim), m_(cells_per_axis), origin_(std::move(origin)), side_(side) {
  if (dim_ < 1) {
    throw Error(ErrorCode::kDimension, "grid dimension must be positive");
  }
  if (m_ < 1) {
    throw Error(ErrorCode::kInvalidSpec, "cells per axis must be positive");
  }
  if (!(side_ > 0.0) || !std::isfinite(side_)) {
    throw Error(ErrorCode::kInvalidSpec, "cube side must be positive and finite");
  }
  if (origin_.size() != static_cast<std::size_t>(dim_)) {
    throw Error(ErrorCode::kDimension, "origin has " + std::to_string(origin_.size()) +
                                           " entries, expected " + std::to_string(dim_));
  }
  std::size_t count = 1;
  for (int i = 0; i < dim_; ++i) {
    if (count > kMaxGridCells / static_cast<std::size_t>(m_)) {
      throw Error(ErrorCode::kSizeLimit, "grid exceeds 2^24 cells");
    }
    count *= static_cast<std::size_t>(m_);
  }
  cell_count_ = count;
  strides_.assign(static_cast<std::size_t>(dim_), 1);
  for (int a = dim_ - 2; a >= 0; --a) {
    strides_[static_cast<std::size_t>(a)] =
        strides_[static_cast<std::size_t>(a) + 1] * static_cast<std::size_t>(m_);
  }
  cell_volume_ = std::pow(cell_width(), dim_);
}

Grid Grid::unit_cube(int dim, int cells_per_axis) {
  return Grid(dim, cells_per_axis, std::vector<double>(static_cast<std::size_t>(dim > 0 ? dim : 0), 0.0),
              1.0);
}

int Grid::locate(int axis, double x) const noexcept {
  const double s = (x - lower(axis)) / cell_width();
  if (!(s > 0.0)) {
    return 0;
  }
  if (s >= m_) {
    return m_ - 1;
  }
  return static_cast<int>(s);
}

std::size_t Grid::flatten(std::span<const int> index) const {
  if (index.size() != static_cast<std::size_t>(dim_)) {
    throw Error(ErrorCode::kDimension, "multi-index has wrong length");
  }
  std::size_t flat = 0;
  for (int a = 0; a < dim_; ++a) {
    const int i = index[static_cast<std::size_t>(a)];
    if (i < 0 || i >= m_) {
      throw Error(ErrorCode::kOutOfRange, "cell index " + std::to_string(i) + " outside [0, " +
                                              std::to_string(m_) + ")");
    }
    flat += static_cast<std::size_t>(i) * strides_[static_cast<std::size_t>(a)];
  }
  return flat;
}

void Grid::unflatten(std::size_t flat, std::span<int> index) const {
  for (int a = dim_ - 1; a >= 0; --a) {
    index[static_cast<std::size_t>(a)] = static_cast<int>(flat % static_cast<std::size_t>(m_));
    flat /= static_cast<std::size_t>(m_);
  }
}

std::vector<int> Grid::unflatten(std::size_t flat) const {
  std::vector<int> index(static_cast<std::size_t>(dim_));
  unflatten(flat, index);
  return index;
}

void Grid::cell_center(std::size_t flat, std::span<double> out) const {
  for (int a = dim_ - 1; a >= 0; --a) {
    const int i = static_cast<int>(flat % static_cast<std::size_t>(m_));
    flat /= static_cast<std::size_t>(m_);
    out[static_cast<std::size_t>(a)] = center(a, i);
  }
}

Grid Grid::drop_last() const {
  if (dim_ < 2) {
    throw Error(ErrorCode::kDimension, "cannot drop the last axis of a 1D grid");
  }
  return Grid(dim_ - 1, m_, std::vector<double>(origin_.begin(), origin_.end() - 1), side_);
}

Grid Grid::axis_grid(int axis) const {
  if (axis < 0 || axis >= dim_) {
    throw Error(ErrorCode::kOutOfRange, "axis out of range");
  }
  return Grid(1, m_, {origin_[static_cast<std::size_t>(axis)]}, side_);
}

bool Grid::same_geometry(const Grid& other) const noexcept {
  if (dim_ != other.dim_ || m_ != other.m_ || side_ != other.side_) {
    return false;
  }
  return origin_ == other.origin_;
}

}  // namespace cube_transport
