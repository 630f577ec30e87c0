#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace midline {

/// Dense [channel][row][col] array, row-major.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int channels, int rows, int cols, T fill = T{})
      : channels_(channels), rows_(rows), cols_(cols),
        data_(static_cast<std::size_t>(channels) * rows * cols, fill) {}

  int channels() const noexcept { return channels_; }
  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t plane_size() const noexcept { return static_cast<std::size_t>(rows_) * cols_; }

  std::size_t index(int c, int r, int col) const noexcept {
    return (static_cast<std::size_t>(c) * rows_ + r) * cols_ + col;
  }

  T& operator()(int c, int r, int col) noexcept { return data_[index(c, r, col)]; }
  const T& operator()(int c, int r, int col) const noexcept { return data_[index(c, r, col)]; }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }

  std::span<T> channel(int c) noexcept { return data().subspan(c * plane_size(), plane_size()); }
  std::span<const T> channel(int c) const noexcept {
    return data().subspan(c * plane_size(), plane_size());
  }

  template <typename U>
  bool same_shape(const Grid<U>& other) const noexcept {
    return channels_ == other.channels() && rows_ == other.rows() && cols_ == other.cols();
  }

  bool operator==(const Grid&) const = default;

 private:
  int channels_ = 0;
  int rows_ = 0;
  int cols_ = 0;
  std::vector<T> data_;
};

}  // namespace midline
