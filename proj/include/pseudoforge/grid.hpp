#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pseudoforge/error.hpp"

namespace pseudoforge {

/// Row-major dense 2-D array. Dimensions are fixed at construction and are
/// always at least 1x1.
template <typename T>
class Grid {
 public:
  Grid() : Grid(1, 1) {}

  Grid(int height, int width, T fill = T{})
      : height_(height), width_(width) {
    check_dims(height, width);
    data_.assign(static_cast<std::size_t>(height) * static_cast<std::size_t>(width), fill);
  }

  Grid(int height, int width, std::vector<T> values)
      : height_(height), width_(width), data_(std::move(values)) {
    check_dims(height, width);
    if (data_.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width)) {
      throw Error(ErrorCode::DimensionMismatch, "grid value count does not match height*width");
    }
  }

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t size() const noexcept { return data_.size(); }

  T operator()(int row, int col) const { return data_[index(row, col)]; }
  T& operator()(int row, int col) { return data_[index(row, col)]; }

  std::span<const T> values() const noexcept { return data_; }
  std::span<T> values() noexcept { return data_; }
  std::span<const T> row(int r) const noexcept {
    return std::span<const T>(data_).subspan(index(r, 0), static_cast<std::size_t>(width_));
  }
  std::span<T> row(int r) noexcept {
    return std::span<T>(data_).subspan(index(r, 0), static_cast<std::size_t>(width_));
  }

  bool same_shape(const auto& other) const noexcept {
    return height_ == other.height() && width_ == other.width();
  }

  bool operator==(const Grid&) const = default;

 private:
  static void check_dims(int height, int width) {
    if (height < 1 || width < 1) {
      throw Error(ErrorCode::InvalidArgument, "grid dimensions must be at least 1x1");
    }
  }
  std::size_t index(int row, int col) const noexcept {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(col);
  }

  int height_ = 1;
  int width_ = 1;
  std::vector<T> data_;
};

using RealGrid = Grid<double>;

/// Binary instance mask. Bits are stored as 0/1 bytes.
class BitMask {
 public:
  BitMask() = default;
  BitMask(int height, int width, bool fill = false)
      : bits_(height, width, static_cast<std::uint8_t>(fill ? 1 : 0)) {}
  BitMask(int height, int width, std::vector<std::uint8_t> bits);

  int height() const noexcept { return bits_.height(); }
  int width() const noexcept { return bits_.width(); }
  std::size_t size() const noexcept { return bits_.size(); }

  bool operator()(int row, int col) const { return bits_(row, col) != 0; }
  void set(int row, int col, bool value = true) {
    bits_(row, col) = static_cast<std::uint8_t>(value ? 1 : 0);
  }

  std::span<const std::uint8_t> bits() const noexcept { return bits_.values(); }
  std::span<std::uint8_t> bits() noexcept { return bits_.values(); }

  std::size_t count() const noexcept;
  bool empty() const noexcept { return count() == 0; }

  bool operator==(const BitMask&) const = default;

 private:
  Grid<std::uint8_t> bits_;
};

/// Per-pixel foreground probabilities; every value lies in [0,1].
class ProbMask {
 public:
  ProbMask() = default;
  ProbMask(int height, int width, double fill);
  ProbMask(int height, int width, std::vector<double> values);
  explicit ProbMask(RealGrid grid);

  int height() const noexcept { return grid_.height(); }
  int width() const noexcept { return grid_.width(); }
  std::size_t size() const noexcept { return grid_.size(); }

  double operator()(int row, int col) const { return grid_(row, col); }
  std::span<const double> values() const noexcept { return grid_.values(); }
  const RealGrid& grid() const noexcept { return grid_; }

  bool operator==(const ProbMask&) const = default;

 private:
  void validate() const;
  RealGrid grid_{1, 1, 0.0};
};

/// Axis-aligned box in continuous pixel coordinates (x, y = top-left corner).
struct Box {
  double x = 0;
  double y = 0;
  double w = 0;
  double h = 0;

  bool operator==(const Box&) const = default;
};

/// Half-open integer pixel range [row0,row1) x [col0,col1).
struct PixelRegion {
  int row0 = 0;
  int row1 = 0;
  int col0 = 0;
  int col1 = 0;

  int rows() const noexcept { return row1 - row0; }
  int cols() const noexcept { return col1 - col0; }
  bool empty() const noexcept { return rows() <= 0 || cols() <= 0; }
  long long area() const noexcept {
    return empty() ? 0 : static_cast<long long>(rows()) * cols();
  }
};

/// Pixels whose centers fall inside `box`, clipped to an image of the given
/// size. Integer boxes map to exactly [x, x+w) x [y, y+h).
PixelRegion box_pixel_region(const Box& box, int image_height, int image_width);

/// Tight bounding box of the foreground pixels; zero-area box when empty.
Box tight_box(const BitMask& mask);

}  // namespace pseudoforge
