#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "postertree/error.hpp"

namespace postertree {

// Row-major 2-D raster. GrayMap holds intensities in [0,1]; BinMap holds
// membership bits stored as bytes.
template <typename T>
class Grid {
 public:
  using value_type = T;

  Grid() = default;
  Grid(int width, int height, T fill = T{})
      : width_(width), height_(height),
        values_(static_cast<std::size_t>(checked(width)) * checked(height), fill) {}
  Grid(int width, int height, std::vector<T> values)
      : width_(width), height_(height), values_(std::move(values)) {
    if (values_.size() != static_cast<std::size_t>(checked(width)) * checked(height)) {
      fail(ErrorCode::kDimensionMismatch, "grid value count does not match width*height");
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  T& at(int x, int y) { return values_[index(x, y)]; }
  const T& at(int x, int y) const { return values_[index(x, y)]; }
  T& operator[](std::size_t i) { return values_[i]; }
  const T& operator[](std::size_t i) const { return values_[i]; }

  const std::vector<T>& values() const noexcept { return values_; }
  std::vector<T>& values() noexcept { return values_; }

  bool same_shape(const Grid& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  static int checked(int v) {
    if (v < 0) fail(ErrorCode::kInvalidArgument, "negative grid dimension");
    return v;
  }
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> values_;
};

using GrayMap = Grid<double>;
using BinMap = Grid<std::uint8_t>;

inline std::size_t count_set(const BinMap& map) {
  return static_cast<std::size_t>(
      std::count_if(map.values().begin(), map.values().end(), [](std::uint8_t b) { return b != 0; }));
}

inline void require_same_shape(const BinMap& a, const BinMap& b) {
  if (!a.same_shape(b)) fail(ErrorCode::kDimensionMismatch, "maps differ in dimensions");
}

// Nearest-neighbour resample; used to bring externally supplied maps to the
// element-map resolution.
template <typename T>
Grid<T> resize_nearest(const Grid<T>& src, int width, int height) {
  if (src.width() == width && src.height() == height) return src;
  Grid<T> out(width, height);
  if (src.empty()) return out;
  for (int y = 0; y < height; ++y) {
    int sy = std::min(src.height() - 1, static_cast<int>((y + 0.5) * src.height() / height));
    for (int x = 0; x < width; ++x) {
      int sx = std::min(src.width() - 1, static_cast<int>((x + 0.5) * src.width() / width));
      out.at(x, y) = src.at(sx, sy);
    }
  }
  return out;
}

}  // namespace postertree
