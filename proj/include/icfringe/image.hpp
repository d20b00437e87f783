#pragma once

#include <cstddef>
#include <vector>

namespace icfringe {

/// Row-major 2-D array; element (x, y) lives at index y * width + x.
template <typename T>
struct Image {
  int width = 0;
  int height = 0;
  std::vector<T> data;

  Image() = default;
  Image(int w, int h, T fill = T{})
      : width(w), height(h), data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

  std::size_t size() const noexcept { return data.size(); }
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x);
  }
  T& operator()(int x, int y) noexcept { return data[index(x, y)]; }
  const T& operator()(int x, int y) const noexcept { return data[index(x, y)]; }
  bool contains(int x, int y) const noexcept { return x >= 0 && y >= 0 && x < width && y < height; }

  bool operator==(const Image&) const = default;
};

}  // namespace icfringe
