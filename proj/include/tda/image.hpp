#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tda/error.hpp"

namespace tda {

struct Dims {
  int width = 0;
  int height = 0;

  friend bool operator==(const Dims&, const Dims&) = default;
  std::size_t area() const { return static_cast<std::size_t>(width) * height; }
};

using Rgb = std::array<std::uint8_t, 3>;

// 8-bit RGB, row-major, interleaved.
class RasterImage {
 public:
  static constexpr int kChannels = 3;
  static constexpr int kMinSide = 8;

  RasterImage() = default;

  RasterImage(int width, int height, Rgb fill = {0, 0, 0})
      : dims_{width, height} {
    check_dims();
    data_.resize(dims_.area() * kChannels);
    for (std::size_t i = 0; i < dims_.area(); ++i)
      std::copy(fill.begin(), fill.end(), data_.begin() + i * kChannels);
  }

  RasterImage(int width, int height, std::vector<std::uint8_t> data)
      : dims_{width, height}, data_(std::move(data)) {
    check_dims();
    if (data_.size() != dims_.area() * kChannels)
      throw ValidationError("RasterImage: expected " +
                            std::to_string(dims_.area() * kChannels) +
                            " values, got " + std::to_string(data_.size()));
  }

  int width() const { return dims_.width; }
  int height() const { return dims_.height; }
  Dims dims() const { return dims_; }
  bool empty() const { return data_.empty(); }

  std::uint8_t* px(int x, int y) {
    return data_.data() + (static_cast<std::size_t>(y) * dims_.width + x) * kChannels;
  }
  const std::uint8_t* px(int x, int y) const {
    return data_.data() + (static_cast<std::size_t>(y) * dims_.width + x) * kChannels;
  }

  Rgb at(int x, int y) const {
    const auto* p = px(x, y);
    return {p[0], p[1], p[2]};
  }
  void set(int x, int y, Rgb c) {
    auto* p = px(x, y);
    p[0] = c[0];
    p[1] = c[1];
    p[2] = c[2];
  }

  std::span<const std::uint8_t> data() const { return data_; }
  std::span<std::uint8_t> data() { return data_; }

  friend bool operator==(const RasterImage&, const RasterImage&) = default;

 private:
  void check_dims() const {
    if (dims_.width < kMinSide || dims_.height < kMinSide)
      throw ValidationError("RasterImage: dimensions " +
                            std::to_string(dims_.width) + "x" +
                            std::to_string(dims_.height) + " below minimum " +
                            std::to_string(kMinSide));
  }

  Dims dims_{};
  std::vector<std::uint8_t> data_;
};

// Values in {0,1}, row-major.
class BinaryMask {
 public:
  BinaryMask() = default;

  BinaryMask(int width, int height, std::uint8_t fill = 0) : dims_{width, height} {
    check_dims();
    bits_.assign(dims_.area(), fill ? 1 : 0);
  }

  BinaryMask(int width, int height, std::vector<std::uint8_t> values)
      : dims_{width, height}, bits_(std::move(values)) {
    check_dims();
    if (bits_.size() != dims_.area())
      throw ValidationError("BinaryMask: expected " + std::to_string(dims_.area()) +
                            " values, got " + std::to_string(bits_.size()));
    for (auto& b : bits_) b = b ? 1 : 0;
  }

  int width() const { return dims_.width; }
  int height() const { return dims_.height; }
  Dims dims() const { return dims_; }

  std::uint8_t at(int x, int y) const {
    return bits_[static_cast<std::size_t>(y) * dims_.width + x];
  }
  void set(int x, int y, bool v) {
    bits_[static_cast<std::size_t>(y) * dims_.width + x] = v ? 1 : 0;
  }

  std::size_t popcount() const {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1));
  }

  std::span<const std::uint8_t> data() const { return bits_; }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  void check_dims() const {
    if (dims_.width <= 0 || dims_.height <= 0)
      throw ValidationError("BinaryMask: dimensions must be positive");
  }

  Dims dims_{};
  std::vector<std::uint8_t> bits_;
};

// Number of pixels whose RGB value differs between two same-sized images.
inline std::size_t count_changed_pixels(const RasterImage& a, const RasterImage& b) {
  if (a.dims() != b.dims())
    throw ValidationError("count_changed_pixels: dimension mismatch");
  std::size_t n = 0;
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x)
      if (a.at(x, y) != b.at(x, y)) ++n;
  return n;
}

}  // namespace tda
