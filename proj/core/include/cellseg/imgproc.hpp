#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cellseg/volume.hpp"

namespace cellseg {

/// Normalized truncated Gaussian taps, radius ceil(3 sigma). sigma <= 0 yields {1}.
std::vector<double> gaussian_kernel(double sigma);

/// Separable Gaussian blur with clamp-to-edge borders; an axis with sigma <= 0
/// is left untouched.
Grid<float> gaussian_blur(const Grid<float>& in, double sigma_x, double sigma_y, double sigma_z);

/// Otsu threshold over a 256-bin histogram of [0,1] values. Foreground is
/// `v >= threshold`. Returns nullopt when the values do not split into two
/// classes (e.g. a constant image).
std::optional<float> otsu_threshold(std::span<const float> values);

/// 2D image, a-fastest.
struct Image2D {
  int width = 0;   // extent along the view's first in-plane axis
  int height = 0;  // extent along the view's second in-plane axis
  std::vector<float> pixels;

  float at(int a, int b) const noexcept {
    return pixels[static_cast<std::size_t>(a) + static_cast<std::size_t>(width) * b];
  }
  float& at(int a, int b) noexcept {
    return pixels[static_cast<std::size_t>(a) + static_cast<std::size_t>(width) * b];
  }
};

struct ComponentLabels {
  std::vector<std::uint32_t> labels;  // 0 = background, components 1..count in raster order
  std::uint32_t count = 0;
};

/// 8-connected components of a width x height binary mask.
ComponentLabels label_components_2d(std::span<const std::uint8_t> mask, int width, int height);

/// 26-connected components of a binary volume.
ComponentLabels label_components_3d(const Grid<std::uint8_t>& mask);

}  // namespace cellseg
