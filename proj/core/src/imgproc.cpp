#include "cellseg/imgproc.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace cellseg {

std::vector<double> gaussian_kernel(double sigma) {
  if (sigma <= 0.0) return {1.0};
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double w = std::exp(-0.5 * (i * i) / (sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = w;
    sum += w;
  }
  for (auto& w : k) w /= sum;
  return k;
}

namespace {

// Convolves every line along `axis` in place.
void blur_axis(Grid<float>& g, Axis axis, double sigma) {
  if (sigma <= 0.0) return;
  const auto k = gaussian_kernel(sigma);
  const int r = static_cast<int>(k.size() / 2);
  const Dims d = g.dims();
  const int n = d.extent(axis);
  const std::size_t stride = axis == Axis::X ? 1
                             : axis == Axis::Y ? static_cast<std::size_t>(d.nx)
                                               : static_cast<std::size_t>(d.nx) * d.ny;
  const int o1 = axis == Axis::X ? d.ny : d.nx;
  const int o2 = axis == Axis::Z ? d.ny : d.nz;
  std::vector<double> line(static_cast<std::size_t>(n));
  for (int j = 0; j < o2; ++j) {
    for (int i = 0; i < o1; ++i) {
      std::size_t base = 0;
      switch (axis) {
        case Axis::X: base = g.index(0, i, j); break;
        case Axis::Y: base = g.index(i, 0, j); break;
        case Axis::Z: base = g.index(i, j, 0); break;
      }
      for (int t = 0; t < n; ++t) line[static_cast<std::size_t>(t)] = g[base + stride * t];
      for (int t = 0; t < n; ++t) {
        double acc = 0.0;
        for (int q = -r; q <= r; ++q) {
          const int s = std::clamp(t + q, 0, n - 1);
          acc += k[static_cast<std::size_t>(q + r)] * line[static_cast<std::size_t>(s)];
        }
        g[base + stride * t] = static_cast<float>(acc);
      }
    }
  }
}

}  // namespace

Grid<float> gaussian_blur(const Grid<float>& in, double sigma_x, double sigma_y, double sigma_z) {
  Grid<float> out = in;
  blur_axis(out, Axis::X, sigma_x);
  blur_axis(out, Axis::Y, sigma_y);
  blur_axis(out, Axis::Z, sigma_z);
  return out;
}

std::optional<float> otsu_threshold(std::span<const float> values) {
  constexpr int kBins = 256;
  std::array<double, kBins> hist{};
  for (const float v : values) {
    const int bin = std::clamp(static_cast<int>(v * kBins), 0, kBins - 1);
    hist[static_cast<std::size_t>(bin)] += 1.0;
  }
  const double total = static_cast<double>(values.size());
  if (total == 0.0) return std::nullopt;
  double sum_all = 0.0;
  for (int i = 0; i < kBins; ++i) sum_all += i * hist[static_cast<std::size_t>(i)];

  double w0 = 0.0, sum0 = 0.0, best = 0.0;
  int best_t = -1;
  for (int t = 0; t < kBins - 1; ++t) {
    w0 += hist[static_cast<std::size_t>(t)];
    sum0 += t * hist[static_cast<std::size_t>(t)];
    const double w1 = total - w0;
    if (w0 == 0.0 || w1 == 0.0) continue;
    const double m0 = sum0 / w0;
    const double m1 = (sum_all - sum0) / w1;
    const double between = w0 * w1 * (m0 - m1) * (m0 - m1);
    if (between > best) {
      best = between;
      best_t = t;
    }
  }
  if (best_t < 0) return std::nullopt;
  return static_cast<float>(best_t + 1) / kBins;
}

ComponentLabels label_components_2d(std::span<const std::uint8_t> mask, int width, int height) {
  ComponentLabels out;
  out.labels.assign(mask.size(), 0);
  std::vector<std::size_t> stack;
  for (int b = 0; b < height; ++b) {
    for (int a = 0; a < width; ++a) {
      const std::size_t seed = static_cast<std::size_t>(a) + static_cast<std::size_t>(width) * b;
      if (!mask[seed] || out.labels[seed] != 0) continue;
      const std::uint32_t id = ++out.count;
      out.labels[seed] = id;
      stack.push_back(seed);
      while (!stack.empty()) {
        const std::size_t cur = stack.back();
        stack.pop_back();
        const int ca = static_cast<int>(cur % width);
        const int cb = static_cast<int>(cur / width);
        for (int db = -1; db <= 1; ++db) {
          for (int da = -1; da <= 1; ++da) {
            const int na = ca + da, nb = cb + db;
            if (na < 0 || nb < 0 || na >= width || nb >= height) continue;
            const std::size_t ni = static_cast<std::size_t>(na) + static_cast<std::size_t>(width) * nb;
            if (mask[ni] && out.labels[ni] == 0) {
              out.labels[ni] = id;
              stack.push_back(ni);
            }
          }
        }
      }
    }
  }
  return out;
}

ComponentLabels label_components_3d(const Grid<std::uint8_t>& mask) {
  ComponentLabels out;
  out.labels.assign(mask.size(), 0);
  const Dims d = mask.dims();
  std::vector<std::size_t> stack;
  for (std::size_t seed = 0; seed < mask.size(); ++seed) {
    if (!mask[seed] || out.labels[seed] != 0) continue;
    const std::uint32_t id = ++out.count;
    out.labels[seed] = id;
    stack.push_back(seed);
    while (!stack.empty()) {
      const std::size_t cur = stack.back();
      stack.pop_back();
      const auto [cx, cy, cz] = mask.coords(cur);
      for (int dz = -1; dz <= 1; ++dz) {
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int x = cx + dx, y = cy + dy, z = cz + dz;
            if (!d.contains(x, y, z)) continue;
            const std::size_t ni = mask.index(x, y, z);
            if (mask[ni] && out.labels[ni] == 0) {
              out.labels[ni] = id;
              stack.push_back(ni);
            }
          }
        }
      }
    }
  }
  return out;
}

}  // namespace cellseg
