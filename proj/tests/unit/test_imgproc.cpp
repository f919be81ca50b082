#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "cellseg/imgproc.hpp"
#include "test_support.hpp"

using namespace cellseg;

namespace {

// Reference 1D taps written from the definition: exp(-k^2 / 2 sigma^2) for
// |k| <= ceil(3 sigma), normalized to sum 1.
std::vector<double> reference_taps(double sigma) {
  if (sigma <= 0) return {1.0};
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> t;
  for (int k = -r; k <= r; ++k) t.push_back(std::exp(-(k * k) / (2.0 * sigma * sigma)));
  const double s = std::accumulate(t.begin(), t.end(), 0.0);
  for (auto& v : t) v /= s;
  return t;
}

}  // namespace

TEST(GaussianKernel, RadiusAndNormalization) {
  for (double sigma : {0.5, 1.0, 1.5, 2.5}) {
    const auto k = gaussian_kernel(sigma);
    const auto ref = reference_taps(sigma);
    ASSERT_EQ(k.size(), ref.size());
    for (std::size_t i = 0; i < k.size(); ++i) EXPECT_NEAR(k[i], ref[i], 1e-12);
    EXPECT_NEAR(std::accumulate(k.begin(), k.end(), 0.0), 1.0, 1e-12);
  }
  EXPECT_EQ(gaussian_kernel(0.0), std::vector<double>{1.0});
}

TEST(GaussianBlur, ZeroSigmaIsIdentity) {
  std::mt19937_64 rng(1);
  Grid<float> g(Dims{6, 5, 4});
  for (auto& v : g.storage()) v = std::uniform_real_distribution<float>(0, 1)(rng);
  EXPECT_EQ(gaussian_blur(g, 0, 0, 0), g);
}

TEST(GaussianBlur, ConstantIsPreserved) {
  Grid<float> g(Dims{7, 7, 7}, 0.3f);
  const auto out = gaussian_blur(g, 1.5, 1.5, 2.5);
  for (float v : out.storage()) EXPECT_NEAR(v, 0.3f, 1e-6);
}

TEST(GaussianBlur, MatchesDirectClampedConvolution) {
  std::mt19937_64 rng(2);
  const Dims d{6, 5, 7};
  Grid<float> g(d);
  for (auto& v : g.storage()) v = std::uniform_real_distribution<float>(0, 1)(rng);
  const double sx = 1.0, sy = 0.7, sz = 1.3;
  const auto out = gaussian_blur(g, sx, sy, sz);
  const auto kx = reference_taps(sx), ky = reference_taps(sy), kz = reference_taps(sz);
  const int rx = static_cast<int>(kx.size() / 2), ry = static_cast<int>(ky.size() / 2),
            rz = static_cast<int>(kz.size() / 2);
  auto clamp = [](int v, int n) { return std::clamp(v, 0, n - 1); };
  for (int z = 0; z < d.nz; ++z) {
    for (int y = 0; y < d.ny; ++y) {
      for (int x = 0; x < d.nx; ++x) {
        double acc = 0.0;
        for (int k = -rz; k <= rz; ++k) {
          for (int j = -ry; j <= ry; ++j) {
            for (int i = -rx; i <= rx; ++i) {
              acc += kx[i + rx] * ky[j + ry] * kz[k + rz] *
                     g.at(clamp(x + i, d.nx), clamp(y + j, d.ny), clamp(z + k, d.nz));
            }
          }
        }
        EXPECT_NEAR(out.at(x, y, z), acc, 1e-5);
      }
    }
  }
}

TEST(Otsu, SplitsBimodalValues) {
  std::vector<float> v;
  for (int i = 0; i < 100; ++i) v.push_back(0.1f);
  for (int i = 0; i < 50; ++i) v.push_back(0.8f);
  const auto t = otsu_threshold(v);
  ASSERT_TRUE(t.has_value());
  EXPECT_GT(*t, 0.1f);
  EXPECT_LE(*t, 0.8f);
}

TEST(Otsu, MaximizesBetweenClassVariance) {
  std::mt19937_64 rng(4);
  std::normal_distribution<float> lo(0.25f, 0.05f), hi(0.7f, 0.05f);
  std::vector<float> v;
  for (int i = 0; i < 400; ++i) v.push_back(std::clamp(lo(rng), 0.0f, 1.0f));
  for (int i = 0; i < 200; ++i) v.push_back(std::clamp(hi(rng), 0.0f, 1.0f));
  const auto t = otsu_threshold(v);
  ASSERT_TRUE(t.has_value());
  // Exhaustive search over 256 cut points of the between-class variance.
  auto variance = [&](float cut) {
    double n0 = 0, n1 = 0, s0 = 0, s1 = 0;
    for (float x : v) (x >= cut ? (n1 += 1, s1 += x) : (n0 += 1, s0 += x));
    if (n0 == 0 || n1 == 0) return 0.0;
    const double m0 = s0 / n0, m1 = s1 / n1;
    return n0 * n1 * (m0 - m1) * (m0 - m1);
  };
  double best = 0;
  for (int k = 1; k < 256; ++k) best = std::max(best, variance(k / 256.0f));
  EXPECT_GE(variance(*t), 0.98 * best);
}

TEST(Otsu, ConstantImageHasNoSplit) {
  EXPECT_FALSE(otsu_threshold(std::vector<float>(50, 0.4f)).has_value());
  EXPECT_FALSE(otsu_threshold(std::vector<float>{}).has_value());
}

TEST(Components2D, MatchFloodFillOnRandomMasks) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const int w = 13, h = 9;
    std::vector<std::uint8_t> mask(w * h);
    for (auto& m : mask) m = (rng() % 100) < 40 ? 1 : 0;
    const auto got = label_components_2d(mask, w, h);
    const auto ref = support::flood_fill_2d(mask, w, h);
    EXPECT_TRUE(support::same_partition(got.labels, ref));
    EXPECT_EQ(got.count, *std::max_element(ref.begin(), ref.end()));
  }
}

TEST(Components2D, DiagonalPixelsAreConnected) {
  const std::vector<std::uint8_t> mask{1, 0, 0, 1};
  EXPECT_EQ(label_components_2d(mask, 2, 2).count, 1u);
}

TEST(Components3D, MatchFloodFillOnRandomMasks) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 40; ++trial) {
    Grid<std::uint8_t> mask(Dims{8, 7, 6});
    for (auto& m : mask.storage()) m = (rng() % 100) < 25 ? 1 : 0;
    const auto got = label_components_3d(mask);
    const auto ref = support::flood_fill_3d(mask);
    EXPECT_TRUE(support::same_partition(got.labels, ref));
    EXPECT_EQ(got.count, *std::max_element(ref.begin(), ref.end()));
  }
}

TEST(Components3D, CornerContactIsConnected) {
  Grid<std::uint8_t> mask(Dims::cube(2));
  mask.at(0, 0, 0) = 1;
  mask.at(1, 1, 1) = 1;
  EXPECT_EQ(label_components_3d(mask).count, 1u);
}
