// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "nint/nint.hpp"

using namespace nint;

namespace {

const Vec3 kFronto(0.0, 0.0, -1.0);

std::size_t count_changed(const NormalMap& a, const NormalMap& b) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) n += a[i] != b[i];
  return n;
}

}  // namespace

TEST(Rng, ReproducibleAndUniform) {
  Rng a(42), b(42);
  double mean = 0.0, m2 = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double x = a.uniform();
    EXPECT_EQ(x, b.uniform());
    ASSERT_GE(x, 0.0);
    ASSERT_LT(x, 1.0);
    mean += x;
  }
  EXPECT_NEAR(mean / 20000.0, 0.5, 0.01);
  Rng c(1);
  mean = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double x = c.normal();
    mean += x;
    m2 += x * x;
  }
  EXPECT_NEAR(mean / 20000.0, 0.0, 0.03);
  EXPECT_NEAR(m2 / 20000.0, 1.0, 0.05);
  for (int i = 0; i < 1000; ++i) ASSERT_LT(c.index(7), 7U);
  EXPECT_NEAR(c.unit_vector().norm(), 1.0, 1e-15);
}

TEST(Corrupt, ZeroFractionIsIdentity) {
  const NormalMap n(30, 20, kFronto);
  EXPECT_EQ(corrupt(n, PixelMask(30, 20, 1), {noise_mode::Outliers{0.0}, 3}).data(), n.data());
}

TEST(Corrupt, ZeroSigmaIsIdentity) {
  const NormalMap n(30, 20, Vec3(0.2, 0.1, -1.0).normalized());
  const NormalMap out = corrupt(n, PixelMask(30, 20, 1), {noise_mode::Rotational{0.0}, 3});
  for (std::size_t i = 0; i < n.size(); ++i) EXPECT_NEAR((out[i] - n[i]).norm(), 0.0, 1e-12);
}

TEST(Corrupt, OutlierCountIsExact) {
  const NormalMap n(100, 100, kFronto);
  const NormalMap out = corrupt(n, PixelMask(100, 100, 1), {noise_mode::Outliers{0.1}, 9});
  EXPECT_EQ(count_changed(n, out), 1000U);
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_NEAR(out[i].norm(), 1.0, 1e-12);
}

TEST(Corrupt, DeterministicPerSeed) {
  const NormalMap n(40, 40, kFronto);
  const PixelMask m(40, 40, 1);
  const NoiseSpec s{noise_mode::Rotational{5.0}, 77};
  EXPECT_EQ(corrupt(n, m, s).data(), corrupt(n, m, s).data());
  EXPECT_NE(corrupt(n, m, s).data(), corrupt(n, m, {noise_mode::Rotational{5.0}, 78}).data());
}

TEST(Corrupt, RotationAngleMatchesSigma) {
  const NormalMap n(100, 100, kFronto);
  const NormalMap out = corrupt(n, PixelMask(100, 100, 1), {noise_mode::Rotational{2.0}, 5});
  // The angle to the original is |sigma g| sin(theta) for a random axis;
  // E|g| sin(theta) over the sphere = sqrt(2/pi) * pi/4.
  double sum = 0.0;
  for (std::size_t i = 0; i < n.size(); ++i) sum += std::acos(std::clamp(out[i].dot(n[i]), -1.0, 1.0));
  const double expected = 2.0 * std::numbers::pi / 180.0 * std::sqrt(2.0 / std::numbers::pi) * std::numbers::pi / 4.0;
  EXPECT_NEAR(sum / n.size(), expected, 0.05 * expected);
}

TEST(Corrupt, OnlyMaskedPixelsChange) {
  const NormalMap n(20, 20, kFronto);
  PixelMask m(20, 20, 0);
  for (int v = 5; v < 15; ++v) {
    for (int u = 5; u < 15; ++u) m(u, v) = 1;
  }
  for (const NoiseSpec& s : {NoiseSpec{noise_mode::Outliers{1.0}, 1}, NoiseSpec{noise_mode::Rotational{10.0}, 1}}) {
    const NormalMap out = corrupt(n, m, s);
    for (std::size_t i = 0; i < n.size(); ++i) {
      if (!m[i]) {
        EXPECT_EQ(out[i], n[i]);
      }
    }
  }
  EXPECT_THROW(corrupt(n, m, {noise_mode::Outliers{1.5}, 1}), Error);
  EXPECT_THROW(corrupt(n, m, {noise_mode::Rotational{-1.0}, 1}), Error);
}

TEST(Filter, SmoothFieldIsUnchanged) {
  const IdealPinhole cam{100.0, 100.0, 31.5, 31.5};
  const RayMap rays = build_ray_map(cam, 64, 64);
  const Rendering r = render(scene::SphereCap{{0, 0, 4}, 1.5}, rays);
  const FilterResult f = mitigation_filter(r.normals, rays, r.mask);
  EXPECT_EQ(f.flagged, 0U);
  EXPECT_EQ(f.normals.data(), r.normals.data());
}

TEST(Filter, FlippedPixelIsReplaced) {
  const IdealPinhole cam{100.0, 100.0, 15.5, 15.5};
  const RayMap rays = build_ray_map(cam, 32, 32);
  NormalMap n(32, 32, kFronto);
  n(10, 12) = Vec3(0.0, 0.0, 1.0);
  const FilterResult f = mitigation_filter(n, rays, PixelMask(32, 32, 1));
  EXPECT_EQ(f.flagged, 1U);
  EXPECT_EQ(f.unresolved, 0U);
  EXPECT_NEAR((f.normals(10, 12) - kFronto).norm(), 0.0, 1e-15);
}

TEST(Filter, RemovesAllBackFacingOutliers) {
  const IdealPinhole cam{150.0, 150.0, 63.5, 63.5};
  const RayMap rays = build_ray_map(cam, 128, 128);
  const Rendering r = render(scene::SphereCap{{0, 0, 4}, 1.5}, rays);
  const NormalMap noisy = corrupt(r.normals, r.mask, {noise_mode::Outliers{0.05}, 7});
  const FilterResult f = mitigation_filter(noisy, rays, r.mask);
  std::size_t positive = 0;
  for (std::size_t i = 0; i < r.mask.size(); ++i) {
    if (!r.mask[i]) continue;
    positive += f.normals[i].dot(rays[i]) > 0.0;
    EXPECT_NEAR(f.normals[i].norm(), 1.0, 1e-12);
  }
  EXPECT_EQ(positive, 0U);
  EXPECT_GT(f.flagged, 0U);
  // A second pass finds nothing facing away from the camera.
  const FilterResult again = mitigation_filter(f.normals, rays, r.mask);
  std::size_t positive2 = 0;
  for (std::size_t i = 0; i < r.mask.size(); ++i) {
    if (r.mask[i]) positive2 += again.normals[i].dot(rays[i]) > 0.0;
  }
  EXPECT_EQ(positive2, 0U);
}

TEST(Filter, Validation) {
  const NormalMap n(4, 4, kFronto);
  const RayMap rays(4, 4, Vec3(0, 0, 1));
  EXPECT_THROW(mitigation_filter(n, rays, PixelMask(4, 4, 1), 0.75, 4), Error);
  EXPECT_THROW(mitigation_filter(n, rays, PixelMask(4, 4, 1), 0.0, 3), Error);
  EXPECT_THROW(mitigation_filter(n, RayMap(3, 4), PixelMask(4, 4, 1)), Error);
}
