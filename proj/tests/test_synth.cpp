// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "nint/nint.hpp"

using namespace nint;

namespace {

const IdealPinhole kCam{100.0, 100.0, 31.5, 31.5};

}  // namespace

TEST(Render, FrontoPlane) {
  const Rendering r = render(scene::Plane{}, kCam, 64, 64);
  for (std::size_t i = 0; i < r.mask.size(); ++i) {
    ASSERT_EQ(r.mask[i], 1);
    EXPECT_NEAR(r.depth[i], 2.0, 1e-15);
    EXPECT_EQ(r.normals[i], Vec3(0.0, 0.0, -1.0));
  }
}

TEST(Render, SlantedPlaneMatchesParametricIntersection) {
  const Vec3 n = Vec3(0.3, -0.2, -1.0).normalized();
  const scene::Plane pl{{0.1, 0.2, 3.0}, n};
  const RayMap rays = build_ray_map(kCam, 64, 64);
  const Rendering r = render(pl, rays);
  for (std::size_t i = 0; i < r.mask.size(); ++i) {
    ASSERT_EQ(r.mask[i], 1);
    const double t = n.dot(pl.point) / n.dot(rays[i]);
    EXPECT_NEAR(r.depth[i], t, 1e-12);
    EXPECT_NEAR(n.dot(r.depth[i] * rays[i] - pl.point), 0.0, 1e-12);
  }
}

TEST(Render, SphereAxialPixel) {
  const IdealPinhole cam{100.0, 100.0, 32.0, 32.0};
  const Rendering r = render(scene::SphereCap{{0.0, 0.0, 4.0}, 1.0}, cam, 65, 65);
  EXPECT_NEAR(r.depth(32, 32), 3.0, 1e-12);
  EXPECT_NEAR((r.normals(32, 32) - Vec3(0.0, 0.0, -1.0)).norm(), 0.0, 1e-12);
  EXPECT_EQ(r.mask(0, 0), 0);
}

TEST(Render, SphereNormalsAreRadial) {
  const scene::SphereCap s{{0.2, -0.1, 4.0}, 1.5};
  const RayMap rays = build_ray_map(kCam, 64, 64);
  const Rendering r = render(s, rays);
  std::size_t n = 0;
  for (std::size_t i = 0; i < r.mask.size(); ++i) {
    if (!r.mask[i]) continue;
    ++n;
    const Vec3 X = r.depth[i] * rays[i];
    EXPECT_NEAR((X - s.center).norm(), 1.5, 1e-9);
    EXPECT_NEAR((r.normals[i] - (X - s.center) / 1.5).norm(), 0.0, 1e-9);
  }
  EXPECT_GT(n, 1000U);
}

TEST(Render, WaveNormalsMatchFiniteDifferences) {
  const scene::Wave w{3.0, 0.1, 4.0, 3.0};
  const double h = 1e-5;
  const auto surface = [&](double x, double y) {
    return Vec3(x, y, w.z0 + w.amplitude * std::sin(w.fu * x) * std::sin(w.fv * y));
  };
  const RayMap rays = build_ray_map(kCam, 64, 64);
  const Rendering r = render(w, rays);
  for (std::size_t i = 0; i < r.mask.size(); i += 7) {
    ASSERT_EQ(r.mask[i], 1);
    const Vec3 X = r.depth[i] * rays[i];
    EXPECT_NEAR(X.z(), surface(X.x(), X.y()).z(), 1e-11);
    const Vec3 dx = surface(X.x() + h, X.y()) - surface(X.x() - h, X.y());
    const Vec3 dy = surface(X.x(), X.y() + h) - surface(X.x(), X.y() - h);
    Vec3 n = dx.cross(dy).normalized();
    if (n.dot(rays[i]) > 0.0) n = -n;
    EXPECT_NEAR((r.normals[i] - n).norm(), 0.0, 1e-5);
  }
}

TEST(Render, AllNormalsFaceTheCamera) {
  const RayMap rays = build_ray_map(kCam, 64, 64);
  const Scene scenes[] = {scene::Plane{{0, 0, 3}, {0.3, -0.2, -1.0}},
                          scene::SphereCap{{0, 0, 4}, 1.5}, scene::Wave{},
                          scene::StepPlanes{2.0, 3.0, 1.0, 0.0, -31.5, {0, 0.3, -1}, {0, -0.3, -1}}};
  for (const Scene& s : scenes) {
    const Rendering r = render(s, rays);
    for (std::size_t i = 0; i < r.mask.size(); ++i) {
      if (!r.mask[i]) continue;
      EXPECT_LT(r.normals[i].dot(rays[i]), 0.0) << scene_name(s);
      EXPECT_NEAR(r.normals[i].norm(), 1.0, 1e-12);
    }
  }
}

TEST(Render, StepSplitsOnLine) {
  const scene::StepPlanes st{2.0, 3.0, 1.0, 0.0, -31.5};
  const Rendering r = render(st, kCam, 64, 64);
  EXPECT_NEAR(r.depth(31, 10), 2.0, 1e-15);
  EXPECT_NEAR(r.depth(32, 10), 3.0, 1e-15);
  const scene::StepPlanes bad{2.0, 3.0, 1.0, 0.0, -31.0};
  EXPECT_THROW(render(bad, kCam, 64, 64), Error);
}

TEST(Render, ValidationErrors) {
  EXPECT_THROW(render(scene::Wave{3.0, 0.7, 4.0, 4.0}, kCam, 8, 8), Error);
  EXPECT_THROW(render(scene::SphereCap{{0, 0, 1}, 2.0}, kCam, 8, 8), Error);
  EXPECT_THROW(render(scene::Plane{{0, 0, 2}, {0, 0, 0}}, kCam, 8, 8), Error);
  EXPECT_THROW(render(scene::StepPlanes{-1.0, 3.0}, kCam, 8, 8), Error);
}

TEST(GroundTruthAlpha, SlantedPlaneIsZero) {
  const scene::Plane pl{{0, 0, 3}, Vec3(0.3, -0.2, -1.0)};
  const RayMap rays = build_ray_map(kCam, 32, 32);
  const Rendering r = render(pl, rays);
  const PairGraph g = build_graph(r.mask, r.normals, rays, {Connectivity::Eight});
  for (double a : ground_truth_alpha(r.depth, g)) EXPECT_NEAR(a, 0.0, 1e-12);
}

TEST(GroundTruthAlpha, FrontoStep) {
  const scene::StepPlanes st{2.0, 3.0, 1.0, 0.0, -31.5};
  const RayMap rays = build_ray_map(kCam, 64, 64);
  const Rendering r = render(st, rays);
  const PairGraph g = build_graph(r.mask, r.normals, rays);
  const auto alpha = ground_truth_alpha(r.depth, g);
  int crossing = 0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    const DirectedPair& p = g.pairs[i];
    const bool a_far = r.depth[p.a] > 2.5, b_far = r.depth[p.b] > 2.5;
    if (a_far == b_far) {
      EXPECT_NEAR(alpha[i], 0.0, 1e-12);
    } else if (a_far) {
      // far <- near: z_a / z_b - 1 = 0.5, and eps = alpha z_b = 1.
      EXPECT_NEAR(alpha[i], 0.5, 1e-12);
      EXPECT_NEAR(alpha[i] * r.depth[p.b], 1.0, 1e-12);
      ++crossing;
    } else {
      EXPECT_NEAR(alpha[i], 2.0 / 3.0 - 1.0, 1e-12);
    }
  }
  EXPECT_EQ(crossing, 64);
}
