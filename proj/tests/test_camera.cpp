// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "nint/camera.hpp"

using namespace nint;

namespace {

IdealPinhole spec_pinhole() { return {600.0, 600.0, 320.0, 240.0}; }

/// Root of x (1 + k1 x^2) = xd on [lo, hi] by bisection.
double bisect_radial(double k1, double xd, double lo, double hi) {
  const auto f = [&](double x) { return x * (1.0 + k1 * x * x) - xd; };
  double flo = f(lo);
  while (hi - lo > 1e-15) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST(RayDirection, PrincipalPointIsOpticalAxis) {
  const Vec3 t = ray_direction(spec_pinhole(), 320.0, 240.0);
  EXPECT_EQ(t, Vec3(0.0, 0.0, 1.0));
}

TEST(RayDirection, OneFocalLengthOffAxis) {
  const Vec3 t = ray_direction(spec_pinhole(), 920.0, 240.0);
  EXPECT_EQ(t, Vec3(1.0, 0.0, 1.0));
}

TEST(RayDirection, BrownConradyWithoutRealFixedPointFails) {
  // x (1 - 0.2 x^2) peaks at about 0.861 < 1, so x_d = 1 has no undistorted preimage.
  const double peak_x = std::sqrt(1.0 / 0.6);
  EXPECT_LT(peak_x * (1.0 - 0.2 * peak_x * peak_x), 1.0);
  const BrownConradyPinhole cam{600.0, 600.0, 320.0, 240.0, -0.2, 0.0, 0.0, 0.0, 0.0};
  try {
    ray_direction(cam, 920.0, 240.0);
    FAIL() << "expected NonConvergentUndistortion";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonConvergentUndistortion);
  }
}

TEST(RayDirection, BrownConradyMatchesBisection) {
  const BrownConradyPinhole cam{600.0, 600.0, 320.0, 240.0, -0.2, 0.0, 0.0, 0.0, 0.0};
  const double expected = bisect_radial(-0.2, 0.5, 0.5, std::sqrt(1.0 / 0.6));
  const Vec3 t = ray_direction(cam, 620.0, 240.0);
  EXPECT_NEAR(t.x(), expected, 1e-10);
  EXPECT_EQ(t.y(), 0.0);
  EXPECT_EQ(t.z(), 1.0);
}

TEST(RayDirection, TabulatedOutOfBounds) {
  TabulatedRays tab{Image<Vec3>(2, 2, Vec3(0.0, 0.0, 1.0))};
  try {
    ray_direction(tab, 2.0, 0.0);
    FAIL() << "expected OutOfBounds";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OutOfBounds);
  }
  EXPECT_EQ(ray_direction(tab, Pixel{1, 1}), Vec3(0.0, 0.0, 1.0));
}

TEST(BuildRayMap, PinholeMatchesPointwise) {
  const IdealPinhole cam{2.0, 3.0, 0.5, 0.5};
  const RayMap rays = build_ray_map(cam, 2, 2);
  for (int v = 0; v < 2; ++v) {
    for (int u = 0; u < 2; ++u) EXPECT_EQ(rays(u, v), ray_direction(cam, Pixel{u, v}));
  }
  EXPECT_EQ(rays(0, 0), Vec3(-0.25, -0.5 / 3.0, 1.0));
}

TEST(BuildRayMap, TabulatedPassthrough) {
  Image<Vec3> table(3, 2);
  for (std::size_t i = 0; i < table.size(); ++i) table[i] = Vec3(0.1 * i, -0.05 * i, 1.0);
  const RayMap rays = build_ray_map(TabulatedRays{table}, 3, 2);
  EXPECT_EQ(rays.data(), table.data());
  EXPECT_THROW(build_ray_map(TabulatedRays{table}, 2, 2), Error);
}

TEST(BuildRayMap, BrownConradyRoundTrip) {
  const BrownConradyPinhole cam{80.0, 82.0, 31.7, 23.2, -0.15, 0.03, -0.004, 0.001, -0.0015};
  const RayMap rays = build_ray_map(cam, 64, 48);
  for (std::size_t i = 0; i < rays.size(); ++i) {
    const Pixel p = rays.pixel(i);
    const Eigen::Vector2d d = distort(cam, rays[i].x(), rays[i].y());
    EXPECT_NEAR(d.x(), (p.u - cam.cx) / cam.fx, 1e-10);
    EXPECT_NEAR(d.y(), (p.v - cam.cy) / cam.fy, 1e-10);
    EXPECT_EQ(rays[i].z(), 1.0);
  }
}

TEST(BuildRayMap, ZeroDistortionIsBitwisePinhole) {
  const IdealPinhole pin{77.0, 81.0, 12.3, 9.8};
  const BrownConradyPinhole bc{77.0, 81.0, 12.3, 9.8, 0.0, 0.0, 0.0, 0.0, 0.0};
  EXPECT_EQ(build_ray_map(pin, 24, 20).data(), build_ray_map(bc, 24, 20).data());
}

TEST(BuildRayMap, ErrorsCarryPixelLocation) {
  const BrownConradyPinhole cam{10.0, 10.0, 0.0, 0.0, -0.2, 0.0, 0.0, 0.0, 0.0};
  try {
    build_ray_map(cam, 40, 1);
    FAIL() << "expected NonConvergentUndistortion";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonConvergentUndistortion);
    EXPECT_NE(e.message().find("at pixel ("), std::string::npos);
  }
}

TEST(BuildRayMap, HorizontalPairScaleEqualsFocalLength) {
  const IdealPinhole cam{600.0, 600.0, 320.0, 240.0};
  const RayMap rays = build_ray_map(cam, 8, 4);
  for (int v = 0; v < 4; ++v) {
    for (int u = 0; u + 1 < 8; ++u) {
      const double dtau = (rays(u + 1, v) - rays(u, v)).norm();
      EXPECT_NEAR(1.0 / dtau, 600.0, 600.0 * 1e-12);
    }
  }
}

TEST(CameraValidation, RejectsBadModels) {
  EXPECT_THROW(validate(IdealPinhole{0.0, 1.0, 0.0, 0.0}), Error);
  EXPECT_THROW(validate(IdealPinhole{1.0, -1.0, 0.0, 0.0}), Error);
  EXPECT_THROW(validate(BrownConradyPinhole{1.0, 1.0, 0.0, 0.0, NAN, 0.0, 0.0, 0.0, 0.0}), Error);
  Image<Vec3> table(1, 1, Vec3(0.0, 0.0, 2.0));
  EXPECT_THROW(validate(TabulatedRays{table}), Error);
  EXPECT_THROW(build_ray_map(IdealPinhole{}, 0, 3), Error);
}
