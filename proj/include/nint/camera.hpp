// SPDX-License-Identifier: Apache-2.0
//
// Central camera models and per-pixel ray-direction maps.
//
// Every model maps a pixel u = (u, v) to a ray direction tau = (tau_x, tau_y, 1),
// so that the surface point seen through u is z * tau with z its camera depth.
// Axes follow the usual vision convention: x right, y down, z forward.

#ifndef NINT_CAMERA_HPP
#define NINT_CAMERA_HPP

#include <cmath>
#include <string>
#include <type_traits>
#include <variant>

#include "nint/common.hpp"

namespace nint {

struct IdealPinhole {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
};

/// Pinhole with Brown-Conrady radial (k1, k2, k3) and tangential (p1, p2)
/// distortion applied in normalized image coordinates.
struct BrownConradyPinhole {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  double k1 = 0.0;
  double k2 = 0.0;
  double k3 = 0.0;
  double p1 = 0.0;
  double p2 = 0.0;
};

/// Generic central camera given as an explicit ray table.
struct TabulatedRays {
  Image<Vec3> rays;
};

using CameraModel = std::variant<IdealPinhole, BrownConradyPinhole, TabulatedRays>;
using RayMap = Image<Vec3>;

namespace camera_detail {

inline constexpr int kMaxUndistortIterations = 50;
inline constexpr double kUndistortTolerance = 1e-12;

template <typename Pinhole>
void validate_intrinsics(const Pinhole& cam) {
  if (!(cam.fx > 0.0) || !(cam.fy > 0.0) || !std::isfinite(cam.fx) || !std::isfinite(cam.fy) ||
      !std::isfinite(cam.cx) || !std::isfinite(cam.cy)) {
    throw Error(ErrorCode::InvalidArgument, "pinhole focal lengths must be finite and > 0");
  }
}

}  // namespace camera_detail

/// Forward Brown-Conrady distortion of normalized coordinates (x, y).
inline Eigen::Vector2d distort(const BrownConradyPinhole& cam, double x, double y) {
  const double r2 = x * x + y * y;
  const double radial = 1.0 + r2 * (cam.k1 + r2 * (cam.k2 + r2 * cam.k3));
  const double dx = 2.0 * cam.p1 * x * y + cam.p2 * (r2 + 2.0 * x * x);
  const double dy = cam.p1 * (r2 + 2.0 * y * y) + 2.0 * cam.p2 * x * y;
  return {x * radial + dx, y * radial + dy};
}

/// Inverts distort() by the fixed-point scheme x <- (x_d - dx(x)) / radial(x).
inline Eigen::Vector2d undistort(const BrownConradyPinhole& cam, double xd, double yd) {
  double x = xd;
  double y = yd;
  for (int it = 0; it < camera_detail::kMaxUndistortIterations; ++it) {
    const double r2 = x * x + y * y;
    const double radial = 1.0 + r2 * (cam.k1 + r2 * (cam.k2 + r2 * cam.k3));
    const double dx = 2.0 * cam.p1 * x * y + cam.p2 * (r2 + 2.0 * x * x);
    const double dy = cam.p1 * (r2 + 2.0 * y * y) + 2.0 * cam.p2 * x * y;
    const double nx = (xd - dx) / radial;
    const double ny = (yd - dy) / radial;
    if (!std::isfinite(nx) || !std::isfinite(ny)) break;
    const bool done = std::abs(nx - x) <= camera_detail::kUndistortTolerance &&
                      std::abs(ny - y) <= camera_detail::kUndistortTolerance;
    x = nx;
    y = ny;
    if (done) return {x, y};
  }
  throw Error(ErrorCode::NonConvergentUndistortion,
              "fixed-point undistortion did not converge for normalized point (" +
                  std::to_string(xd) + ", " + std::to_string(yd) + ")");
}

/// Checks the model invariants; throws InvalidArgument on violation.
inline void validate(const CameraModel& camera) {
  std::visit(
      [](const auto& cam) {
        using T = std::decay_t<decltype(cam)>;
        if constexpr (std::is_same_v<T, TabulatedRays>) {
          if (cam.rays.empty()) throw Error(ErrorCode::InvalidArgument, "empty ray table");
          for (std::size_t i = 0; i < cam.rays.size(); ++i) {
            const Vec3& r = cam.rays[i];
            if (r.z() != 1.0 || !std::isfinite(r.x()) || !std::isfinite(r.y())) {
              const Pixel p = cam.rays.pixel(i);
              throw Error(ErrorCode::InvalidArgument,
                          "tabulated ray at (" + std::to_string(p.u) + ", " + std::to_string(p.v) +
                              ") must be finite with third component 1");
            }
          }
        } else {
          camera_detail::validate_intrinsics(cam);
          if constexpr (std::is_same_v<T, BrownConradyPinhole>) {
            for (double c : {cam.k1, cam.k2, cam.k3, cam.p1, cam.p2}) {
              if (!std::isfinite(c)) {
                throw Error(ErrorCode::InvalidArgument, "distortion coefficients must be finite");
              }
            }
          }
        }
      },
      camera);
}

/// Ray direction (tau_x, tau_y, 1) through pixel position (u, v).
inline Vec3 ray_direction(const CameraModel& camera, double u, double v) {
  return std::visit(
      [u, v](const auto& cam) -> Vec3 {
        using T = std::decay_t<decltype(cam)>;
        if constexpr (std::is_same_v<T, IdealPinhole>) {
          return {(u - cam.cx) / cam.fx, (v - cam.cy) / cam.fy, 1.0};
        } else if constexpr (std::is_same_v<T, BrownConradyPinhole>) {
          const Eigen::Vector2d xy = undistort(cam, (u - cam.cx) / cam.fx, (v - cam.cy) / cam.fy);
          return {xy.x(), xy.y(), 1.0};
        } else {
          const double ru = std::round(u);
          const double rv = std::round(v);
          if (ru != u || rv != v) {
            throw Error(ErrorCode::InvalidArgument, "tabulated rays exist only at pixel centers");
          }
          const int iu = static_cast<int>(ru);
          const int iv = static_cast<int>(rv);
          if (!cam.rays.contains(iu, iv)) {
            throw Error(ErrorCode::OutOfBounds, "pixel (" + std::to_string(iu) + ", " +
                                                    std::to_string(iv) + ") outside ray table");
          }
          return cam.rays(iu, iv);
        }
      },
      camera);
}

inline Vec3 ray_direction(const CameraModel& camera, Pixel p) {
  return ray_direction(camera, static_cast<double>(p.u), static_cast<double>(p.v));
}

/// Evaluates ray_direction at every integer pixel center of a width x height grid.
inline RayMap build_ray_map(const CameraModel& camera, int width, int height) {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::InvalidArgument, "ray map size must be positive");
  }
  validate(camera);
  if (const auto* tab = std::get_if<TabulatedRays>(&camera)) {
    if (tab->rays.width() != width || tab->rays.height() != height) {
      throw Error(ErrorCode::DimensionMismatch, "ray table size differs from requested grid");
    }
    return tab->rays;
  }
  RayMap rays(width, height);
  parallel_for(rays.size(), [&](std::size_t i) {
    const Pixel p = rays.pixel(i);
    try {
      rays[i] = ray_direction(camera, p);
    } catch (const Error& e) {
      throw Error(e.code(), e.message() + " at pixel (" + std::to_string(p.u) + ", " +
                                std::to_string(p.v) + ")");
    }
  });
  return rays;
}

}  // namespace nint

#endif  // NINT_CAMERA_HPP
