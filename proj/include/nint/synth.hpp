// SPDX-License-Identifier: Apache-2.0
//
// Analytic ground-truth scenes rendered through any central camera.

#ifndef NINT_SYNTH_HPP
#define NINT_SYNTH_HPP

#include <cmath>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "nint/camera.hpp"
#include "nint/common.hpp"
#include "nint/graph.hpp"

namespace nint {

namespace scene {

struct Plane {
  Vec3 point{0.0, 0.0, 2.0};
  Vec3 normal{0.0, 0.0, -1.0};
};

struct SphereCap {
  Vec3 center{0.0, 0.0, 4.0};
  double radius = 1.0;
};

/// Two planes split by the image line a u + b v + c = 0; pixels with
/// a u + b v + c < 0 see the near plane. Plane i passes through (0, 0, z_i).
struct StepPlanes {
  double z_near = 2.0;
  double z_far = 3.0;
  double a = 1.0;
  double b = 0.0;
  double c = 0.0;
  Vec3 normal_near{0.0, 0.0, -1.0};
  Vec3 normal_far{0.0, 0.0, -1.0};
};

/// z(x, y) = z0 + A sin(fu x) sin(fv y) in camera coordinates.
struct Wave {
  double z0 = 3.0;
  double amplitude = 0.1;
  double fu = 4.0;
  double fv = 4.0;
};

}  // namespace scene

using Scene = std::variant<scene::Plane, scene::SphereCap, scene::StepPlanes, scene::Wave>;

inline const char* scene_name(const Scene& s) {
  switch (s.index()) {
    case 0: return "plane";
    case 1: return "sphere";
    case 2: return "step";
    default: return "wave";
  }
}

struct Rendering {
  DepthMap depth;
  NormalMap normals;
  PixelMask mask;
};

namespace synth_detail {

inline constexpr double kRootTolerance = 1e-12;

inline Vec3 unit(const Vec3& n, const char* what) {
  const double len = n.norm();
  if (!(len > 0.0) || !std::isfinite(len)) {
    throw Error(ErrorCode::InvalidArgument, std::string(what) + " must be a nonzero finite vector");
  }
  return n / len;
}

inline void validate(const Scene& s) {
  std::visit(
      [](const auto& sc) {
        using T = std::decay_t<decltype(sc)>;
        if constexpr (std::is_same_v<T, scene::Plane>) {
          unit(sc.normal, "plane normal");
          if (sc.normal.dot(sc.point) == 0.0) {
            throw Error(ErrorCode::InvalidArgument, "plane passes through the camera center");
          }
        } else if constexpr (std::is_same_v<T, scene::SphereCap>) {
          if (!(sc.radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "sphere radius must be > 0");
          if (sc.center.norm() <= sc.radius) {
            throw Error(ErrorCode::InvalidArgument, "camera center lies inside the sphere");
          }
        } else if constexpr (std::is_same_v<T, scene::StepPlanes>) {
          if (!(sc.z_near > 0.0) || !(sc.z_far > 0.0)) {
            throw Error(ErrorCode::InvalidArgument, "step depths must be > 0");
          }
          if (sc.a == 0.0 && sc.b == 0.0) {
            throw Error(ErrorCode::InvalidArgument, "split line needs a or b nonzero");
          }
          unit(sc.normal_near, "near-plane normal");
          unit(sc.normal_far, "far-plane normal");
        } else {
          if (!(sc.z0 > 0.0)) throw Error(ErrorCode::InvalidArgument, "wave z0 must be > 0");
          if (!(std::abs(sc.amplitude) < 0.2 * sc.z0)) {
            throw Error(ErrorCode::InvalidArgument, "wave amplitude must satisfy |A| < 0.2 z0");
          }
        }
      },
      s);
}

struct Hit {
  bool ok = false;
  double z = 0.0;
  Vec3 normal = Vec3::Zero();
};

/// Intersection with the plane through p0 with normal n, normal facing the camera.
inline Hit hit_plane(const Vec3& p0, Vec3 n, const Vec3& tau) {
  n = unit(n, "plane normal");
  if (n.dot(p0) > 0.0) n = -n;
  Hit h;
  const double nt = n.dot(tau);
  if (!(nt < 0.0)) return h;
  h.z = n.dot(p0) / nt;
  h.normal = n;
  h.ok = h.z > 0.0 && std::isfinite(h.z);
  return h;
}

inline Hit hit_sphere(const scene::SphereCap& s, const Vec3& tau) {
  Hit h;
  const double A = tau.squaredNorm();
  const double B = tau.dot(s.center);
  const double C = s.center.squaredNorm() - s.radius * s.radius;
  const double disc = B * B - A * C;
  if (disc < 0.0) return h;
  const double sq = std::sqrt(disc);
  // Stable form of the smaller root (B > 0 when the sphere is in front).
  double z = B > 0.0 ? C / (B + sq) : (B - sq) / A;
  if (!(z > 0.0)) z = (B + sq) / A;
  if (!(z > 0.0)) return h;
  Vec3 n = (z * tau - s.center) / s.radius;
  if (n.dot(tau) > 0.0) n = -n;
  n.normalize();
  h.z = z;
  h.normal = n;
  h.ok = n.dot(tau) < 0.0;
  return h;
}

inline Hit hit_wave(const scene::Wave& w, const Vec3& tau) {
  const auto g = [&](double z) {
    return z - w.z0 - w.amplitude * std::sin(w.fu * z * tau.x()) * std::sin(w.fv * z * tau.y());
  };
  double lo = 0.1 * w.z0;
  double hi = 10.0 * w.z0;
  double glo = g(lo);
  if (!(glo < 0.0) || !(g(hi) > 0.0)) {
    throw Error(ErrorCode::NonConvergentRoot, "wave root is not bracketed");
  }
  for (int it = 0; it < 200 && hi - lo > kRootTolerance; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double gm = g(mid);
    if ((gm < 0.0) == (glo < 0.0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
  }
  if (hi - lo > kRootTolerance) {
    throw Error(ErrorCode::NonConvergentRoot, "wave root bisection did not reach tolerance");
  }
  Hit h;
  h.z = 0.5 * (lo + hi);
  const double x = h.z * tau.x();
  const double y = h.z * tau.y();
  const double dzdx = w.amplitude * w.fu * std::cos(w.fu * x) * std::sin(w.fv * y);
  const double dzdy = w.amplitude * w.fv * std::sin(w.fu * x) * std::cos(w.fv * y);
  h.normal = Vec3(dzdx, dzdy, -1.0).normalized();
  h.ok = h.normal.dot(tau) < 0.0;
  return h;
}

inline Hit hit(const Scene& s, const Vec3& tau, Pixel px) {
  return std::visit(
      [&](const auto& sc) -> Hit {
        using T = std::decay_t<decltype(sc)>;
        if constexpr (std::is_same_v<T, scene::Plane>) {
          return hit_plane(sc.point, sc.normal, tau);
        } else if constexpr (std::is_same_v<T, scene::SphereCap>) {
          return hit_sphere(sc, tau);
        } else if constexpr (std::is_same_v<T, scene::StepPlanes>) {
          const double side = sc.a * px.u + sc.b * px.v + sc.c;
          if (std::abs(side) < 1e-9) {
            throw Error(ErrorCode::InvalidArgument, "step split line passes through pixel center (" +
                                                        std::to_string(px.u) + ", " +
                                                        std::to_string(px.v) + ")");
          }
          const bool near = side < 0.0;
          const double z = near ? sc.z_near : sc.z_far;
          const Vec3 n = unit(near ? sc.normal_near : sc.normal_far, "step normal");
          return hit_plane(Vec3(0.0, 0.0, z), n, tau);
        } else {
          return hit_wave(sc, tau);
        }
      },
      s);
}

}  // namespace synth_detail

/// Depth, exact normals and validity mask of `scene` seen through precomputed rays.
inline Rendering render(const Scene& s, const RayMap& rays) {
  synth_detail::validate(s);
  Rendering r{DepthMap(rays.width(), rays.height(), 0.0),
              NormalMap(rays.width(), rays.height(), Vec3::Zero()),
              PixelMask(rays.width(), rays.height(), 0)};
  parallel_for(rays.size(), [&](std::size_t i) {
    const Pixel px = rays.pixel(i);
    const synth_detail::Hit h = synth_detail::hit(s, rays[i], px);
    if (!h.ok) return;
    r.depth[i] = h.z;
    r.normals[i] = h.normal;
    r.mask[i] = 1;
  });
  return r;
}

inline Rendering render(const Scene& s, const CameraModel& camera, int width, int height) {
  return render(s, build_ray_map(camera, width, height));
}

inline std::pair<DepthMap, PixelMask> render_depth(const Scene& s, const CameraModel& camera,
                                                   int width, int height) {
  Rendering r = render(s, camera, width, height);
  return {std::move(r.depth), std::move(r.mask)};
}

inline NormalMap render_normals(const Scene& s, const CameraModel& camera, int width, int height) {
  return render(s, camera, width, height).normals;
}

/// alpha_{b->a} = (z_a / z_b - omega) / omega_eps for eligible pairs, else 0.
inline std::vector<double> ground_truth_alpha(const DepthMap& depth_gt, const PairGraph& graph) {
  if (depth_gt.width() != graph.width || depth_gt.height() != graph.height) {
    throw Error(ErrorCode::DimensionMismatch, "depth map does not match the graph");
  }
  std::vector<double> alpha(graph.pairs.size(), 0.0);
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    const DirectedPair& p = graph.pairs[i];
    if (!p.coeffs.alpha_eligible()) continue;
    const double za = depth_gt[p.a];
    const double zb = depth_gt[p.b];
    if (!(za > 0.0) || !(zb > 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "ground-truth depth must be > 0 on the mask");
    }
    alpha[i] = (std::exp(std::log(za) - std::log(zb)) - p.coeffs.omega) / p.coeffs.omega_eps;
  }
  return alpha;
}

}  // namespace nint

#endif  // NINT_SYNTH_HPP
