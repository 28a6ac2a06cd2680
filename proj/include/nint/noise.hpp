// SPDX-License-Identifier: Apache-2.0
//
// Normal-map corruption (outliers, random rotations) and the n.tau based
// detect-and-average filter.

#ifndef NINT_NOISE_HPP
#define NINT_NOISE_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <variant>
#include <vector>

#include <Eigen/Geometry>

#include "nint/common.hpp"

namespace nint {

/// Portable random source: std::mt19937_64 (fully specified by the standard)
/// with explicitly defined transforms, so a seed gives the same stream on
/// every platform and standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Standard normal by Box-Muller (one draw per call, no caching).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Unbiased integer in [0, n).
  std::uint64_t index(std::uint64_t n) {
    if (n == 0) throw Error(ErrorCode::InvalidArgument, "index range must be nonempty");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % n;
  }

  /// Uniform direction on the unit sphere from a normalized Gaussian triple.
  Vec3 unit_vector() {
    for (;;) {
      const Vec3 g(normal(), normal(), normal());
      const double len = g.norm();
      if (len > 1e-12) return g / len;
    }
  }

 private:
  std::mt19937_64 engine_;
};

namespace noise_mode {
struct Outliers {
  double fraction = 0.0;
};
struct Rotational {
  double sigma_deg = 0.0;
};
}  // namespace noise_mode

struct NoiseSpec {
  std::variant<noise_mode::Outliers, noise_mode::Rotational> mode;
  std::uint64_t seed = 0;
};

/// Corrupts masked normals; unmasked pixels are never touched.
inline NormalMap corrupt(const NormalMap& normals, const PixelMask& mask, const NoiseSpec& spec) {
  require_same_shape(normals, mask, "normals vs mask");
  NormalMap out = normals;
  Rng rng(spec.seed);
  std::vector<std::size_t> pixels;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) pixels.push_back(i);
  }
  if (const auto* o = std::get_if<noise_mode::Outliers>(&spec.mode)) {
    if (!(o->fraction >= 0.0 && o->fraction <= 1.0)) {
      throw Error(ErrorCode::InvalidArgument, "outlier fraction must lie in [0, 1]");
    }
    const auto count = static_cast<std::size_t>(std::floor(o->fraction * static_cast<double>(pixels.size())));
    // Partial Fisher-Yates: the first `count` entries become a uniform sample.
    for (std::size_t k = 0; k < count; ++k) {
      const std::size_t j = k + static_cast<std::size_t>(rng.index(pixels.size() - k));
      std::swap(pixels[k], pixels[j]);
      out[pixels[k]] = rng.unit_vector();
    }
  } else {
    const auto& r = std::get<noise_mode::Rotational>(spec.mode);
    if (!(r.sigma_deg >= 0.0) || !std::isfinite(r.sigma_deg)) {
      throw Error(ErrorCode::InvalidArgument, "rotation sigma must be >= 0");
    }
    const double sigma = r.sigma_deg * std::numbers::pi / 180.0;
    for (std::size_t i : pixels) {
      const Vec3 axis = rng.unit_vector();
      const double angle = sigma * rng.normal();
      out[i] = (Eigen::AngleAxisd(angle, axis) * normals[i]).normalized();
    }
  }
  return out;
}

struct FilterResult {
  NormalMap normals;
  std::size_t flagged = 0;
  /// Flagged pixels left unchanged for lack of valid neighbors.
  std::size_t unresolved = 0;
};

/// Single-pass filter: flags n.tau > 0 and relative deviations of |n.tau| from
/// the neighborhood mean above `deviation_threshold`, then replaces flagged
/// normals by the normalized mean of unflagged masked neighbors.
inline FilterResult mitigation_filter(const NormalMap& normals, const Image<Vec3>& rays,
                                      const PixelMask& mask, double deviation_threshold = 0.75,
                                      int window = 3) {
  require_same_shape(normals, rays, "normals vs rays");
  require_same_shape(normals, mask, "normals vs mask");
  if (window < 3 || window % 2 == 0) {
    throw Error(ErrorCode::InvalidArgument, "filter window must be odd and >= 3");
  }
  if (!(deviation_threshold > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "deviation threshold must be > 0");
  }
  const int half = window / 2;
  const std::size_t n = normals.size();
  std::vector<double> ndt(n, 0.0);
  std::vector<std::uint8_t> sign_flag(n, 0), flag(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    ndt[i] = normals[i].dot(rays[i]);
    sign_flag[i] = ndt[i] > 0.0 ? 1 : 0;
  }

  const auto for_neighbors = [&](std::size_t i, auto&& fn) {
    const Pixel p = normals.pixel(i);
    for (int dv = -half; dv <= half; ++dv) {
      for (int du = -half; du <= half; ++du) {
        if (du == 0 && dv == 0) continue;
        if (!normals.contains(p.u + du, p.v + dv)) continue;
        const std::size_t j = normals.index(p.u + du, p.v + dv);
        if (mask[j]) fn(j);
      }
    }
  };

  parallel_for(n, [&](std::size_t i) {
    if (!mask[i]) return;
    if (sign_flag[i]) {
      flag[i] = 1;
      return;
    }
    double sum = 0.0;
    int count = 0;
    for_neighbors(i, [&](std::size_t j) {
      if (sign_flag[j]) return;
      sum += std::abs(ndt[j]);
      ++count;
    });
    if (count == 0) return;
    const double mu = sum / count;
    if (mu > 0.0 && std::abs(std::abs(ndt[i]) - mu) / mu > deviation_threshold) flag[i] = 1;
  });

  FilterResult out{normals, 0, 0};
  std::vector<std::uint8_t> unresolved(n, 0);
  parallel_for(n, [&](std::size_t i) {
    if (!flag[i]) return;
    Vec3 sum = Vec3::Zero();
    int count = 0;
    for_neighbors(i, [&](std::size_t j) {
      if (flag[j]) return;
      sum += normals[j];
      ++count;
    });
    const double len = sum.norm();
    if (count == 0 || !(len > 1e-12)) {
      unresolved[i] = 1;
      return;
    }
    out.normals[i] = sum / len;
  });
  for (std::size_t i = 0; i < n; ++i) {
    out.flagged += flag[i];
    out.unresolved += unresolved[i];
  }
  return out;
}

}  // namespace nint

#endif  // NINT_NOISE_HPP
