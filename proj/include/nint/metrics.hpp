// SPDX-License-Identifier: Apache-2.0
//
// Depth-error and formulation-residual statistics.

#ifndef NINT_METRICS_HPP
#define NINT_METRICS_HPP

#include <cmath>
#include <string>
#include <vector>

#include "nint/camera.hpp"
#include "nint/common.hpp"
#include "nint/graph.hpp"
#include "nint/solver.hpp"

namespace nint {

struct Alignment {
  bool enabled = true;
  AlignMode mode = AlignMode::Median;
  AlignDomain domain = AlignDomain::Log;

  static Alignment none() { return {false, AlignMode::Median, AlignDomain::Log}; }

  std::string name() const {
    if (!enabled) return "none";
    return std::string(to_string(mode)) + "-" + to_string(domain);
  }
};

enum class ResidualVariant { Abs, RelLog, RelDepth };

inline const char* to_string(ResidualVariant v) {
  switch (v) {
    case ResidualVariant::Abs: return "abs";
    case ResidualVariant::RelLog: return "rel_log";
    case ResidualVariant::RelDepth: return "rel_depth";
  }
  return "?";
}

struct ResidualStats {
  double mean = 0.0;
  double std = 0.0;
  std::size_t pairs = 0;
  /// Pairs skipped by the rel_log division guard.
  std::size_t excluded = 0;
};

struct MetricsReport {
  double made = 0.0;
  double re_percent = 0.0;
  double era_percent = 0.0;
  std::string alignment = "none";
  std::size_t pixel_count = 0;
  /// Optional residual rows: variant name -> stats.
  std::vector<std::pair<std::string, ResidualStats>> residuals;
};

namespace metrics_detail {

inline DepthMap aligned(const DepthMap& est, const DepthMap& gt, const PixelMask& mask,
                        const Alignment& align, const std::vector<std::int32_t>* components) {
  require_same_shape(est, gt, "estimate vs ground truth");
  require_same_shape(est, mask, "estimate vs mask");
  if (count_valid(mask) == 0) throw Error(ErrorCode::EmptyMask, "mask has no valid pixels");
  if (!align.enabled) return est;
  return gauge_align(est, gt, mask, align.mode, align.domain, components);
}

}  // namespace metrics_detail

/// Mean absolute depth error after alignment.
inline double made(const DepthMap& est, const DepthMap& gt, const PixelMask& mask,
                   const Alignment& align = {},
                   const std::vector<std::int32_t>* components = nullptr) {
  const DepthMap a = metrics_detail::aligned(est, gt, mask, align, components);
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    sum += std::abs(a[i] - gt[i]);
    ++n;
  }
  return sum / static_cast<double>(n);
}

/// (RE, ERA) in percent: mean |e| / gt, and mean |e| / mean gt.
inline std::pair<double, double> relative_errors(const DepthMap& est, const DepthMap& gt,
                                                 const PixelMask& mask, const Alignment& align = {},
                                                 const std::vector<std::int32_t>* components = nullptr) {
  const DepthMap a = metrics_detail::aligned(est, gt, mask, align, components);
  double rel = 0.0, abs_err = 0.0, depth = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    if (!(gt[i] > 0.0)) throw Error(ErrorCode::InvalidArgument, "ground-truth depth must be > 0");
    const double e = std::abs(a[i] - gt[i]);
    rel += e / gt[i];
    abs_err += e;
    depth += gt[i];
    ++n;
  }
  const double dn = static_cast<double>(n);
  return {100.0 * rel / dn, 100.0 * (abs_err / dn) / (depth / dn)};
}

inline MetricsReport evaluate(const DepthMap& est, const DepthMap& gt, const PixelMask& mask,
                              const Alignment& align = {},
                              const std::vector<std::int32_t>* components = nullptr) {
  MetricsReport r;
  r.made = made(est, gt, mask, align, components);
  std::tie(r.re_percent, r.era_percent) = relative_errors(est, gt, mask, align, components);
  r.alignment = align.name();
  r.pixel_count = count_valid(mask);
  return r;
}

/// Residual of every directed pair at ground-truth depth with alpha = 0.
inline std::vector<double> pair_residuals(const DepthMap& depth_gt, const PairGraph& graph,
                                          Method method, ResidualVariant variant,
                                          std::size_t* excluded = nullptr) {
  if (depth_gt.width() != graph.width || depth_gt.height() != graph.height) {
    throw Error(ErrorCode::DimensionMismatch, "depth map does not match the graph");
  }
  if (graph.pairs.empty()) throw Error(ErrorCode::EmptyGraph, "no pairs to evaluate");
  std::vector<double> out;
  out.reserve(graph.pairs.size());
  std::size_t skipped = 0;
  for (const DirectedPair& p : graph.pairs) {
    const double za = depth_gt[p.a];
    const double zb = depth_gt[p.b];
    if (!(za > 0.0) || !(zb > 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "ground-truth depth must be > 0 on the mask");
    }
    const double g = p.coeffs.gamma;
    const double target = method == Method::Ours ? log_rhs(p.coeffs, 0.0, 0.0) : p.bini_target;
    const double lza = std::log(za);
    const double lzb = std::log(zb);
    switch (variant) {
      case ResidualVariant::Abs:
        out.push_back(std::abs(g * (lza - lzb) - g * target));
        break;
      case ResidualVariant::RelLog:
        if (std::abs(lza) < 1e-12) {
          ++skipped;
          break;
        }
        out.push_back(std::abs((lza - lzb - target) / lza));
        break;
      case ResidualVariant::RelDepth:
        out.push_back(std::abs((za - std::exp(target) * zb) / za));
        break;
    }
  }
  if (excluded) *excluded = skipped;
  return out;
}

inline ResidualStats formulation_residuals(const DepthMap& depth_gt, const PairGraph& graph,
                                           Method method, ResidualVariant variant) {
  ResidualStats s;
  const std::vector<double> r = pair_residuals(depth_gt, graph, method, variant, &s.excluded);
  s.pairs = r.size();
  if (r.empty()) return s;
  double sum = 0.0;
  for (double x : r) sum += x;
  s.mean = sum / static_cast<double>(r.size());
  double var = 0.0;
  for (double x : r) var += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(var / static_cast<double>(r.size()));
  return s;
}

inline ResidualStats formulation_residuals(const NormalMap& normals, const DepthMap& depth_gt,
                                           const PixelMask& mask, const CameraModel& camera,
                                           Method method, ResidualVariant variant,
                                           const GraphOptions& options = {}) {
  const RayMap rays = build_ray_map(camera, normals.width(), normals.height());
  return formulation_residuals(depth_gt, build_graph(mask, normals, rays, options), method, variant);
}

}  // namespace nint

#endif  // NINT_METRICS_HPP
