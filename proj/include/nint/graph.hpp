// SPDX-License-Identifier: Apache-2.0
//
// Directed neighboring-pixel pairs over the valid mask.

#ifndef NINT_GRAPH_HPP
#define NINT_GRAPH_HPP

#include <array>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "nint/camera.hpp"
#include "nint/common.hpp"
#include "nint/formulation.hpp"

namespace nint {

enum class Connectivity { Four, DiagonalFour, Eight };

inline const char* to_string(Connectivity c) {
  switch (c) {
    case Connectivity::Four: return "4";
    case Connectivity::DiagonalFour: return "diag4";
    case Connectivity::Eight: return "8";
  }
  return "?";
}

/// Neighbor offsets in enumeration order: right, left, down, up, then the
/// diagonals down-right, up-left, up-right, down-left. Entries 2k and 2k+1 are
/// opposite to each other.
inline constexpr std::array<std::array<int, 2>, 8> kNeighborOffsets = {{
    {1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {-1, -1}, {1, -1}, {-1, 1},
}};

inline constexpr int opposite_direction(int dir) { return dir ^ 1; }

inline std::vector<int> directions_for(Connectivity c) {
  switch (c) {
    case Connectivity::Four: return {0, 1, 2, 3};
    case Connectivity::DiagonalFour: return {4, 5, 6, 7};
    case Connectivity::Eight: return {0, 1, 2, 3, 4, 5, 6, 7};
  }
  return {};
}

/// One equation b -> a, constraining pixel a from its neighbor b.
struct DirectedPair {
  std::uint32_t a = 0;  ///< pixel index of the constrained pixel
  std::uint32_t b = 0;  ///< pixel index of the neighbor
  std::uint8_t direction = 0;  ///< index into kNeighborOffsets (b - a)
  std::int32_t reverse = -1;   ///< index of the pair a -> b
  std::int32_t opposite = -1;  ///< index of the pair -b -> a, or -1
  PairCoefficients coeffs;
  /// First-order log-depth difference n_a.(tau_b - tau_a) / (n_a.tau_a); the
  /// baseline's right-hand side is gamma times this.
  double bini_target = 0.0;
};

struct PairGraph {
  int width = 0;
  int height = 0;
  Connectivity connectivity = Connectivity::Four;
  std::vector<DirectedPair> pairs;
  /// Per-pixel connected-component label; -1 outside the mask.
  std::vector<std::int32_t> component_id;
  int component_count = 0;
  /// Unknown index of each pixel (-1 outside the mask) and its inverse.
  std::vector<std::int32_t> pixel_to_var;
  std::vector<std::uint32_t> var_to_pixel;
  std::size_t dropped_pairs = 0;
  std::vector<std::string> warnings;

  std::size_t variable_count() const noexcept { return var_to_pixel.size(); }
  Pixel pixel(std::uint32_t idx) const noexcept {
    return {static_cast<int>(idx % static_cast<std::uint32_t>(width)),
            static_cast<int>(idx / static_cast<std::uint32_t>(width))};
  }
};

namespace graph_detail {

struct DisjointSets {
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0U); }

  std::uint32_t find(std::uint32_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(std::uint32_t x, std::uint32_t y) {
    x = find(x);
    y = find(y);
    if (x == y) return;
    if (y < x) std::swap(x, y);
    parent[y] = x;
  }

  std::vector<std::uint32_t> parent;
};

}  // namespace graph_detail

/// Labels connected components over the retained pairs. Labels are dense from
/// 0, assigned in row-major order of each component's first pixel; masked
/// pixels without any pair form their own single-pixel component.
inline void connected_components(PairGraph& graph) {
  const std::size_t n = static_cast<std::size_t>(graph.width) * graph.height;
  graph_detail::DisjointSets sets(n);
  for (const DirectedPair& p : graph.pairs) sets.unite(p.a, p.b);
  std::vector<std::int32_t> root_label(n, -1);
  graph.component_id.assign(n, -1);
  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (graph.pixel_to_var[i] < 0) continue;
    const std::uint32_t root = sets.find(static_cast<std::uint32_t>(i));
    if (root_label[root] < 0) root_label[root] = next++;
    graph.component_id[i] = root_label[root];
  }
  graph.component_count = next;
}

struct GraphOptions {
  Connectivity connectivity = Connectivity::Four;
  LambdaMode lambda = lambda_mode::Constant{0.5};
  GammaMode gamma = gamma_mode::Full{};
  /// Tolerated deviation of ||n|| from 1 at masked pixels.
  double unit_tolerance = 1e-6;
};

/// Enumerates directed pairs in row-major order of a, then neighbor order.
/// Unordered pairs whose coefficients are invalid in either direction are
/// dropped together (and counted), so reverse closure always holds.
inline PairGraph build_graph(const PixelMask& mask, const NormalMap& normals, const RayMap& rays,
                             const GraphOptions& options = {}) {
  require_same_shape(mask, normals, "mask vs normals");
  require_same_shape(mask, rays, "mask vs rays");
  validate(options.lambda);

  PairGraph g;
  g.width = mask.width();
  g.height = mask.height();
  g.connectivity = options.connectivity;
  const std::size_t n = mask.size();
  g.pixel_to_var.assign(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    const double len = normals[i].norm();
    if (!std::isfinite(len) || std::abs(len - 1.0) > options.unit_tolerance) {
      const Pixel p = mask.pixel(i);
      throw Error(ErrorCode::InvalidArgument, "normal at (" + std::to_string(p.u) + ", " +
                                                  std::to_string(p.v) + ") is not unit length");
    }
    g.pixel_to_var[i] = static_cast<std::int32_t>(g.var_to_pixel.size());
    g.var_to_pixel.push_back(static_cast<std::uint32_t>(i));
  }

  const std::vector<int> dirs = directions_for(options.connectivity);
  // Slot of the directed pair (pixel, direction), or -1.
  std::vector<std::int32_t> slot(n * 8, -1);

  struct Candidate {
    bool ok = false;
    PairCoefficients coeffs;
    double bini_target = 0.0;
  };
  const auto evaluate = [&](std::size_t a, std::size_t b, const Vec3& tau_m) {
    Candidate c;
    const Pixel pa = mask.pixel(a);
    const Pixel pb = mask.pixel(b);
    try {
      c.coeffs = pair_coefficients(normals[a], normals[b], rays[a], rays[b], tau_m);
      if (!c.coeffs.valid) return c;
      const GammaTerms gt = gamma_terms(normals[a], rays[a], pa, pb, rays[b], options.gamma);
      c.coeffs.gamma = gt.cost;
      c.coeffs.gamma_weight = gt.weight;
      c.bini_target = normals[a].dot(rays[b] - rays[a]) / c.coeffs.n_dot_tau_a;
      c.ok = std::isfinite(c.coeffs.gamma) && std::isfinite(c.coeffs.gamma_weight) &&
             std::isfinite(c.bini_target);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateRay) throw;
      c.ok = false;
    }
    return c;
  };

  for (std::size_t a = 0; a < n; ++a) {
    if (!mask[a]) continue;
    const Pixel pa = mask.pixel(a);
    for (int dir : dirs) {
      const int ub = pa.u + kNeighborOffsets[dir][0];
      const int vb = pa.v + kNeighborOffsets[dir][1];
      if (!mask.contains(ub, vb)) continue;
      const std::size_t b = mask.index(ub, vb);
      if (!mask[b]) continue;
      if (b < a) continue;  // handled when the lower index was visited

      // tau_m is computed once per unordered pair, seen from the lower index.
      const Vec3 tau_m = interp_tau_m(rays[a], rays[b], normals[a], normals[b], options.lambda);
      const Candidate fwd = evaluate(a, b, tau_m);
      const Candidate bwd = evaluate(b, a, tau_m);
      if (!fwd.ok || !bwd.ok) {
        ++g.dropped_pairs;
        continue;
      }
      DirectedPair p;
      p.a = static_cast<std::uint32_t>(a);
      p.b = static_cast<std::uint32_t>(b);
      p.direction = static_cast<std::uint8_t>(dir);
      p.coeffs = fwd.coeffs;
      p.bini_target = fwd.bini_target;
      DirectedPair q;
      q.a = static_cast<std::uint32_t>(b);
      q.b = static_cast<std::uint32_t>(a);
      q.direction = static_cast<std::uint8_t>(opposite_direction(dir));
      q.coeffs = bwd.coeffs;
      q.bini_target = bwd.bini_target;
      g.pairs.push_back(p);
      g.pairs.push_back(q);
    }
  }

  // Reorder: row-major by a, then neighbor enumeration order.
  std::vector<DirectedPair> ordered;
  ordered.reserve(g.pairs.size());
  {
    std::vector<std::int32_t> found(n * 8, -1);
    for (std::size_t i = 0; i < g.pairs.size(); ++i) {
      found[static_cast<std::size_t>(g.pairs[i].a) * 8 + g.pairs[i].direction] =
          static_cast<std::int32_t>(i);
    }
    for (std::size_t a = 0; a < n; ++a) {
      for (int dir : dirs) {
        const std::int32_t i = found[a * 8 + dir];
        if (i < 0) continue;
        slot[a * 8 + dir] = static_cast<std::int32_t>(ordered.size());
        ordered.push_back(g.pairs[static_cast<std::size_t>(i)]);
      }
    }
  }
  g.pairs = std::move(ordered);
  for (DirectedPair& p : g.pairs) {
    p.reverse = slot[static_cast<std::size_t>(p.b) * 8 + opposite_direction(p.direction)];
    p.opposite = slot[static_cast<std::size_t>(p.a) * 8 + opposite_direction(p.direction)];
  }

  if (g.dropped_pairs > 0) {
    g.warnings.push_back("dropped " + std::to_string(g.dropped_pairs) +
                         " neighbor pair(s) with invalid coefficients");
  }
  if (g.pairs.empty()) {
    throw Error(ErrorCode::EmptyGraph, "no valid neighboring pixel pairs in the mask");
  }
  connected_components(g);
  return g;
}

}  // namespace nint

#endif  // NINT_GRAPH_HPP
