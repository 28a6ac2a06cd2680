// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>
#include <set>

#include "nint/camera.hpp"
#include "nint/graph.hpp"

using namespace nint;

namespace {

const Vec3 kFronto(0.0, 0.0, -1.0);

PairGraph fronto_graph(const PixelMask& mask, Connectivity c) {
  const IdealPinhole cam{50.0, 50.0, 0.5 * (mask.width() - 1), 0.5 * (mask.height() - 1)};
  const RayMap rays = build_ray_map(cam, mask.width(), mask.height());
  return build_graph(mask, NormalMap(mask.width(), mask.height(), kFronto), rays, {c});
}

void expect_invariants(const PairGraph& g) {
  for (std::size_t i = 0; i < g.pairs.size(); ++i) {
    const DirectedPair& p = g.pairs[i];
    ASSERT_GE(p.reverse, 0);
    const DirectedPair& r = g.pairs[static_cast<std::size_t>(p.reverse)];
    EXPECT_EQ(r.a, p.b);
    EXPECT_EQ(r.b, p.a);
    EXPECT_EQ(g.pairs[static_cast<std::size_t>(r.reverse)].a, p.a);
    if (p.opposite >= 0) {
      const DirectedPair& o = g.pairs[static_cast<std::size_t>(p.opposite)];
      EXPECT_EQ(o.a, p.a);
      EXPECT_EQ(o.direction, opposite_direction(p.direction));
      EXPECT_EQ(o.opposite, static_cast<std::int32_t>(i));
    }
    EXPECT_EQ(g.component_id[p.a], g.component_id[p.b]);
  }
}

}  // namespace

TEST(BuildGraph, TwoPixels) {
  const PairGraph g = fronto_graph(PixelMask(2, 1, 1), Connectivity::Four);
  ASSERT_EQ(g.pairs.size(), 2U);
  EXPECT_EQ(g.pairs[0].reverse, 1);
  EXPECT_EQ(g.pairs[1].reverse, 0);
  EXPECT_EQ(g.pairs[0].opposite, -1);
  EXPECT_EQ(g.pairs[1].opposite, -1);
  EXPECT_EQ(g.component_count, 1);
}

TEST(BuildGraph, CenterOfThreeHasOpposites) {
  const PairGraph g = fronto_graph(PixelMask(3, 1, 1), Connectivity::Four);
  ASSERT_EQ(g.pairs.size(), 4U);
  int with_opposite = 0;
  for (const DirectedPair& p : g.pairs) {
    if (p.a == 1) {
      EXPECT_GE(p.opposite, 0);
      ++with_opposite;
    } else {
      EXPECT_EQ(p.opposite, -1);
    }
  }
  EXPECT_EQ(with_opposite, 2);
  expect_invariants(g);
}

TEST(BuildGraph, EightConnectedThreeByThree) {
  const PairGraph g = fronto_graph(PixelMask(3, 3, 1), Connectivity::Eight);
  // 6 horizontal + 6 vertical + 8 diagonal unordered pairs.
  EXPECT_EQ(g.pairs.size(), 40U);
  expect_invariants(g);
}

TEST(BuildGraph, CountsMatchFormula) {
  for (auto [w, h] : {std::pair{1, 5}, {4, 3}, {7, 7}, {10, 2}}) {
    if (w * h < 2) continue;
    const PixelMask m(w, h, 1);
    EXPECT_EQ(fronto_graph(m, Connectivity::Four).pairs.size(),
              static_cast<std::size_t>(2 * ((w - 1) * h + w * (h - 1))));
    if (w > 1 && h > 1) {
      EXPECT_EQ(fronto_graph(m, Connectivity::DiagonalFour).pairs.size(),
                static_cast<std::size_t>(4 * (w - 1) * (h - 1)));
      EXPECT_EQ(fronto_graph(m, Connectivity::Eight).pairs.size(),
                static_cast<std::size_t>(2 * ((w - 1) * h + w * (h - 1)) + 4 * (w - 1) * (h - 1)));
    }
  }
}

TEST(BuildGraph, RandomMaskInvariantsAndBruteForceCount) {
  std::mt19937_64 rng(11);
  PixelMask m(17, 13, 0);
  for (auto& v : m.data()) v = (rng() % 10) < 7 ? 1 : 0;
  for (Connectivity c : {Connectivity::Four, Connectivity::DiagonalFour, Connectivity::Eight}) {
    const PairGraph g = fronto_graph(m, c);
    expect_invariants(g);
    std::size_t expected = 0;
    for (int v = 0; v < m.height(); ++v) {
      for (int u = 0; u < m.width(); ++u) {
        if (!m(u, v)) continue;
        for (int d : directions_for(c)) {
          const int ub = u + kNeighborOffsets[d][0], vb = v + kNeighborOffsets[d][1];
          if (m.contains(ub, vb) && m(ub, vb)) ++expected;
        }
      }
    }
    EXPECT_EQ(g.pairs.size(), expected);
  }
}

TEST(BuildGraph, RowMajorThenNeighborOrder) {
  const PairGraph g = fronto_graph(PixelMask(4, 4, 1), Connectivity::Eight);
  for (std::size_t i = 1; i < g.pairs.size(); ++i) {
    const DirectedPair& p = g.pairs[i - 1];
    const DirectedPair& q = g.pairs[i];
    ASSERT_LE(p.a, q.a);
    if (p.a == q.a) {
      EXPECT_LT(p.direction, q.direction);
    }
  }
}

TEST(BuildGraph, ComponentsFromMask) {
  EXPECT_EQ(fronto_graph(PixelMask(5, 5, 1), Connectivity::Four).component_count, 1);
  PixelMask m(5, 2, 1);
  m(2, 0) = 0;
  m(2, 1) = 0;
  const PairGraph g = fronto_graph(m, Connectivity::Four);
  EXPECT_EQ(g.component_count, 2);
  EXPECT_EQ(g.component_id[m.index(0, 0)], 0);
  EXPECT_EQ(g.component_id[m.index(4, 1)], 1);
  EXPECT_EQ(g.component_id[m.index(2, 0)], -1);
}

TEST(BuildGraph, InvalidPairsSplitComponents) {
  // Pixel 2 faces the camera along its own ray but away from it at the
  // mid-ray toward pixel 1, so only pair (1, 2) is dropped.
  const IdealPinhole cam{1.0, 1.0, 1.5, 0.0};
  const RayMap rays = build_ray_map(cam, 4, 1);
  NormalMap n(4, 1, kFronto);
  n[2] = Vec3(-1.0, 0.0, 0.2).normalized();
  const PairGraph g = build_graph(PixelMask(4, 1, 1), n, rays);
  EXPECT_EQ(g.dropped_pairs, 1U);
  EXPECT_EQ(g.pairs.size(), 4U);
  EXPECT_EQ(g.component_count, 2);
  EXPECT_FALSE(g.warnings.empty());
  expect_invariants(g);
}

TEST(BuildGraph, Errors) {
  const IdealPinhole cam{10.0, 10.0, 0.0, 0.0};
  try {
    build_graph(PixelMask(1, 1, 1), NormalMap(1, 1, kFronto), build_ray_map(cam, 1, 1));
    FAIL() << "expected EmptyGraph";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyGraph);
  }
  try {
    build_graph(PixelMask(2, 2, 1), NormalMap(3, 2, kFronto), build_ray_map(cam, 2, 2));
    FAIL() << "expected DimensionMismatch";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
  NormalMap bad(2, 1, kFronto);
  bad[1] = Vec3(0.0, 0.0, -1.1);
  EXPECT_THROW(build_graph(PixelMask(2, 1, 1), bad, build_ray_map(cam, 2, 1)), Error);
}

TEST(BuildGraph, BiniTargetAndGammaOnSlantedPlane) {
  const IdealPinhole cam{200.0, 200.0, 3.0, 3.0};
  const RayMap rays = build_ray_map(cam, 7, 7);
  const Vec3 n = Vec3(0.2, -0.3, -1.0).normalized();
  const PairGraph g = build_graph(PixelMask(7, 7, 1), NormalMap(7, 7, n), rays);
  for (const DirectedPair& p : g.pairs) {
    const Vec3 d = kNeighborOffsets[p.direction][0] * Vec3::UnitX() +
                   kNeighborOffsets[p.direction][1] * Vec3::UnitY();
    // gamma * target reduces to the normal component along the step.
    EXPECT_NEAR(p.coeffs.gamma * p.bini_target, n.dot(d), 1e-12);
    EXPECT_NEAR(p.coeffs.gamma, 200.0 * n.dot(rays[p.a]), 200.0 * 1e-12);
  }
}
