#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>

#include "urbanforge/core.hpp"

namespace urbanforge {

inline constexpr int kSubpixelBits = 8;
inline constexpr double kSubpixelScale = 1 << kSubpixelBits;

using FixedPoint2 = std::array<std::int64_t, 2>;

inline FixedPoint2 to_fixed(const Vec2& p) {
  return {std::llround(p.x() * kSubpixelScale), std::llround(p.y() * kSubpixelScale)};
}

/// Visits every pixel of a w x h grid whose center lies inside the triangle (p0, p1, p2),
/// given in fixed-point pixel units. Edges use the top-left rule (y down), so triangles
/// sharing an edge cover each pixel center on it exactly once. fn(x, y, l0, l1, l2)
/// receives barycentrics in the caller's vertex order. Either winding is accepted.
template <typename Fn>
void fill_triangle(const FixedPoint2& p0, const FixedPoint2& p1, const FixedPoint2& p2, int w, int h, Fn&& fn) {
  auto edge = [](const FixedPoint2& a, const FixedPoint2& b, std::int64_t px, std::int64_t py) {
    return (b[0] - a[0]) * (py - a[1]) - (b[1] - a[1]) * (px - a[0]);
  };
  std::array<const FixedPoint2*, 3> v = {&p0, &p1, &p2};
  std::array<int, 3> slot = {0, 1, 2};
  std::int64_t area = edge(p0, p1, p2[0], p2[1]);
  if (area == 0) return;
  if (area < 0) {
    std::swap(v[1], v[2]);
    std::swap(slot[1], slot[2]);
    area = -area;
  }
  const std::int64_t min_x = std::min({p0[0], p1[0], p2[0]});
  const std::int64_t max_x = std::max({p0[0], p1[0], p2[0]});
  const std::int64_t min_y = std::min({p0[1], p1[1], p2[1]});
  const std::int64_t max_y = std::max({p0[1], p1[1], p2[1]});
  const int x0 = std::max(0, static_cast<int>(std::floor(min_x / kSubpixelScale - 0.5)));
  const int x1 = std::min(w - 1, static_cast<int>(std::ceil(max_x / kSubpixelScale - 0.5)));
  const int y0 = std::max(0, static_cast<int>(std::floor(min_y / kSubpixelScale - 0.5)));
  const int y1 = std::min(h - 1, static_cast<int>(std::ceil(max_y / kSubpixelScale - 0.5)));
  if (x0 > x1 || y0 > y1) return;

  // Edge k is opposite vertex k.
  const std::array<std::pair<const FixedPoint2*, const FixedPoint2*>, 3> edges = {{{v[1], v[2]}, {v[2], v[0]}, {v[0], v[1]}}};
  std::array<bool, 3> top_left{};
  for (int k = 0; k < 3; ++k) {
    const std::int64_t dx = (*edges[k].second)[0] - (*edges[k].first)[0];
    const std::int64_t dy = (*edges[k].second)[1] - (*edges[k].first)[1];
    top_left[k] = (dy == 0 && dx > 0) || dy < 0;
  }

  constexpr std::int64_t half = 1 << (kSubpixelBits - 1);
  std::array<double, 3> lambda{};
  for (int y = y0; y <= y1; ++y) {
    const std::int64_t py = (static_cast<std::int64_t>(y) << kSubpixelBits) + half;
    for (int x = x0; x <= x1; ++x) {
      const std::int64_t px = (static_cast<std::int64_t>(x) << kSubpixelBits) + half;
      std::array<std::int64_t, 3> e{};
      bool inside = true;
      for (int k = 0; k < 3 && inside; ++k) {
        e[k] = edge(*edges[k].first, *edges[k].second, px, py);
        inside = e[k] > 0 || (e[k] == 0 && top_left[k]);
      }
      if (!inside) continue;
      const double l0 = static_cast<double>(e[0]) / static_cast<double>(area);
      const double l1 = static_cast<double>(e[1]) / static_cast<double>(area);
      lambda[slot[0]] = l0;
      lambda[slot[1]] = l1;
      lambda[slot[2]] = 1.0 - l0 - l1;
      fn(x, y, lambda[0], lambda[1], lambda[2]);
    }
  }
}

}  // namespace urbanforge
