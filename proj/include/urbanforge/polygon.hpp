#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "urbanforge/core.hpp"

// Planar polygon utilities. Rings are stored open (first vertex not repeated).

namespace urbanforge::poly {

template <typename Scalar>
Scalar cross2(const Vec2T<Scalar>& a, const Vec2T<Scalar>& b) {
  return a.x() * b.y() - a.y() * b.x();
}

/// Twice the signed triangle area; positive for counter-clockwise (a, b, c).
template <typename Scalar>
Scalar orient(const Vec2T<Scalar>& a, const Vec2T<Scalar>& b, const Vec2T<Scalar>& c) {
  return cross2<Scalar>(b - a, c - a);
}

/// Shoelace formula; positive for counter-clockwise rings.
template <typename Scalar>
Scalar signed_area(const std::vector<Vec2T<Scalar>>& ring) {
  Scalar sum = 0;
  const std::size_t n = ring.size();
  for (std::size_t i = 0; i < n; ++i) sum += cross2<Scalar>(ring[i], ring[(i + 1) % n]);
  return sum / 2;
}

template <typename Scalar>
Scalar perimeter(const std::vector<Vec2T<Scalar>>& ring) {
  Scalar sum = 0;
  const std::size_t n = ring.size();
  for (std::size_t i = 0; i < n; ++i) sum += (ring[(i + 1) % n] - ring[i]).norm();
  return sum;
}

template <typename Scalar>
Scalar polyline_length(const std::vector<Vec2T<Scalar>>& line) {
  Scalar sum = 0;
  for (std::size_t i = 1; i < line.size(); ++i) sum += (line[i] - line[i - 1]).norm();
  return sum;
}

/// Drops consecutive duplicates (within eps) and a repeated closing vertex.
template <typename Scalar>
std::vector<Vec2T<Scalar>> dedupe(const std::vector<Vec2T<Scalar>>& pts, bool closed, Scalar eps = Scalar(1e-9)) {
  std::vector<Vec2T<Scalar>> out;
  out.reserve(pts.size());
  for (const auto& p : pts) {
    if (out.empty() || (p - out.back()).norm() > eps) out.push_back(p);
  }
  if (closed) {
    while (out.size() > 1 && (out.front() - out.back()).norm() <= eps) out.pop_back();
  }
  return out;
}

/// Open ring, duplicates removed, counter-clockwise.
template <typename Scalar>
std::vector<Vec2T<Scalar>> normalize_ring(const std::vector<Vec2T<Scalar>>& ring) {
  auto out = dedupe(ring, true);
  if (out.size() >= 3 && signed_area(out) < 0) std::reverse(out.begin(), out.end());
  return out;
}

template <typename Scalar>
bool on_segment(const Vec2T<Scalar>& p, const Vec2T<Scalar>& a, const Vec2T<Scalar>& b, Scalar eps) {
  return std::min(a.x(), b.x()) - eps <= p.x() && p.x() <= std::max(a.x(), b.x()) + eps &&
         std::min(a.y(), b.y()) - eps <= p.y() && p.y() <= std::max(a.y(), b.y()) + eps;
}

/// Closed-segment intersection test (touching counts).
template <typename Scalar>
bool segments_intersect(const Vec2T<Scalar>& p1, const Vec2T<Scalar>& p2, const Vec2T<Scalar>& q1,
                        const Vec2T<Scalar>& q2, Scalar eps = Scalar(1e-12)) {
  const Scalar d1 = orient(q1, q2, p1);
  const Scalar d2 = orient(q1, q2, p2);
  const Scalar d3 = orient(p1, p2, q1);
  const Scalar d4 = orient(p1, p2, q2);
  auto sgn = [eps](Scalar v) { return v > eps ? 1 : (v < -eps ? -1 : 0); };
  const int s1 = sgn(d1), s2 = sgn(d2), s3 = sgn(d3), s4 = sgn(d4);
  if (s1 * s2 < 0 && s3 * s4 < 0) return true;
  if (s1 == 0 && on_segment(p1, q1, q2, eps)) return true;
  if (s2 == 0 && on_segment(p2, q1, q2, eps)) return true;
  if (s3 == 0 && on_segment(q1, p1, p2, eps)) return true;
  if (s4 == 0 && on_segment(q2, p1, p2, eps)) return true;
  return false;
}

/// True when no two edges of the ring meet except adjacent edges at their shared vertex.
template <typename Scalar>
bool is_simple(const std::vector<Vec2T<Scalar>>& ring) {
  const std::size_t n = ring.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a1 = ring[i];
    const auto& a2 = ring[(i + 1) % n];
    if ((a2 - a1).norm() == 0) return false;
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto& b1 = ring[j];
      const auto& b2 = ring[(j + 1) % n];
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      if (adjacent) {
        // Adjacent edges may only share their common vertex: reject folding back.
        const auto& shared = (j == i + 1) ? a2 : a1;
        const auto& other_a = (j == i + 1) ? a1 : a2;
        const auto& other_b = (j == i + 1) ? b2 : b1;
        if (std::abs(orient(other_a, shared, other_b)) <= Scalar(1e-12) &&
            (other_a - shared).dot(other_b - shared) > 0)
          return false;
        continue;
      }
      if (segments_intersect(a1, a2, b1, b2)) return false;
    }
  }
  return std::abs(signed_area(ring)) > Scalar(0);
}

/// Even-odd point-in-polygon test.
template <typename Scalar>
bool point_in_polygon(const Vec2T<Scalar>& p, const std::vector<Vec2T<Scalar>>& ring) {
  bool inside = false;
  const std::size_t n = ring.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const auto& a = ring[i];
    const auto& b = ring[j];
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const Scalar x = a.x() + (p.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
      if (p.x() < x) inside = !inside;
    }
  }
  return inside;
}

template <typename Scalar>
bool point_in_triangle(const Vec2T<Scalar>& p, const Vec2T<Scalar>& a, const Vec2T<Scalar>& b,
                       const Vec2T<Scalar>& c) {
  return orient(a, b, p) >= 0 && orient(b, c, p) >= 0 && orient(c, a, p) >= 0;
}

/// Ear-clipping triangulation of a simple counter-clockwise ring.
/// Always emits n - 2 triangles (index triples into `ring`, counter-clockwise).
template <typename Scalar>
std::vector<std::array<int, 3>> ear_clip(const std::vector<Vec2T<Scalar>>& ring) {
  std::vector<std::array<int, 3>> tris;
  const int n = static_cast<int>(ring.size());
  if (n < 3) return tris;
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  tris.reserve(n - 2);

  auto is_ear = [&](int k, bool allow_flat) {
    const int m = static_cast<int>(idx.size());
    const int ip = idx[(k + m - 1) % m], ic = idx[k], in = idx[(k + 1) % m];
    const auto& a = ring[ip];
    const auto& b = ring[ic];
    const auto& c = ring[in];
    const Scalar o = orient(a, b, c);
    if (allow_flat ? o < 0 : o <= 0) return false;
    for (int t = 0; t < m; ++t) {
      const int v = idx[t];
      if (v == ip || v == ic || v == in) continue;
      const auto& p = ring[v];
      if (p == a || p == b || p == c) continue;
      if (o > 0 && point_in_triangle(p, a, b, c)) return false;
    }
    return true;
  };

  while (idx.size() > 3) {
    const int m = static_cast<int>(idx.size());
    int ear = -1;
    for (int k = 0; k < m && ear < 0; ++k)
      if (is_ear(k, false)) ear = k;
    for (int k = 0; k < m && ear < 0; ++k)
      if (is_ear(k, true)) ear = k;
    if (ear < 0) ear = 0;  // numerically hopeless input; keep the count contract
    tris.push_back({idx[(ear + m - 1) % m], idx[ear], idx[(ear + 1) % m]});
    idx.erase(idx.begin() + ear);
  }
  tris.push_back({idx[0], idx[1], idx[2]});
  return tris;
}

template <typename Scalar>
Scalar point_segment_distance(const Vec2T<Scalar>& p, const Vec2T<Scalar>& a, const Vec2T<Scalar>& b) {
  const Vec2T<Scalar> ab = b - a;
  const Scalar len2 = ab.squaredNorm();
  if (len2 == 0) return (p - a).norm();
  const Scalar t = std::clamp((p - a).dot(ab) / len2, Scalar(0), Scalar(1));
  return (p - (a + t * ab)).norm();
}

namespace detail {
template <typename Scalar>
void dp_recurse(const std::vector<Vec2T<Scalar>>& pts, std::size_t first, std::size_t last, Scalar tol,
                std::vector<bool>& keep) {
  if (last <= first + 1) return;
  Scalar best = -1;
  std::size_t best_i = first;
  for (std::size_t i = first + 1; i < last; ++i) {
    const Scalar d = point_segment_distance(pts[i], pts[first], pts[last]);
    if (d > best) {
      best = d;
      best_i = i;
    }
  }
  if (best > tol) {
    keep[best_i] = true;
    dp_recurse(pts, first, best_i, tol, keep);
    dp_recurse(pts, best_i, last, tol, keep);
  }
}
}  // namespace detail

/// Douglas-Peucker simplification of an open polyline (endpoints kept).
template <typename Scalar>
std::vector<Vec2T<Scalar>> douglas_peucker(const std::vector<Vec2T<Scalar>>& line, Scalar tol) {
  if (line.size() < 3) return line;
  std::vector<bool> keep(line.size(), false);
  keep.front() = keep.back() = true;
  detail::dp_recurse(line, 0, line.size() - 1, tol, keep);
  std::vector<Vec2T<Scalar>> out;
  for (std::size_t i = 0; i < line.size(); ++i)
    if (keep[i]) out.push_back(line[i]);
  return out;
}

/// Douglas-Peucker on a closed ring: split at vertex 0 and the vertex farthest from it.
template <typename Scalar>
std::vector<Vec2T<Scalar>> douglas_peucker_ring(const std::vector<Vec2T<Scalar>>& ring, Scalar tol) {
  const std::size_t n = ring.size();
  if (n < 4) return ring;
  std::size_t far = 0;
  Scalar far_d = -1;
  for (std::size_t i = 1; i < n; ++i) {
    const Scalar d = (ring[i] - ring[0]).norm();
    if (d > far_d) {
      far_d = d;
      far = i;
    }
  }
  std::vector<Vec2T<Scalar>> a(ring.begin(), ring.begin() + far + 1);
  std::vector<Vec2T<Scalar>> b(ring.begin() + far, ring.end());
  b.push_back(ring[0]);
  auto sa = douglas_peucker(a, tol);
  auto sb = douglas_peucker(b, tol);
  std::vector<Vec2T<Scalar>> out(sa.begin(), sa.end() - 1);
  out.insert(out.end(), sb.begin(), sb.end() - 1);
  return out;
}

template <typename Scalar>
Rect bounds_of(const std::vector<Vec2T<Scalar>>& pts) {
  Rect r;
  if (pts.empty()) return r;
  r.min = r.max = pts.front().template cast<double>();
  for (const auto& p : pts) {
    r.min = r.min.cwiseMin(p.template cast<double>());
    r.max = r.max.cwiseMax(p.template cast<double>());
  }
  return r;
}

}  // namespace urbanforge::poly
