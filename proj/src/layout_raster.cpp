#include <algorithm>
#include <array>
#include <map>
#include <queue>

#include "urbanforge/error.hpp"
#include "urbanforge/layout.hpp"
#include "urbanforge/polygon.hpp"

namespace urbanforge {
namespace {

// Lattice corner in a y-up cell frame: cell (c, k) spans [c, c+1] x [k, k+1].
using Corner = std::array<int, 2>;

struct BoundaryEdge {
  Corner from;
  Corner to;
  bool used = false;
};

// Marching squares over the 2x2 cell neighbourhood of every lattice corner, with contour
// vertices placed on cell corners so traced polygons cover whole cells. Each boundary
// edge is oriented with the region on its left; at saddle corners the walk turns left,
// which keeps diagonal-only neighbours apart (4-connectivity).
std::vector<std::vector<Corner>> trace_loops(const std::vector<std::uint8_t>& inside, int w, int h) {
  auto in = [&](int c, int k) { return c >= 0 && k >= 0 && c < w && k < h && inside[k * w + c]; };
  std::vector<BoundaryEdge> edges;
  for (int k = 0; k < h; ++k) {
    for (int c = 0; c < w; ++c) {
      if (!in(c, k)) continue;
      if (!in(c, k - 1)) edges.push_back({{c, k}, {c + 1, k}});
      if (!in(c + 1, k)) edges.push_back({{c + 1, k}, {c + 1, k + 1}});
      if (!in(c, k + 1)) edges.push_back({{c + 1, k + 1}, {c, k + 1}});
      if (!in(c - 1, k)) edges.push_back({{c, k + 1}, {c, k}});
    }
  }
  std::map<Corner, std::vector<std::size_t>> outgoing;
  for (std::size_t i = 0; i < edges.size(); ++i) outgoing[edges[i].from].push_back(i);

  std::vector<std::vector<Corner>> loops;
  for (std::size_t seed = 0; seed < edges.size(); ++seed) {
    if (edges[seed].used) continue;
    std::vector<Corner> loop;
    std::size_t cur = seed;
    while (!edges[cur].used) {
      edges[cur].used = true;
      loop.push_back(edges[cur].from);
      const Corner d_in{edges[cur].to[0] - edges[cur].from[0], edges[cur].to[1] - edges[cur].from[1]};
      std::size_t next = edges.size();
      for (std::size_t cand : outgoing[edges[cur].to]) {
        const Corner d_out{edges[cand].to[0] - edges[cand].from[0], edges[cand].to[1] - edges[cand].from[1]};
        const int turn = d_in[0] * d_out[1] - d_in[1] * d_out[0];
        if (next == edges.size() || turn > 0) next = cand;
      }
      if (next == edges.size() || next == seed) break;
      cur = next;
    }
    loops.push_back(std::move(loop));
  }
  return loops;
}

}  // namespace

GeoLayout parse_raster_layout(const RasterLayout& raster, const ClassMap& class_map) {
  const int w = raster.width;
  const int h = raster.height;
  const std::size_t n = static_cast<std::size_t>(std::max(w, 0)) * std::max(h, 0);
  if (w <= 0 || h <= 0 || raster.semantic.size() != n || raster.heights.size() != n)
    throw Error(ErrorCode::Shape, "semantic and height grids must both be " + std::to_string(w) + "x" +
                                      std::to_string(h));
  if (!(raster.cell_size_m > 0)) throw Error(ErrorCode::Shape, "cell_size_m must be positive");
  for (double v : raster.heights)
    if (!(v >= 0)) throw Error(ErrorCode::Shape, "height grid contains negative or non-finite values");

  const double s = raster.cell_size_m;
  GeoLayout layout;
  layout.bounds.min = {0.0, 0.0};
  layout.bounds.max = {w * s, h * s};

  // Grid access in the y-up frame: k = h - 1 - row.
  auto cls_at = [&](int c, int k) { return raster.semantic[static_cast<std::size_t>(h - 1 - k) * w + c]; };
  auto height_at = [&](int c, int k) { return raster.heights[static_cast<std::size_t>(h - 1 - k) * w + c]; };

  auto category_of = [&](int cls) -> std::optional<AssetCategory> {
    if (cls == 0) return std::nullopt;
    auto it = class_map.find(cls);
    if (it == class_map.end()) throw Error(ErrorCode::Config, "class id " + std::to_string(cls) + " missing from class map");
    return it->second;
  };

  std::vector<int> label(n, -1);
  int component = 0;
  for (int k = 0; k < h; ++k) {
    for (int c = 0; c < w; ++c) {
      const std::size_t start = static_cast<std::size_t>(k) * w + c;
      if (label[start] >= 0) continue;
      const int cls = cls_at(c, k);
      const auto cat = category_of(cls);
      if (!cat) continue;

      std::vector<std::uint8_t> mask(n, 0);
      std::queue<std::array<int, 2>> frontier;
      frontier.push({c, k});
      label[start] = component;
      double height_sum = 0;
      std::size_t count = 0;
      while (!frontier.empty()) {
        auto [cc, kk] = frontier.front();
        frontier.pop();
        mask[static_cast<std::size_t>(kk) * w + cc] = 1;
        height_sum += height_at(cc, kk);
        ++count;
        constexpr int dc[] = {1, -1, 0, 0};
        constexpr int dk[] = {0, 0, 1, -1};
        for (int d = 0; d < 4; ++d) {
          const int nc = cc + dc[d], nk = kk + dk[d];
          if (nc < 0 || nk < 0 || nc >= w || nk >= h) continue;
          const std::size_t ni = static_cast<std::size_t>(nk) * w + nc;
          if (label[ni] >= 0 || cls_at(nc, nk) != cls) continue;
          label[ni] = component;
          frontier.push({nc, nk});
        }
      }

      const auto loops = trace_loops(mask, w, h);
      std::vector<Ring> rings;
      for (const auto& loop : loops) {
        Ring ring;
        ring.reserve(loop.size());
        for (const auto& v : loop) ring.emplace_back(v[0] * s, v[1] * s);
        rings.push_back(std::move(ring));
      }
      auto outer = std::max_element(rings.begin(), rings.end(), [](const Ring& a, const Ring& b) {
        return poly::signed_area(a) < poly::signed_area(b);
      });

      Ring footprint = poly::douglas_peucker_ring(*outer, 0.5 * s);
      if (footprint.size() < 3 || !poly::is_simple(footprint))
        footprint = poly::douglas_peucker_ring(*outer, 1e-9 * s);
      footprint = poly::normalize_ring(footprint);

      LayoutElement e;
      e.id = "region/" + std::to_string(component);
      e.category = *cat;
      e.footprint = std::move(footprint);
      e.tags["class"] = std::to_string(cls);
      for (auto it = rings.begin(); it != rings.end(); ++it) {
        if (it != outer && poly::signed_area(*it) < 0) e.holes.push_back(poly::normalize_ring(*it));
      }
      if (*cat == AssetCategory::Buildings) {
        const double mean = height_sum / static_cast<double>(count);
        e.height_m = mean > 0 ? mean : kDefaultBuildingHeightM;
      }
      if (*cat == AssetCategory::RoadsPaths) {
        // Raster roads are regions, not centerlines: meshed as flat areas.
        e.tags["area"] = "yes";
      }
      layout.elements.push_back(std::move(e));
      ++component;
    }
  }
  return layout;
}

}  // namespace urbanforge
