#include <expat.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <numbers>
#include <unordered_map>

#include "urbanforge/error.hpp"
#include "urbanforge/layout.hpp"
#include "urbanforge/polygon.hpp"

namespace urbanforge {

std::optional<AssetCategory> categorize(const TagMap& tags) {
  auto has = [&](const char* key) {
    auto it = tags.find(key);
    return it != tags.end() && it->second != "no";
  };
  auto is = [&](const char* key, const char* value) {
    auto it = tags.find(key);
    return it != tags.end() && it->second == value;
  };
  if (has("building") || has("building:part")) return AssetCategory::Buildings;
  if (has("highway")) return AssetCategory::RoadsPaths;
  if (is("natural", "wood") || is("landuse", "forest") || is("leisure", "park") || is("landuse", "grass"))
    return AssetCategory::ForestVegetation;
  if (is("natural", "water") || has("waterway")) return AssetCategory::Water;
  return std::nullopt;
}

Vec2 project_to_local(double lat, double lon, const GeoPoint& origin) {
  constexpr double deg = std::numbers::pi / 180.0;
  const double x = kEarthRadiusM * (lon - origin.lon) * std::cos(origin.lat * deg) * deg;
  const double y = kEarthRadiusM * (lat - origin.lat) * deg;
  return {x, y};
}

std::optional<double> parse_length_tag(std::string_view value) {
  std::size_t i = 0;
  while (i < value.size() && value[i] == ' ') ++i;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(value.data() + i, value.data() + value.size(), v);
  if (ec != std::errc() || !std::isfinite(v)) return std::nullopt;
  std::string_view unit(ptr, value.data() + value.size() - ptr);
  while (!unit.empty() && unit.front() == ' ') unit.remove_prefix(1);
  if (unit.empty() || unit == "m") return v;
  if (unit == "'" || unit == "ft") return v * 0.3048;
  return std::nullopt;
}

namespace {

struct OsmWay {
  std::int64_t id = 0;
  std::vector<std::int64_t> refs;
  TagMap tags;
  long line = 0;
};

struct OsmMember {
  std::string type;
  std::int64_t ref = 0;
  std::string role;
};

struct OsmRelation {
  std::int64_t id = 0;
  std::vector<OsmMember> members;
  TagMap tags;
};

// Document-order handle: index into ways or relations.
struct Entity {
  bool is_way;
  std::size_t index;
};

struct OsmDocument {
  std::unordered_map<std::int64_t, GeoPoint> nodes;
  std::vector<OsmWay> ways;
  std::vector<OsmRelation> relations;
  std::vector<Entity> order;
  std::optional<std::pair<GeoPoint, GeoPoint>> declared_bounds;
};

class OsmSaxParser {
 public:
  explicit OsmSaxParser(OsmDocument& doc) : doc_(doc), parser_(XML_ParserCreate(nullptr)) {
    XML_SetUserData(parser_, this);
    XML_SetElementHandler(parser_, &OsmSaxParser::on_start, &OsmSaxParser::on_end);
  }
  ~OsmSaxParser() { XML_ParserFree(parser_); }
  OsmSaxParser(const OsmSaxParser&) = delete;
  OsmSaxParser& operator=(const OsmSaxParser&) = delete;

  void parse(std::string_view xml) {
    if (XML_Parse(parser_, xml.data(), static_cast<int>(xml.size()), XML_TRUE) == XML_STATUS_ERROR) {
      if (!pending_error_.empty()) throw Error(ErrorCode::Parse, pending_error_);
      throw Error(ErrorCode::Parse, "line " + std::to_string(XML_GetCurrentLineNumber(parser_)) + ": " +
                                        XML_ErrorString(XML_GetErrorCode(parser_)));
    }
  }

 private:
  enum class Scope { None, Node, Way, Relation };

  static const char* attr(const XML_Char** atts, const char* name) {
    for (int i = 0; atts[i]; i += 2)
      if (std::strcmp(atts[i], name) == 0) return atts[i + 1];
    return nullptr;
  }

  template <typename T>
  T number_attr(const XML_Char** atts, const char* name) {
    const char* text = attr(atts, name);
    T value{};
    if (!text) fail(std::string("missing attribute '") + name + "'");
    auto [ptr, ec] = std::from_chars(text, text + std::strlen(text), value);
    if (ec != std::errc()) fail(std::string("bad numeric attribute '") + name + "'");
    return value;
  }

  void fail(const std::string& msg) {
    if (pending_error_.empty())
      pending_error_ = "line " + std::to_string(XML_GetCurrentLineNumber(parser_)) + ": " + msg;
    XML_StopParser(parser_, XML_FALSE);
  }

  static void on_start(void* user, const XML_Char* name, const XML_Char** atts) {
    static_cast<OsmSaxParser*>(user)->start(name, atts);
  }
  static void on_end(void* user, const XML_Char* name) { static_cast<OsmSaxParser*>(user)->end(name); }

  void start(const char* name, const XML_Char** atts) {
    if (!pending_error_.empty()) return;
    if (std::strcmp(name, "node") == 0) {
      const auto id = number_attr<std::int64_t>(atts, "id");
      GeoPoint p{number_attr<double>(atts, "lat"), number_attr<double>(atts, "lon")};
      if (std::abs(p.lat) > 90.0 || std::abs(p.lon) > 180.0) fail("node " + std::to_string(id) + " out of range");
      doc_.nodes[id] = p;
      scope_ = Scope::Node;
    } else if (std::strcmp(name, "way") == 0) {
      OsmWay w;
      w.id = number_attr<std::int64_t>(atts, "id");
      w.line = XML_GetCurrentLineNumber(parser_);
      doc_.order.push_back({true, doc_.ways.size()});
      doc_.ways.push_back(std::move(w));
      scope_ = Scope::Way;
    } else if (std::strcmp(name, "nd") == 0 && scope_ == Scope::Way) {
      doc_.ways.back().refs.push_back(number_attr<std::int64_t>(atts, "ref"));
    } else if (std::strcmp(name, "relation") == 0) {
      OsmRelation r;
      r.id = number_attr<std::int64_t>(atts, "id");
      doc_.order.push_back({false, doc_.relations.size()});
      doc_.relations.push_back(std::move(r));
      scope_ = Scope::Relation;
    } else if (std::strcmp(name, "member") == 0 && scope_ == Scope::Relation) {
      OsmMember m;
      const char* type = attr(atts, "type");
      const char* role = attr(atts, "role");
      m.type = type ? type : "";
      m.role = role ? role : "";
      m.ref = number_attr<std::int64_t>(atts, "ref");
      doc_.relations.back().members.push_back(std::move(m));
    } else if (std::strcmp(name, "tag") == 0) {
      const char* k = attr(atts, "k");
      const char* v = attr(atts, "v");
      if (!k || !v) return fail("tag without k/v");
      if (scope_ == Scope::Way) doc_.ways.back().tags[k] = v;
      if (scope_ == Scope::Relation) doc_.relations.back().tags[k] = v;
    } else if (std::strcmp(name, "bounds") == 0) {
      GeoPoint lo{number_attr<double>(atts, "minlat"), number_attr<double>(atts, "minlon")};
      GeoPoint hi{number_attr<double>(atts, "maxlat"), number_attr<double>(atts, "maxlon")};
      doc_.declared_bounds = std::make_pair(lo, hi);
    }
  }

  void end(const char* name) {
    if (std::strcmp(name, "node") == 0 || std::strcmp(name, "way") == 0 || std::strcmp(name, "relation") == 0)
      scope_ = Scope::None;
  }

  OsmDocument& doc_;
  XML_Parser parser_;
  Scope scope_ = Scope::None;
  std::string pending_error_;
};

double building_height(const TagMap& tags) {
  if (auto it = tags.find("height"); it != tags.end()) {
    if (auto h = parse_length_tag(it->second); h && *h > 0) return *h;
  }
  if (auto it = tags.find("building:levels"); it != tags.end()) {
    if (auto lv = parse_length_tag(it->second); lv && *lv > 0) return *lv * kMetersPerLevel;
  }
  return kDefaultBuildingHeightM;
}

double road_width(const TagMap& tags) {
  if (auto it = tags.find("width"); it != tags.end()) {
    if (auto w = parse_length_tag(it->second); w && *w > 0) return *w;
  }
  return kDefaultRoadWidthM;
}

// Joins way node lists end-to-end into closed rings. Open leftovers are dropped.
std::vector<std::vector<std::int64_t>> assemble_rings(std::vector<std::vector<std::int64_t>> parts) {
  std::vector<std::vector<std::int64_t>> rings;
  while (!parts.empty()) {
    std::vector<std::int64_t> ring = std::move(parts.front());
    parts.erase(parts.begin());
    bool progress = true;
    while (ring.size() >= 2 && ring.front() != ring.back() && progress) {
      progress = false;
      for (std::size_t i = 0; i < parts.size(); ++i) {
        auto& p = parts[i];
        if (p.empty()) continue;
        if (p.front() == ring.back()) {
          ring.insert(ring.end(), p.begin() + 1, p.end());
        } else if (p.back() == ring.back()) {
          ring.insert(ring.end(), p.rbegin() + 1, p.rend());
        } else {
          continue;
        }
        parts.erase(parts.begin() + static_cast<std::ptrdiff_t>(i));
        progress = true;
        break;
      }
    }
    if (ring.size() >= 4 && ring.front() == ring.back()) rings.push_back(std::move(ring));
  }
  return rings;
}

}  // namespace

GeoLayout parse_osm(std::string_view xml) {
  OsmDocument doc;
  {
    OsmSaxParser parser(doc);
    parser.parse(xml);
  }

  for (const auto& w : doc.ways) {
    for (auto ref : w.refs) {
      if (!doc.nodes.count(ref))
        throw Error(ErrorCode::Parse, "way " + std::to_string(w.id) + " (line " + std::to_string(w.line) +
                                          ") references missing node " + std::to_string(ref));
    }
  }

  GeoLayout layout;
  if (doc.declared_bounds) {
    const auto& [lo, hi] = *doc.declared_bounds;
    layout.origin = {(lo.lat + hi.lat) / 2, (lo.lon + hi.lon) / 2};
  } else if (!doc.nodes.empty()) {
    GeoPoint lo{90, 180}, hi{-90, -180};
    for (const auto& [id, p] : doc.nodes) {
      lo = {std::min(lo.lat, p.lat), std::min(lo.lon, p.lon)};
      hi = {std::max(hi.lat, p.lat), std::max(hi.lon, p.lon)};
    }
    layout.origin = {(lo.lat + hi.lat) / 2, (lo.lon + hi.lon) / 2};
  }

  auto to_local = [&](const std::vector<std::int64_t>& refs) {
    std::vector<Vec2> pts;
    pts.reserve(refs.size());
    for (auto r : refs) {
      const GeoPoint& g = doc.nodes.at(r);
      pts.push_back(project_to_local(g.lat, g.lon, layout.origin));
    }
    return pts;
  };
  auto warn = [&](std::string msg) {
    ++layout.warning_count;
    layout.warnings.push_back(std::move(msg));
  };

  std::unordered_map<std::int64_t, const OsmWay*> way_by_id;
  for (const auto& w : doc.ways) way_by_id[w.id] = &w;

  auto make_area = [&](std::string id, AssetCategory cat, Ring ring, const TagMap& tags) -> std::optional<LayoutElement> {
    ring = poly::normalize_ring(ring);
    if (ring.size() < 3 || !poly::is_simple(ring)) {
      warn(id + ": degenerate or self-intersecting polygon skipped");
      return std::nullopt;
    }
    LayoutElement e;
    e.id = std::move(id);
    e.category = cat;
    e.footprint = std::move(ring);
    e.tags = tags;
    if (cat == AssetCategory::Buildings) e.height_m = building_height(tags);
    return e;
  };

  for (const Entity& ent : doc.order) {
    if (ent.is_way) {
      const OsmWay& w = doc.ways[ent.index];
      const std::string id = "way/" + std::to_string(w.id);
      const auto cat = categorize(w.tags);
      if (!cat) {
        if (!w.tags.empty()) warn(id + ": unrecognized tags");
        continue;
      }
      auto pts = to_local(w.refs);
      const bool closed = w.refs.size() >= 2 && w.refs.front() == w.refs.back();
      if (*cat == AssetCategory::RoadsPaths) {
        auto line = poly::dedupe(pts, false);
        if (line.size() < 2) {
          warn(id + ": road with fewer than 2 distinct vertices skipped");
          continue;
        }
        LayoutElement e;
        e.id = id;
        e.category = *cat;
        e.footprint = std::move(line);
        e.width_m = road_width(w.tags);
        e.tags = w.tags;
        layout.elements.push_back(std::move(e));
        continue;
      }
      if (!closed && *cat != AssetCategory::Buildings) {
        warn(id + ": unclosed area way skipped");
        continue;
      }
      // Unclosed building ways are closed implicitly: the ring is stored open.
      if (auto e = make_area(id, *cat, std::move(pts), w.tags)) layout.elements.push_back(std::move(*e));
    } else {
      const OsmRelation& r = doc.relations[ent.index];
      const std::string id = "relation/" + std::to_string(r.id);
      auto type = r.tags.find("type");
      const auto cat = categorize(r.tags);
      if (type == r.tags.end() || type->second != "multipolygon") continue;
      if (!cat) {
        warn(id + ": unrecognized tags");
        continue;
      }
      std::vector<std::vector<std::int64_t>> outer_parts, inner_parts;
      for (const auto& m : r.members) {
        if (m.type != "way") continue;
        auto it = way_by_id.find(m.ref);
        if (it == way_by_id.end()) {
          warn(id + ": member way " + std::to_string(m.ref) + " not in document");
          continue;
        }
        (m.role == "inner" ? inner_parts : outer_parts).push_back(it->second->refs);
      }
      auto outers = assemble_rings(outer_parts);
      if (outers.empty()) {
        warn(id + ": no closed outer ring");
        continue;
      }
      std::size_t best = 0;
      double best_area = -1;
      for (std::size_t i = 0; i < outers.size(); ++i) {
        const double a = std::abs(poly::signed_area(to_local(outers[i])));
        if (a > best_area) {
          best_area = a;
          best = i;
        }
      }
      auto e = make_area(id, *cat, to_local(outers[best]), r.tags);
      if (!e) continue;
      if (*cat == AssetCategory::RoadsPaths) {
        // Area highways are treated as closed polylines.
        e->footprint.push_back(e->footprint.front());
        e->width_m = road_width(r.tags);
      }
      for (auto& inner : assemble_rings(inner_parts)) e->holes.push_back(poly::normalize_ring(to_local(inner)));
      layout.elements.push_back(std::move(*e));
    }
  }

  // Bounds: declared export box united with all emitted coordinates.
  std::vector<Vec2> extent;
  if (doc.declared_bounds) {
    const auto& [lo, hi] = *doc.declared_bounds;
    extent.push_back(project_to_local(lo.lat, lo.lon, layout.origin));
    extent.push_back(project_to_local(hi.lat, hi.lon, layout.origin));
  }
  for (const auto& e : layout.elements) extent.insert(extent.end(), e.footprint.begin(), e.footprint.end());
  layout.bounds = poly::bounds_of(extent);
  return layout;
}

}  // namespace urbanforge
