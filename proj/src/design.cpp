#include "urbanforge/design.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <sstream>

#include "urbanforge/base64.hpp"
#include "urbanforge/error.hpp"
#include "urbanforge/hash.hpp"
#include "urbanforge/image_io.hpp"

namespace urbanforge {

using nlohmann::json;

namespace {

constexpr std::array<AssetCategory, 4> kDesignCategories = {AssetCategory::Buildings, AssetCategory::RoadsPaths,
                                                            AssetCategory::ForestVegetation, AssetCategory::Water};

struct CannedSet {
  std::array<const char*, 5> materials;
  std::array<const char*, 3> details;
  const char* noun;
};

const CannedSet& canned(AssetCategory c) {
  static const CannedSet buildings{{"red brick", "limestone", "glass curtain wall", "weathered concrete", "timber cladding"},
                                   {"regular window grid", "arched ground-floor openings", "horizontal balcony bands"},
                                   "building facade"};
  static const CannedSet roads{{"dark asphalt", "granite cobblestone", "concrete paving", "red clay brick pavers", "gravel"},
                               {"crisp white lane markings", "worn tire tracks", "narrow drainage gutters"},
                               "street surface"};
  static const CannedSet vegetation{{"dense broadleaf canopy", "mown lawn grass", "mixed shrubs", "pine needles", "wildflower meadow"},
                                    {"dappled shadows", "scattered fallen leaves", "soft earthy patches"},
                                    "green space"};
  static const CannedSet water{{"still blue water", "rippled teal water", "reflective dark water", "shallow clear water", "murky green water"},
                               {"gentle ripples", "sky reflections", "soft shoreline foam"},
                               "water surface"};
  static const CannedSet ground{{"packed earth", "light grey paving", "dry grass", "sandstone slabs", "concrete"},
                                {"subtle cracks", "faint tire marks", "patchy weathering"},
                                "ground plane"};
  switch (c) {
    case AssetCategory::Buildings: return buildings;
    case AssetCategory::RoadsPaths: return roads;
    case AssetCategory::ForestVegetation: return vegetation;
    case AssetCategory::Water: return water;
    case AssetCategory::Ground: return ground;
  }
  return buildings;
}

std::string mock_description(std::string_view instruction, const AssetRef& asset) {
  const CannedSet& set = canned(asset.category);
  const std::uint64_t h = fnv1a(asset.id, fnv1a(instruction));
  const char* material = set.materials[h % set.materials.size()];
  const char* detail = set.details[(h >> 16) % set.details.size()];
  return std::string(material) + " " + set.noun + " with " + detail + ", matching " + std::string(instruction);
}

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

// Trimmed non-empty lines after `header`; throws `err` when the header is missing.
std::vector<std::string> body_lines(std::string_view text, std::string_view header, ErrorCode err) {
  const auto pos = text.find(header);
  if (pos == std::string_view::npos) throw Error(err, "response lacks the '" + std::string(header) + "' header");
  std::vector<std::string> lines;
  std::istringstream in{std::string(text.substr(pos + header.size()))};
  for (std::string line; std::getline(in, line);) {
    std::string t = trim(line);
    if (!t.empty()) lines.push_back(std::move(t));
  }
  return lines;
}

std::string image_data_url(const RgbImage& img) { return "data:image/png;base64," + base64_encode(encode_png(img)); }

std::string chat(const DesignerConfig& cfg, ErrorCode unavailable, const std::string& system, const std::string& user,
                 std::span<const RgbImage* const> images) {
  const HttpClient client(cfg.endpoint, unavailable);
  json content = json::array();
  content.push_back({{"type", "text"}, {"text", user}});
  for (const RgbImage* img : images)
    content.push_back({{"type", "image_url"}, {"image_url", {{"url", image_data_url(*img)}}}});
  const json body = {{"model", cfg.model},
                     {"temperature", cfg.temperature},
                     {"messages", json::array({{{"role", "system"}, {"content", system}},
                                               {{"role", "user"}, {"content", content}}})}};
  const std::string reply = client.post_json(body.dump());
  try {
    const json doc = json::parse(reply);
    const json& msg = doc.at("choices").at(0).at("message").at("content");
    if (msg.is_string()) return msg.get<std::string>();
    std::string joined;
    for (const auto& part : msg) {
      if (part.value("type", "") == "text") joined += part.at("text").get<std::string>() + "\n";
    }
    return joined;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedDesign, std::string("chat response is not a completion document: ") + e.what());
  }
}

constexpr const char* kDesignerRole =
    "You are an urban designer. Given a scene instruction and an inventory of urban assets, "
    "describe the visual appearance and materials of every asset so that a texture generator can paint it.";
constexpr const char* kCriticRole =
    "You are an urban scene reviewer. Compare each rendered asset with its design description and "
    "flag assets whose texture does not match, proposing a refined description.";

}  // namespace

std::vector<AssetRef> asset_refs(const ScenePlan& plan) {
  std::vector<AssetRef> refs;
  refs.reserve(plan.assets.size());
  for (const auto& a : plan.assets) refs.push_back({a.id, a.category});
  return refs;
}

std::vector<std::string> CritiqueReport::flagged() const {
  std::vector<std::string> ids;
  for (const auto& [id, v] : verdicts) {
    if (v.refine) ids.push_back(id);
  }
  return ids;
}

std::string render_design_prompt(std::string_view instruction, std::span<const AssetRef> assets) {
  if (assets.empty()) throw Error(ErrorCode::EmptyScene, "no assets to design");
  std::ostringstream out;
  out << kDesignerRole << "\n\n";
  out << "Scene instruction:\n" << instruction << "\n\n";
  out << "Asset inventory:\n";
  for (AssetCategory c : kDesignCategories) {
    std::vector<const AssetRef*> group;
    for (const auto& a : assets) {
      if (a.category == c) group.push_back(&a);
    }
    if (group.empty()) continue;
    out << "[" << category_name(c) << "]\n";
    for (const AssetRef* a : group) out << "- " << a->id << "\n";
  }
  out << "\nResponse format:\n"
      << "Start with the line \"" << kDesignHeader << "\", then write exactly one line per asset id "
      << "in the form \"<id>: <description>\" covering appearance and materials. "
      << "Optionally finish with a line \"PALETTE: <notes>\" describing the shared color palette.\n";
  return out.str();
}

DesignBrief parse_design_response(std::string_view text, std::span<const AssetRef> assets) {
  DesignBrief brief;
  std::map<std::string, std::string> found;
  for (const auto& line : body_lines(text, kDesignHeader, ErrorCode::MalformedDesign)) {
    if (line.starts_with("PALETTE:")) {
      brief.palette_notes = trim(std::string_view(line).substr(8));
      continue;
    }
    const auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    std::string id = trim(std::string_view(line).substr(0, colon));
    if (id.starts_with("- ")) id = trim(std::string_view(id).substr(2));
    found.emplace(std::move(id), trim(std::string_view(line).substr(colon + 1)));
  }
  for (const auto& a : assets) {
    const auto it = found.find(a.id);
    if (it == found.end() || it->second.empty())
      throw Error(ErrorCode::MalformedDesign, "design response has no description for asset '" + a.id + "'");
    brief.descriptions[a.id] = it->second;
  }
  return brief;
}

DesignBrief design_scene(const ScenePrompt& prompt, std::span<const AssetRef> assets, const DesignerConfig& cfg) {
  if (prompt.instruction.empty()) throw Error(ErrorCode::Config, "instruction must be non-empty");
  const std::string text = render_design_prompt(prompt.instruction, assets);
  if (cfg.mock || !cfg.endpoint.configured()) {
    DesignBrief brief;
    for (const auto& a : assets) brief.descriptions[a.id] = mock_description(prompt.instruction, a);
    brief.palette_notes = "harmonized palette for " + prompt.instruction;
    return brief;
  }
  std::vector<const RgbImage*> images;
  if (prompt.reference) images.push_back(&*prompt.reference);
  return parse_design_response(chat(cfg, ErrorCode::DesignerUnavailable, kDesignerRole, text, images), assets);
}

DesignBrief design_scene(const ScenePrompt& prompt, const ScenePlan& plan, const DesignerConfig& cfg) {
  const auto refs = asset_refs(plan);
  return design_scene(prompt, refs, cfg);
}

std::string ground_description(std::string_view instruction) {
  return mock_description(instruction, {"ground", AssetCategory::Ground});
}

std::string render_critique_prompt(std::span<const Snapshot> snapshots, const DesignBrief& brief, bool with_overview) {
  std::ostringstream out;
  out << kCriticRole << "\n\nAssets (image k shows the asset listed k-th):\n";
  for (std::size_t k = 0; k < snapshots.size(); ++k) {
    const auto it = brief.descriptions.find(snapshots[k].asset_id);
    out << k + 1 << ". " << snapshots[k].asset_id << " | coverage " << snapshots[k].coverage << " | "
        << (it == brief.descriptions.end() ? "" : it->second) << "\n";
  }
  if (with_overview) out << "The final image is an overview of the assembled scene.\n";
  out << "\nResponse format:\nStart with the line \"" << kCritiqueHeader << "\", then one line per asset id: "
      << "\"<id>: ACCEPT\" or \"<id>: REFINE: <refined description>\". End with \"SUMMARY: <text>\".\n";
  return out.str();
}

CritiqueReport parse_critique_response(std::string_view text, std::span<const Snapshot> snapshots) {
  CritiqueReport report;
  std::map<std::string, AssetVerdict> found;
  for (const auto& line : body_lines(text, kCritiqueHeader, ErrorCode::MalformedDesign)) {
    if (line.starts_with("SUMMARY:")) {
      report.summary = trim(std::string_view(line).substr(8));
      continue;
    }
    const auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    const std::string id = trim(std::string_view(line).substr(0, colon));
    const std::string rest = trim(std::string_view(line).substr(colon + 1));
    AssetVerdict v;
    if (rest == "ACCEPT") {
      v.refine = false;
    } else if (rest.starts_with("REFINE:")) {
      v.refine = true;
      v.new_prompt = trim(std::string_view(rest).substr(7));
      if (v.new_prompt.empty())
        throw Error(ErrorCode::MalformedDesign, "refine verdict for '" + id + "' has an empty prompt");
    } else {
      throw Error(ErrorCode::MalformedDesign, "unknown verdict token for '" + id + "': " + rest);
    }
    found[id] = std::move(v);
  }
  for (const auto& s : snapshots) {
    const auto it = found.find(s.asset_id);
    if (it == found.end()) throw Error(ErrorCode::MalformedDesign, "critique has no verdict for asset '" + s.asset_id + "'");
    report.verdicts[s.asset_id] = it->second;
  }
  return report;
}

CritiqueReport critique_scene(std::span<const Snapshot> snapshots, const DesignBrief& brief, const DesignerConfig& cfg,
                              const RgbImage* overview) {
  if (cfg.mock || !cfg.endpoint.configured()) {
    CritiqueReport report;
    int flagged = 0;
    for (const auto& s : snapshots) {
      AssetVerdict v;
      if (s.coverage < cfg.mock_coverage_threshold || cfg.mock_force_refine.contains(s.asset_id)) {
        const auto it = brief.descriptions.find(s.asset_id);
        v.refine = true;
        v.new_prompt = (it == brief.descriptions.end() ? s.asset_id : it->second) + std::string(kRefineSuffix);
        ++flagged;
      }
      report.verdicts[s.asset_id] = v;
    }
    report.summary = std::to_string(flagged) + " of " + std::to_string(snapshots.size()) + " assets flagged";
    return report;
  }
  std::vector<const RgbImage*> images;
  for (const auto& s : snapshots) images.push_back(&s.image);
  if (overview) images.push_back(overview);
  return parse_critique_response(chat(cfg, ErrorCode::CriticUnavailable, kCriticRole,
                                      render_critique_prompt(snapshots, brief, overview != nullptr), images),
                                 snapshots);
}

std::vector<double> score_snapshots(std::span<const RgbImage> images, const DesignerConfig& cfg) {
  if (cfg.mock || !cfg.endpoint.configured()) return std::vector<double>(images.size(), cfg.mock_score);
  std::ostringstream prompt;
  prompt << "Rate each of the " << images.size()
         << " attached urban scene images from 1 to 10 for texture sophistication and geometric completeness.\n"
         << "Start with the line \"" << kScoreHeader << "\", then one line per image: \"<k>: <score>\" for k = 1.."
         << images.size() << ".\n";
  std::vector<const RgbImage*> ptrs;
  for (const auto& img : images) ptrs.push_back(&img);
  const std::string reply = chat(cfg, ErrorCode::CriticUnavailable, kCriticRole, prompt.str(), ptrs);
  std::map<std::size_t, double> scores;
  for (const auto& line : body_lines(reply, kScoreHeader, ErrorCode::MalformedResponse)) {
    const auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    try {
      scores[std::stoul(line.substr(0, colon))] = std::stod(line.substr(colon + 1));
    } catch (const std::exception&) {
      throw Error(ErrorCode::MalformedResponse, "unparseable score line: " + line);
    }
  }
  std::vector<double> out;
  for (std::size_t k = 1; k <= images.size(); ++k) {
    const auto it = scores.find(k);
    if (it == scores.end()) throw Error(ErrorCode::MalformedResponse, "no score for image " + std::to_string(k));
    out.push_back(it->second);
  }
  return out;
}

}  // namespace urbanforge
