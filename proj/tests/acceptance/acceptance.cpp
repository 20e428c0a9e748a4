// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the number of failures.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include "urbanforge/error.hpp"
#include "urbanforge/hash.hpp"
#include "urbanforge/image_io.hpp"
#include "urbanforge/pipeline.hpp"

#include "support/fixtures.hpp"
#include "support/layout_checks.hpp"
#include "support/metric_checks.hpp"
#include "support/nav_checks.hpp"
#include "support/oracles.hpp"
#include "support/texture_checks.hpp"

using namespace urbanforge;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Round trip.
constexpr int kRoundTripViews = 4;
constexpr int kRoundTripAtlas = 256;
constexpr double kMinRecovered = 0.85;
constexpr double kMaxColorError = 2.0;  // in 8-bit levels, i.e. 2/255
constexpr double kRoundTripSeconds = 10.0;
// Partition and occlusion.
constexpr int kPartitionSeeds = 100;
constexpr int kOcclusionSeeds = 50;
constexpr double kOcclusionMarginPx = 1.5;
// Metrics.
constexpr double kFidIdentity = 1e-6;
constexpr int kFidSamples = 10000;
constexpr double kFidRelTol = 0.05;
constexpr double kKidIdentity = 1e-6;
constexpr double kKidSymmetryRel = 1e-12;
constexpr double kHiTol = 1e-9;
constexpr int kAffineTrials = 100;
constexpr double kAffineTol = 1e-9;
// RRT.
constexpr int kGridSide = 64;
constexpr int kCorridorSection = 16;  // walled square section, in voxels
constexpr double kObstacleDensity = 0.10;
constexpr int kRrtSeeds = 50;
constexpr double kMinSuccess = 0.95;
constexpr double kQuerySeconds = 1.0;
// Geometry and raster layout.
constexpr double kLateralTol = 1e-6;
constexpr double kMinIoU = 0.9;
// End to end.
constexpr double kPipelineSeconds = 60.0;
constexpr std::uint64_t kPipelineSeed = 3;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void round_trip(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto rt = checks::round_trip(fixture::building_box(10, 14), kRoundTripAtlas, kRoundTripViews);
  const double s = seconds_since(t0);
  o.detail << "recovered " << rt.recovered_fraction << ", after inpaint " << rt.inpainted_fraction
           << ", mean abs error " << rt.mean_abs_error << "/255 over " << rt.compared << " texels, " << s << " s ";
  o.require(rt.recovered_fraction >= kMinRecovered, "recovery");
  o.require(rt.inpainted_fraction == 1.0, "inpaint coverage");
  o.require(rt.compared > 0 && rt.mean_abs_error <= kMaxColorError, "color error");
  o.require(s < kRoundTripSeconds, "runtime");
}

void partition(Outcome& o) {
  std::size_t overlaps = 0, mismatches = 0;
  for (int seed = 0; seed < kPartitionSeeds; ++seed) {
    const auto [ov, mm] = checks::partition_violations(seed);
    overlaps += ov;
    mismatches += mm;
  }
  o.detail << kPartitionSeeds << " seeds, " << overlaps << " overlapping texels, " << mismatches << " union mismatches ";
  o.require(overlaps == 0 && mismatches == 0, "violations");
}

void occlusion(Outcome& o) {
  std::size_t hidden = 0, lower = 0;
  for (int seed = 0; seed < kOcclusionSeeds; ++seed) {
    const auto r = checks::stacked_quad_occlusion(seed, kOcclusionMarginPx);
    hidden += r.hidden_accepted;
    lower += r.accepted_lower;
  }
  o.detail << kOcclusionSeeds << " placements, " << hidden << " hidden texels accepted, " << lower
           << " visible lower-quad texels accepted ";
  o.require(hidden == 0, "hidden texels accepted");
  o.require(lower > 0, "fixture exercised");
}

void metrics(Outcome& o) {
  const std::vector<double> zero(4, 0.0), ones(4, 1.0), mu = {1.0, 2.0, 0.5, 1.0};
  const auto a = checks::gaussian_features(1, 500, zero, {1, 2, 0.5, 1});
  const double fid_aa = fid(a, a);
  o.require(fid_aa <= kFidIdentity, "fid(A,A)");

  const double fid_g = fid(checks::gaussian_features(11, kFidSamples, zero, ones),
                           checks::gaussian_features(12, kFidSamples, mu, ones));
  const double closed = oracle::frechet_diagonal(Eigen::Vector4d::Zero(), Eigen::Vector4d::Ones(),
                                                 Eigen::Vector4d(1.0, 2.0, 0.5, 1.0), Eigen::Vector4d::Ones());
  o.require(std::abs(fid_g - closed) <= kFidRelTol * closed, "Gaussian FID");

  const auto b = checks::gaussian_features(2, 400, {0.5, 0, 0, 0.5}, ones);
  const double ab = kid_raw(a, b), ba = kid_raw(b, a), aa = kid_raw(a, a);
  o.require(std::abs(ab - ba) <= kKidSymmetryRel * std::max(1.0, std::abs(ab)), "kid symmetry");
  o.require(aa <= kKidIdentity && kid(a, a) <= kKidIdentity, "kid on identical sets");

  std::mt19937_64 rng(4);
  RgbImage img(24, 24, 3);
  for (auto& v : img.data) v = static_cast<std::uint8_t>(rng() & 0xff);
  const std::vector<RgbImage> same(5, img);
  const double hi = homogeneity_index(same, HistogramExtractor{});
  o.require(std::abs(hi - 1.0) <= kHiTol, "HI of identical images");

  const double dev = checks::depth_affine_deviation(7, kAffineTrials);
  o.require(dev <= kAffineTol, "DE affine invariance");

  o.detail << "fid(A,A) " << fid_aa << ", Gaussian FID " << fid_g << " vs " << closed << ", kid " << ab << "/" << ba
           << ", kid_raw(A,A) " << aa << ", HI " << hi << ", DE deviation " << dev << " over " << kAffineTrials
           << " maps ";
}

void rrt(Outcome& o) {
  int found = 0, unsound = 0, open_found = 0;
  double worst = 0;
  for (int seed = 0; seed < kRrtSeeds; ++seed) {
    for (int tube : {kCorridorSection, 0}) {
      const auto t = checks::corridor_trial(kGridSide, kObstacleDensity, seed, tube);
      (tube ? found : open_found) += t.found;
      unsound += t.found && !t.sound;
      worst = std::max(worst, t.seconds);
    }
  }
  bool deterministic = true;
  for (int seed = 0; seed < 5; ++seed) {
    const OccupancyGrid g = checks::corridor_grid(kGridSide, kObstacleDensity, seed, kCorridorSection);
    RrtParams p;
    p.seed = seed;
    const auto x = search_rrt(g, checks::corridor_start(kGridSide), checks::corridor_goal(kGridSide), p);
    const auto y = search_rrt(g, checks::corridor_start(kGridSide), checks::corridor_goal(kGridSide), p);
    deterministic = deterministic && x.waypoints == y.waypoints && x.found == y.found;
  }
  const double rate = double(found) / kRrtSeeds;
  o.detail << "corridor " << kCorridorSection << "x" << kCorridorSection << " in " << kGridSide << "^3: " << found
           << "/" << kRrtSeeds << " found; open " << kGridSide << "^3 (not gated): " << open_found << "/" << kRrtSeeds
           << " found; " << unsound << " unsound, slowest query " << worst << " s, deterministic "
           << (deterministic ? "yes" : "no") << " ";
  o.require(rate >= kMinSuccess, "success rate");
  o.require(unsound == 0, "collision-free paths");
  o.require(deterministic, "determinism");
  o.require(worst < kQuerySeconds, "runtime");
}

void geometry(Outcome& o) {
  int bad_counts = 0;
  for (int n = 3; n <= 12; ++n) {
    const AssetMesh m = extrude_building(fixture::building(fixture::regular_polygon(n, 5.0), 7.5));
    bad_counts += m.vertices.size() != static_cast<std::size_t>(2 * n) || m.faces.size() != static_cast<std::size_t>(3 * n - 2);
  }
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> h(1.0, 60.0);
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto ring = fixture::random_convex(rng, 3 + trial % 10, 3.0 + trial);
    const double height = h(rng);
    worst = std::max(worst, std::abs(oracle::lateral_area(extrude_building(fixture::building(ring, height))) -
                                     oracle::perimeter(ring) * height));
  }
  const auto bytes = read_file(fixture::path("city4.osm"));
  const ScenePlan plan = assemble_scene_plan(parse_osm(std::string(bytes.begin(), bytes.end())));
  std::map<AssetCategory, int> cats;
  for (const auto& a : plan.assets) ++cats[a.category];
  const bool city = plan.assets.size() == 4 && cats[AssetCategory::Buildings] == 2 &&
                    cats[AssetCategory::RoadsPaths] == 1 && cats[AssetCategory::Water] == 1 &&
                    plan.ground.category == AssetCategory::Ground && !plan.ground.empty();
  o.detail << bad_counts << " n-gon count mismatches, lateral area deviation " << worst << ", fixture "
           << plan.assets.size() << " assets + ground ";
  o.require(bad_counts == 0, "extrusion counts");
  o.require(worst <= kLateralTol, "lateral area");
  o.require(city, "OSM fixture assets");
}

void raster_layout(Outcome& o) {
  const ClassMap classes = {{1, AssetCategory::Buildings}};
  const double sq = checks::worst_block_iou(checks::raster_from(checks::square_block_rows()), 1, classes);
  const double l = checks::worst_block_iou(checks::raster_from(checks::l_block_rows()), 1, classes);
  const double dj = checks::worst_block_iou(checks::raster_from(checks::disjoint_block_rows()), 1, classes);
  o.detail << "IoU square " << sq << ", L " << l << ", disjoint " << dj << " ";
  o.require(std::min({sq, l, dj}) >= kMinIoU, "IoU");
}

RunConfig city5_config(const fs::path& out) {
  json doc = {{"osm", fixture::path("city5.osm").string()},
              {"instruction", "a riverside town with brick houses"},
              {"seed", kPipelineSeed},
              {"output_dir", out.string()}};
  return parse_config(doc, "/");
}

std::map<std::string, std::string> bundle_digest(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file())
      out[fs::relative(e.path(), root).generic_string()] = hex64(fnv1a(std::span<const std::uint8_t>(read_file(e.path()))));
  }
  return out;
}

/// Valid atlas texels left uncovered by the final textures in a work directory.
std::size_t uncovered_texels(const fs::path& textures, std::size_t* assets) {
  std::size_t missing = 0;
  *assets = 0;
  for (const auto& e : fs::directory_iterator(textures)) {
    const std::string name = e.path().filename().string();
    const std::string suffix = ".atlas.json";
    if (name.size() <= suffix.size() || name.compare(name.size() - suffix.size(), suffix.size(), suffix) != 0) continue;
    const std::string stem = name.substr(0, name.size() - suffix.size());
    std::ifstream in(e.path());
    const TexelMap map = build_texel_map(atlas_from_json(json::parse(in)));
    const GrayImage cov = read_gray(textures / (stem + ".cov.pgm"));
    for (std::size_t i = 0; i < map.face.size(); ++i) missing += map.face[i] >= 0 && cov.data.at(i) == 0;
    ++*assets;
  }
  return missing;
}

const fs::path kScratch = fs::temp_directory_path() / "urbanforge_acceptance";

void end_to_end(Outcome& o) {
  fs::remove_all(kScratch / "e2e");
  double worst = 0;
  std::vector<fs::path> outs = {kScratch / "e2e" / "a", kScratch / "e2e" / "b"};
  for (const auto& out : outs) {
    const auto t0 = std::chrono::steady_clock::now();
    const PipelineResult r = run_pipeline(city5_config(out));
    worst = std::max(worst, seconds_since(t0));
    o.require(r.exit_status == 0, "exit status " + std::to_string(r.exit_status) + " " + r.error);
    if (r.exit_status != 0) return;
  }
  const RunConfig cfg = city5_config(outs[0]);
  std::size_t assets = 0;
  const std::size_t missing = uncovered_texels(texture_dir(cfg), &assets);
  const auto da = bundle_digest(outs[0]), db = bundle_digest(outs[1]);
  o.detail << "slowest run " << worst << " s, " << assets << " textured assets, " << missing << " uncovered texels, "
           << da.size() << " bundle files, identical " << (da == db ? "yes" : "no") << " ";
  o.require(worst < kPipelineSeconds, "runtime");
  o.require(assets == 6 && missing == 0, "coverage");
  o.require(!da.empty() && da == db, "byte-identical bundles");
}

void refinement(Outcome& o) {
  fs::remove_all(kScratch / "refine");
  RunConfig base = city5_config(kScratch / "refine" / "base");
  base.max_refine_iters = 1;
  RunConfig forced = city5_config(kScratch / "refine" / "forced");
  forced.max_refine_iters = 1;
  const std::string target = "way/100";
  forced.force_refine = {target};
  const PipelineResult rb = run_pipeline(base);
  const PipelineResult rf = run_pipeline(forced);
  o.require(rb.exit_status == 0 && rf.exit_status == 0, "pipeline runs");
  if (!o.pass) return;

  std::vector<std::string> changed;
  std::size_t textures = 0;
  const auto da = bundle_digest(base.output_dir), df = bundle_digest(forced.output_dir);
  for (const auto& [file, digest] : da) {
    if (file.rfind("assets/", 0) != 0 || file.size() < 4 || file.substr(file.size() - 4) != ".png") continue;
    ++textures;
    const auto it = df.find(file);
    if (it == df.end() || it->second != digest) changed.push_back(file);
  }
  const SceneManifest m = load_bundle(forced.output_dir);
  const std::string expect = "assets/" + asset_file_stem(target) + ".png";
  const int rounds = rf.log.at("refine_rounds").get<int>();
  o.detail << changed.size() << " of " << textures << " texture files changed";
  for (const auto& c : changed) o.detail << " " << c;
  o.detail << ", refine rounds " << rounds << ", flagged rounds " << rf.log.at("refine_flagged").dump() << " ";
  o.require(changed == std::vector<std::string>{expect}, "only the flagged texture changes");
  o.require(rounds <= 1 && m.refine_round <= 1, "terminates within one round");
  o.require(rf.log.at("refine_flagged").size() == 1, "one critique round");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
      {"backprojection round trip", round_trip},
      {"merge partition", partition},
      {"occlusion soundness", occlusion},
      {"metric oracles", metrics},
      {"RRT corridor", rrt},
      {"building geometry", geometry},
      {"raster layout recovery", raster_layout},
      {"end-to-end determinism", end_to_end},
      {"refinement scoping", refinement},
  };
  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      fn(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "[threw: " << e.what() << "] ";
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail.str() << "(" << seconds_since(t0) << " s)"
              << std::endl;
  }
  std::cout << (criteria.size() - failures) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failures;
}
