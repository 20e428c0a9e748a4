#include "urbanforge/generator.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <set>

#include "urbanforge/base64.hpp"
#include "urbanforge/error.hpp"
#include "urbanforge/hash.hpp"
#include "urbanforge/image_io.hpp"

namespace urbanforge {

using nlohmann::json;

namespace {

using Color = std::array<double, 3>;
using Palette = std::array<Color, 6>;

const Palette& category_palette(AssetCategory c) {
  static const Palette buildings{{{178, 102, 82}, {205, 196, 176}, {120, 150, 170}, {150, 148, 142}, {150, 110, 75}, {220, 210, 190}}};
  static const Palette roads{{{70, 70, 74}, {95, 92, 88}, {130, 128, 122}, {150, 90, 70}, {110, 105, 95}, {60, 62, 66}}};
  static const Palette vegetation{{{60, 110, 50}, {85, 140, 60}, {45, 90, 45}, {110, 130, 60}, {70, 120, 80}, {95, 115, 55}}};
  static const Palette water{{{40, 90, 140}, {50, 120, 130}, {30, 60, 90}, {70, 130, 150}, {60, 100, 80}, {45, 80, 120}}};
  static const Palette ground{{{140, 125, 100}, {160, 160, 150}, {150, 140, 95}, {185, 160, 120}, {130, 130, 125}, {120, 110, 90}}};
  switch (c) {
    case AssetCategory::Buildings: return buildings;
    case AssetCategory::RoadsPaths: return roads;
    case AssetCategory::ForestVegetation: return vegetation;
    case AssetCategory::Water: return water;
    case AssetCategory::Ground: return ground;
  }
  return buildings;
}

// Order-insensitive hash of the lowercase alphanumeric words of length >= 3.
std::uint64_t keyword_hash(std::string_view prompt) {
  std::set<std::string> words;
  std::string cur;
  for (char ch : std::string(prompt) + " ") {
    if (std::isalnum(static_cast<unsigned char>(ch))) {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    } else {
      if (cur.size() >= 3) words.insert(cur);
      cur.clear();
    }
  }
  std::uint64_t h = kFnvOffset;
  for (const auto& w : words) h = fnv1a(w + " ", h);
  return h;
}

double lattice(std::uint64_t seed, int octave, std::int64_t x, std::int64_t y) {
  const std::uint64_t h = mix64(seed ^ mix64(static_cast<std::uint64_t>(octave) * 0x9e37u ^
                                             mix64(static_cast<std::uint64_t>(x) ^ (static_cast<std::uint64_t>(y) << 32))));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double value_noise(std::uint64_t seed, int octave, double x, double y) {
  const double fx = std::floor(x), fy = std::floor(y);
  const auto ix = static_cast<std::int64_t>(fx);
  const auto iy = static_cast<std::int64_t>(fy);
  auto smooth = [](double t) { return t * t * (3 - 2 * t); };
  const double tx = smooth(x - fx), ty = smooth(y - fy);
  const double a = lattice(seed, octave, ix, iy), b = lattice(seed, octave, ix + 1, iy);
  const double c = lattice(seed, octave, ix, iy + 1), d = lattice(seed, octave, ix + 1, iy + 1);
  return (a * (1 - tx) + b * tx) * (1 - ty) + (c * (1 - tx) + d * tx) * ty;
}

RgbImage decode_rgb_field(const json& doc, const char* field) {
  try {
    RgbImage img = decode_png(base64_decode(doc.at(field).get<std::string>()));
    if (img.channels != 3) throw Error(ErrorCode::MalformedResponse, std::string(field) + " is not an RGB image");
    return img;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedResponse, std::string("response lacks ") + field + ": " + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Io) throw Error(ErrorCode::MalformedResponse, e.what());
    throw;
  }
}

json post(const EndpointConfig& cfg, const json& body) {
  const HttpClient client(cfg, ErrorCode::GeneratorUnavailable);
  const std::string reply = client.post_json(body.dump());
  try {
    return json::parse(reply);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedResponse, std::string("generator reply is not JSON: ") + e.what());
  }
}

std::string b64png(const RgbImage& img) { return base64_encode(encode_png(img)); }

void warn(std::vector<std::string>* sink, std::string msg) {
  if (sink) sink->push_back(std::move(msg));
}

}  // namespace

GridShape grid_shape(int n) {
  if (n < 1) throw Error(ErrorCode::Shape, "view count must be >= 1");
  const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
  return {cols, (n + cols - 1) / cols};
}

std::vector<RgbImage> crop_patches(const RgbImage& grid, int n) {
  const GridShape g = grid_shape(n);
  if (grid.width % g.cols != 0 || grid.height % g.rows != 0)
    throw Error(ErrorCode::Shape, std::to_string(grid.width) + "x" + std::to_string(grid.height) +
                                      " grid is not divisible into " + std::to_string(g.cols) + "x" +
                                      std::to_string(g.rows) + " tiles");
  const int tw = grid.width / g.cols;
  const int th = grid.height / g.rows;
  if (tw != th) throw Error(ErrorCode::Shape, "grid tiles are " + std::to_string(tw) + "x" + std::to_string(th) + ", not square");
  std::vector<RgbImage> out;
  out.reserve(n);
  for (int k = 0; k < n; ++k) out.push_back(crop(grid, (k % g.cols) * tw, (k / g.cols) * th, tw, th));
  return out;
}

void GenerationRequest::validate() const {
  if (prompt.empty() && !reference) throw Error(ErrorCode::Config, "generation needs a prompt or a reference image");
  if (steps < 1) throw Error(ErrorCode::Config, "steps must be >= 1");
  if (tile_size < 1) throw Error(ErrorCode::Config, "tile_size must be >= 1");
  const GridShape g = grid_shape(n_views);
  if (depth_grid.width != g.cols * tile_size || depth_grid.height != g.rows * tile_size || depth_grid.channels != 1)
    throw Error(ErrorCode::Shape, "depth grid does not match the requested tiling");
}

RgbImage generate_procedural(const GenerationRequest& req) {
  req.validate();
  const Palette& pal = category_palette(req.category);
  const std::uint64_t kh = keyword_hash(req.prompt);
  Color primary = pal[kh % pal.size()];
  Color secondary = pal[(kh >> 20) % pal.size()];
  if (req.reference && !req.reference->empty()) {
    Color mean{};
    for (std::size_t i = 0; i < req.reference->pixel_count(); ++i)
      for (int c = 0; c < 3; ++c) mean[c] += req.reference->data[i * req.reference->channels + std::min(c, req.reference->channels - 1)];
    for (int c = 0; c < 3; ++c) {
      mean[c] /= static_cast<double>(req.reference->pixel_count());
      primary[c] = 0.5 * primary[c] + 0.5 * mean[c];
    }
  }
  const std::uint64_t seed = mix64(req.seed ^ kh);
  const int w = req.depth_grid.width;
  const int h = req.depth_grid.height;
  RgbImage out(w, h, 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double blend = 0.6 * (0.65 * value_noise(seed, 0, x / 48.0, y / 48.0) + 0.35 * value_noise(seed, 1, x / 12.0, y / 12.0));
      const double detail = 0.85 + 0.3 * value_noise(seed, 2, x / 3.0, y / 3.0);
      const double lum = 0.6 + 0.4 * req.depth_grid.at(x, y) / 255.0;
      for (int c = 0; c < 3; ++c) {
        const double v = (primary[c] * (1 - blend) + secondary[c] * blend) * detail * lum;
        out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return out;
}

RgbImage generate_views(const GenerationRequest& req, const GeneratorEndpoint& ep) {
  req.validate();
  if (ep.mode == GeneratorMode::Procedural) return generate_procedural(req);
  if (!ep.generate.configured()) throw Error(ErrorCode::Config, "remote generator mode requires an address");
  const GridShape g = grid_shape(req.n_views);
  json body = {{"prompt", req.prompt},
               {"seed", req.seed},
               {"steps", req.steps},
               {"depth_png", base64_encode(encode_png(req.depth_grid))},
               {"tiles", std::to_string(g.cols) + "x" + std::to_string(g.rows)},
               {"tile_size", req.tile_size}};
  if (req.reference) body["reference_png"] = b64png(*req.reference);
  RgbImage img = decode_rgb_field(post(ep.generate, body), "image_png");
  if (img.width != req.depth_grid.width || img.height != req.depth_grid.height)
    throw Error(ErrorCode::MalformedResponse, "generated image is " + std::to_string(img.width) + "x" +
                                                  std::to_string(img.height) + ", expected " +
                                                  std::to_string(req.depth_grid.width) + "x" +
                                                  std::to_string(req.depth_grid.height));
  return img;
}

Image<std::uint16_t> encode_positions16(const UVPositionMap& pos) {
  Image<std::uint16_t> img(pos.width, pos.height, 3);
  for (std::size_t i = 0; i < pos.valid.size(); ++i) {
    if (!pos.valid[i]) continue;
    for (int c = 0; c < 3; ++c)
      img.data[i * 3 + c] = static_cast<std::uint16_t>(std::lround(std::clamp(pos.positions[i][c], 0.0f, 1.0f) * 65535.0));
  }
  return img;
}

GrayImage coverage_image(const std::vector<std::uint8_t>& coverage, int width, int height) {
  GrayImage img(width, height, 1);
  for (std::size_t i = 0; i < coverage.size(); ++i) img.data[i] = coverage[i] ? 255 : 0;
  return img;
}

double covered_mae(const UVTexture& reference, const RgbImage& candidate) {
  double sum = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < reference.coverage.size(); ++i) {
    if (!reference.coverage[i]) continue;
    for (int c = 0; c < 3; ++c) sum += std::abs(int(reference.rgb.data[i * 3 + c]) - int(candidate.data[i * 3 + c]));
    n += 3;
  }
  return n == 0 ? 0.0 : sum / (255.0 * static_cast<double>(n));
}

UVTexture inpaint_remote(const UVTexture& tex, const UVPositionMap& pos, const std::string& prompt,
                         const GeneratorEndpoint& ep, std::vector<std::string>* warnings) {
  if (!ep.inpaint.configured()) return inpaint_uv(tex, pos);
  try {
    const json body = {{"prompt", prompt},
                       {"texture_png", b64png(tex.rgb)},
                       {"coverage_pgm", base64_encode(encode_pgm(coverage_image(tex.coverage, tex.width(), tex.height())))},
                       {"position_png16", base64_encode(encode_png16(encode_positions16(pos)))}};
    RgbImage img = decode_rgb_field(post(ep.inpaint, body), "texture_png");
    if (img.width != tex.width() || img.height != tex.height())
      throw Error(ErrorCode::MalformedResponse, "inpainted texture has the wrong size");
    const double mae = covered_mae(tex, img);
    if (mae > kInpaintPreserveTolerance) {
      warn(warnings, "remote inpaint rejected: covered-texel error " + std::to_string(mae * 255.0) +
                         "/255 exceeds 8/255; using local inpainting");
      return inpaint_uv(tex, pos);
    }
    UVTexture out;
    out.rgb = std::move(img);
    out.coverage = pos.valid;
    return out;
  } catch (const Error& e) {
    if (ep.strict || (e.code() != ErrorCode::GeneratorUnavailable && e.code() != ErrorCode::MalformedResponse)) throw;
    warn(warnings, std::string("remote inpaint failed, using local inpainting: ") + e.what());
    return inpaint_uv(tex, pos);
  }
}

UVTexture enhance_texture(const UVTexture& tex, const GeneratorEndpoint& ep, std::vector<std::string>* warnings) {
  if (!ep.upscale.configured()) return tex;
  try {
    const json body = {{"texture_png", b64png(tex.rgb)},
                       {"coverage_pgm", base64_encode(encode_pgm(coverage_image(tex.coverage, tex.width(), tex.height())))},
                       {"scale", 2}};
    RgbImage img = decode_rgb_field(post(ep.upscale, body), "texture_png");
    if (img.width != 2 * tex.width() || img.height != 2 * tex.height())
      throw Error(ErrorCode::MalformedResponse, "upscaled texture is not twice the input size");
    UVTexture out;
    out.rgb = std::move(img);
    out.coverage.resize(out.rgb.pixel_count());
    for (int y = 0; y < out.height(); ++y)
      for (int x = 0; x < out.width(); ++x)
        out.coverage[static_cast<std::size_t>(y) * out.width() + x] = tex.coverage[static_cast<std::size_t>(y / 2) * tex.width() + x / 2];
    return out;
  } catch (const Error& e) {
    if (ep.strict || (e.code() != ErrorCode::GeneratorUnavailable && e.code() != ErrorCode::MalformedResponse)) throw;
    warn(warnings, std::string("texture enhancement failed, keeping the original: ") + e.what());
    return tex;
  }
}

}  // namespace urbanforge
