#include "urbanforge/image_io.hpp"

#include <png.h>

#include <cstring>
#include <fstream>
#include <sstream>

#include "urbanforge/error.hpp"

namespace urbanforge {
namespace {

struct PngWriteBuffer {
  std::vector<std::uint8_t> bytes;
};

void png_write_to_vector(png_structp png, png_bytep data, png_size_t length) {
  auto* buf = static_cast<PngWriteBuffer*>(png_get_io_ptr(png));
  buf->bytes.insert(buf->bytes.end(), data, data + length);
}

void png_flush_noop(png_structp) {}

struct PngReadCursor {
  const std::vector<std::uint8_t>* bytes;
  std::size_t offset;
};

void png_read_from_vector(png_structp png, png_bytep out, png_size_t length) {
  auto* cur = static_cast<PngReadCursor*>(png_get_io_ptr(png));
  if (cur->offset + length > cur->bytes->size()) png_error(png, "truncated PNG stream");
  std::memcpy(out, cur->bytes->data() + cur->offset, length);
  cur->offset += length;
}

[[noreturn]] void png_error_to_exception(png_structp, png_const_charp msg) {
  throw Error(ErrorCode::Io, std::string("png: ") + msg);
}

void png_warning_ignore(png_structp, png_const_charp) {}

int color_type_for(int channels) {
  switch (channels) {
    case 1: return PNG_COLOR_TYPE_GRAY;
    case 3: return PNG_COLOR_TYPE_RGB;
    case 4: return PNG_COLOR_TYPE_RGBA;
    default: throw Error(ErrorCode::Shape, "unsupported channel count " + std::to_string(channels));
  }
}

// Rows are passed as big-endian byte rows; `row_bytes` already in PNG order.
std::vector<std::uint8_t> encode_rows(int width, int height, int channels, int bit_depth,
                                      const std::vector<std::vector<std::uint8_t>>& rows) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_to_exception,
                                            png_warning_ignore);
  if (!png) throw Error(ErrorCode::Internal, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  PngWriteBuffer out;
  try {
    png_set_write_fn(png, &out, png_write_to_vector, png_flush_noop);
    png_set_compression_level(png, 6);
    png_set_IHDR(png, info, width, height, bit_depth, color_type_for(channels), PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (const auto& row : rows) png_write_row(png, row.data());
    png_write_end(png, nullptr);
  } catch (...) {
    png_destroy_write_struct(&png, &info);
    throw;
  }
  png_destroy_write_struct(&png, &info);
  return std::move(out.bytes);
}

struct DecodedPng {
  int width = 0, height = 0, channels = 0, bit_depth = 0;
  std::vector<std::vector<std::uint8_t>> rows;
};

DecodedPng decode_rows(const std::vector<std::uint8_t>& bytes, bool keep16) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0)
    throw Error(ErrorCode::Io, "not a PNG stream");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_to_exception,
                                           png_warning_ignore);
  if (!png) throw Error(ErrorCode::Internal, "png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  PngReadCursor cursor{&bytes, 0};
  DecodedPng out;
  try {
    png_set_read_fn(png, &cursor, png_read_from_vector);
    png_read_info(png, info);
    const int color = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color & PNG_COLOR_MASK_ALPHA || png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
    if (depth == 16 && !keep16) png_set_strip_16(png);
    if (depth < 16 && keep16) throw Error(ErrorCode::Shape, "expected a 16-bit PNG");
    png_read_update_info(png, info);
    out.width = static_cast<int>(png_get_image_width(png, info));
    out.height = static_cast<int>(png_get_image_height(png, info));
    out.channels = png_get_channels(png, info);
    out.bit_depth = png_get_bit_depth(png, info);
    const std::size_t row_bytes = png_get_rowbytes(png, info);
    out.rows.assign(out.height, std::vector<std::uint8_t>(row_bytes));
    for (auto& row : out.rows) png_read_row(png, row.data(), nullptr);
    png_read_end(png, nullptr);
  } catch (...) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

}  // namespace

std::vector<std::uint8_t> encode_png(const Image<std::uint8_t>& img) {
  std::vector<std::vector<std::uint8_t>> rows(img.height);
  const std::size_t stride = static_cast<std::size_t>(img.width) * img.channels;
  for (int y = 0; y < img.height; ++y) {
    const auto* src = img.data.data() + y * stride;
    rows[y].assign(src, src + stride);
  }
  return encode_rows(img.width, img.height, img.channels, 8, rows);
}

std::vector<std::uint8_t> encode_png16(const Image<std::uint16_t>& img) {
  std::vector<std::vector<std::uint8_t>> rows(img.height);
  const std::size_t stride = static_cast<std::size_t>(img.width) * img.channels;
  for (int y = 0; y < img.height; ++y) {
    rows[y].resize(stride * 2);
    for (std::size_t i = 0; i < stride; ++i) {
      const std::uint16_t v = img.data[y * stride + i];
      rows[y][2 * i] = static_cast<std::uint8_t>(v >> 8);
      rows[y][2 * i + 1] = static_cast<std::uint8_t>(v & 0xff);
    }
  }
  return encode_rows(img.width, img.height, img.channels, 16, rows);
}

Image<std::uint8_t> decode_png(const std::vector<std::uint8_t>& bytes) {
  DecodedPng d = decode_rows(bytes, false);
  if (d.channels == 2) throw Error(ErrorCode::Shape, "gray+alpha PNG not supported");
  Image<std::uint8_t> img(d.width, d.height, d.channels);
  const std::size_t stride = static_cast<std::size_t>(d.width) * d.channels;
  for (int y = 0; y < d.height; ++y) std::memcpy(img.data.data() + y * stride, d.rows[y].data(), stride);
  return img;
}

Image<std::uint16_t> decode_png16(const std::vector<std::uint8_t>& bytes) {
  DecodedPng d = decode_rows(bytes, true);
  Image<std::uint16_t> img(d.width, d.height, d.channels);
  const std::size_t stride = static_cast<std::size_t>(d.width) * d.channels;
  for (int y = 0; y < d.height; ++y) {
    for (std::size_t i = 0; i < stride; ++i) {
      img.data[y * stride + i] = static_cast<std::uint16_t>((d.rows[y][2 * i] << 8) | d.rows[y][2 * i + 1]);
    }
  }
  return img;
}

std::vector<std::uint8_t> encode_pgm(const GrayImage& img) {
  if (img.channels != 1) throw Error(ErrorCode::Shape, "PGM requires one channel");
  const std::string header = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.data.begin(), img.data.end());
  return out;
}

GrayImage decode_pgm(const std::vector<std::uint8_t>& bytes) {
  std::size_t pos = 0;
  auto next_token = [&]() {
    for (;;) {
      while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
      if (pos < bytes.size() && bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        continue;
      }
      break;
    }
    std::string tok;
    while (pos < bytes.size() && !std::isspace(bytes[pos])) tok.push_back(static_cast<char>(bytes[pos++]));
    return tok;
  };
  if (next_token() != "P5") throw Error(ErrorCode::Io, "not a binary PGM (P5)");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(next_token());
    h = std::stoi(next_token());
    maxval = std::stoi(next_token());
  } catch (const std::exception&) {
    throw Error(ErrorCode::Io, "malformed PGM header");
  }
  if (w <= 0 || h <= 0 || maxval != 255) throw Error(ErrorCode::Io, "unsupported PGM header");
  ++pos;  // single whitespace after maxval
  if (bytes.size() < pos + static_cast<std::size_t>(w) * h) throw Error(ErrorCode::Io, "truncated PGM");
  GrayImage img(w, h, 1);
  std::memcpy(img.data.data(), bytes.data() + pos, img.data.size());
  return img;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  write_file(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

void write_png(const std::filesystem::path& path, const Image<std::uint8_t>& img) {
  write_file(path, encode_png(img));
}

Image<std::uint8_t> read_png(const std::filesystem::path& path) { return decode_png(read_file(path)); }

GrayImage read_gray(const std::filesystem::path& path) {
  auto bytes = read_file(path);
  GrayImage img = path.extension() == ".pgm" ? decode_pgm(bytes) : decode_png(bytes);
  if (img.channels != 1) throw Error(ErrorCode::Shape, path.string() + " is not grayscale");
  return img;
}

}  // namespace urbanforge
