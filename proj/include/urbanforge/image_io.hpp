#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "urbanforge/image.hpp"

namespace urbanforge {

// PNG encode/decode in memory. 8-bit images may have 1 (gray) or 3 (RGB) channels;
// 16-bit images likewise. Encoding is deterministic for identical inputs.
std::vector<std::uint8_t> encode_png(const Image<std::uint8_t>& img);
std::vector<std::uint8_t> encode_png16(const Image<std::uint16_t>& img);

/// Decodes any PNG to 8-bit gray or RGB (alpha dropped, palettes expanded).
Image<std::uint8_t> decode_png(const std::vector<std::uint8_t>& bytes);
Image<std::uint16_t> decode_png16(const std::vector<std::uint8_t>& bytes);

std::vector<std::uint8_t> encode_pgm(const GrayImage& img);
GrayImage decode_pgm(const std::vector<std::uint8_t>& bytes);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
void write_text_file(const std::filesystem::path& path, const std::string& text);

void write_png(const std::filesystem::path& path, const Image<std::uint8_t>& img);
Image<std::uint8_t> read_png(const std::filesystem::path& path);

/// Reads a grayscale layer from .pgm or .png by extension.
GrayImage read_gray(const std::filesystem::path& path);

}  // namespace urbanforge
