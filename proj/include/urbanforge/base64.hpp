#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace urbanforge {

std::string base64_encode(const std::vector<std::uint8_t>& bytes);
/// Throws Error(MalformedResponse) on invalid input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

}  // namespace urbanforge
