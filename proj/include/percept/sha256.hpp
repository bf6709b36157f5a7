#pragma once

#include <string>
#include <string_view>

namespace percept {

/// SHA-256 digest as a 64-character lowercase hex string (FIPS 180-4).
std::string sha256_hex(std::string_view data);

}  // namespace percept
