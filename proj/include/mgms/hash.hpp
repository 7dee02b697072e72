#pragma once

#include <span>
#include <string>
#include <string_view>

namespace mgms {

/// Lowercase hex SHA-256 of raw bytes.
std::string sha256_hex(std::span<const unsigned char> bytes);
std::string sha256_hex(std::string_view text);
/// Hash of the little-endian byte image of a double array.
std::string sha256_hex(std::span<const double> values);

} // namespace mgms
