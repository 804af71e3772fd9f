#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace huberpen {

/// Shortest decimal string that round-trips the double (std::to_chars).
std::string shortest(double v);

/// FNV-1a 64-bit hash, hex encoded; used for manifest integrity checks.
std::string fnv1a64_hex(std::string_view bytes);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace huberpen
