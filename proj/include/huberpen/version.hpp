#pragma once

namespace huberpen {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace huberpen
