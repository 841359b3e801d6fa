#pragma once

namespace jsmf {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace jsmf
