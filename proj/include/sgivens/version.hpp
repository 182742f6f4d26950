#pragma once

namespace sgivens {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace sgivens
