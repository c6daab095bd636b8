#pragma once

namespace dictsel {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace dictsel
