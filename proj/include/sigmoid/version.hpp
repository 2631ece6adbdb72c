#pragma once

namespace sigmoid {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace sigmoid
