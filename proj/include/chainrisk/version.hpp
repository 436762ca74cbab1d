#pragma once

namespace chainrisk {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace chainrisk
