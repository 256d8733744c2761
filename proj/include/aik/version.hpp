#pragma once

#define AIK_VERSION_MAJOR 0
#define AIK_VERSION_MINOR 1
#define AIK_VERSION_PATCH 0

namespace aik {
inline constexpr const char* kVersion = "0.1.0";
}  // namespace aik
