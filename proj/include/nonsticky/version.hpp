#pragma once

#define NONSTICKY_VERSION "0.1.0"

namespace nonsticky {
inline constexpr const char* kVersion = NONSTICKY_VERSION;
}  // namespace nonsticky
