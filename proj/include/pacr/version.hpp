#pragma once

#ifndef PACR_VERSION
#define PACR_VERSION "0.1.0"
#endif

namespace pacr {

inline constexpr const char* kToolName = "pacr";
inline constexpr const char* kVersion = PACR_VERSION;

}  // namespace pacr
