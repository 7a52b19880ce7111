#pragma once

namespace explab {

inline constexpr const char* kProjectName = "explosion-lab";
inline constexpr const char* kVersion = "0.1.0";

}  // namespace explab
