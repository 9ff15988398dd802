#pragma once

namespace lg {

inline constexpr const char* kToolName = "lg";
inline constexpr const char* kToolVersion = "0.1.0";

} // namespace lg
