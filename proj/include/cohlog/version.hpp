#pragma once

namespace cohlog {

inline constexpr const char* kToolName = "cohlog";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace cohlog
