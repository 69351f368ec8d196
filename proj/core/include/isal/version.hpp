#pragma once

namespace isal {

inline constexpr const char* kToolVersion = "isaliency 0.1.0";

}  // namespace isal
