#pragma once

namespace hwnas {

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace hwnas
