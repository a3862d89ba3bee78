#pragma once

namespace fedcross {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace fedcross
