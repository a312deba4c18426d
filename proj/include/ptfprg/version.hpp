#pragma once

namespace ptfprg {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace ptfprg
