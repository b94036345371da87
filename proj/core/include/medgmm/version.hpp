#pragma once

namespace medgmm {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace medgmm
