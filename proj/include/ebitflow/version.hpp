#pragma once

namespace ebitflow {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace ebitflow
