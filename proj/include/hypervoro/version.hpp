#pragma once

namespace hypervoro {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace hypervoro
