#pragma once

namespace nsquant {

inline constexpr const char* version = "0.1.0";

}  // namespace nsquant
