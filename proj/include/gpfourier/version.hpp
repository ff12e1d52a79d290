#pragma once

namespace gpfourier {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace gpfourier
