#pragma once

namespace tikhonov {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace tikhonov
