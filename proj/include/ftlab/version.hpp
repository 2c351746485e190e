#pragma once

namespace ftlab {
inline constexpr const char* kVersion = "0.1.0";
}
