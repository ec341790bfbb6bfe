#pragma once

namespace spdechar {
inline constexpr const char* kVersion = "0.1.0";
}
