#pragma once

namespace sphfield {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace sphfield
