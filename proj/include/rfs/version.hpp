#pragma once

namespace rfs {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace rfs
