#pragma once

namespace fat {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace fat
