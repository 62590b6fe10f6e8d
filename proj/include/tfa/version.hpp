#pragma once

namespace tfa {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace tfa
