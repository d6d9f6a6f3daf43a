#pragma once

#include <string_view>

namespace onionhash {

// Published identical-prefix MD5 collision. The two strings differ in one
// character (offset 21: 'E' vs 'A').
inline constexpr std::string_view kCollisionA =
    "TEXTCOLLBYfGiJUETHQ4hEcKSMd5zYpgqf1YRDhkmxHkhPWptrkoyz28wnI9V0aHeAuaKnak";
inline constexpr std::string_view kCollisionB =
    "TEXTCOLLBYfGiJUETHQ4hAcKSMd5zYpgqf1YRDhkmxHkhPWptrkoyz28wnI9V0aHeAuaKnak";
inline constexpr std::string_view kCollisionMd5Hex = "faad49866e9498fc1719f5289e7a0269";

}  // namespace onionhash
