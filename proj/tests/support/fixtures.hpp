#pragma once

#include <string>

#include "dualloop/grid_env.hpp"

namespace fixture {

// Goal at (9,9), food at (1,0), trap at (0,1), start at (0,0).
inline const char* kCornerMap =
    "start 0 0\n"
    "SFSSSSSSSS\n"
    "TSSSSSSSSS\n"
    "SSSSSSSSSS\n"
    "SSSSSSSSSS\n"
    "SSSSSSSSSS\n"
    "SSSSSSSSSS\n"
    "SSSSSSSSSS\n"
    "SSSSSSSSSS\n"
    "SSSSSSSSSS\n"
    "SSSSSSSSSG\n";

// A straight corridor: start (0,4), goal (6,4), nothing else.
inline const char* kCorridorMap =
    "start 0 4\n"
    "SSSSSSSSSS\n"
    "SSSSSSSSSS\n"
    "SSSSSSSSSS\n"
    "SSSSSSSSSS\n"
    "SSSSSSGSSS\n"
    "SSSSSSSSSS\n"
    "SSSSSSSSSS\n"
    "SSSSSSSSSS\n"
    "SSSSSSSSSS\n"
    "SSSSSSSSSS\n";

inline dualloop::GridMap corner() { return dualloop::parse_map(kCornerMap); }
inline dualloop::GridMap corridor() { return dualloop::parse_map(kCorridorMap); }

}  // namespace fixture
