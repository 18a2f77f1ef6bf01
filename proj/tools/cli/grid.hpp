#pragma once

#include <string>
#include <vector>

namespace memcost::cli {

/// Parses `start:step:stop` into start + i*step for i = 0, 1, ... while the
/// point does not pass stop by more than half a step. A point within
/// 1e-9 step of stop is snapped to stop. start > stop yields an empty grid.
/// Throws std::invalid_argument on malformed input or step <= 0.
std::vector<double> parse_grid(const std::string& spec);

}  // namespace memcost::cli
