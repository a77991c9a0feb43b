#pragma once

#include <string_view>

namespace spikesim {

enum class Workload { kMlp, kAttention };
enum class Design { k2D, k3D };

std::string_view to_string(Workload w);
std::string_view to_string(Design d);
// Both throw ConfigError on unknown text.
Workload parse_workload(std::string_view text);
Design parse_design(std::string_view text);

}  // namespace spikesim
