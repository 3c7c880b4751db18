#pragma once

#include <array>
#include <vector>

#include "acdcopf/case.hpp"

namespace acdc {

// Box uncertainty over the per-RES available power.
struct ScenarioSet {
  std::vector<std::array<double, 2>> boxes;        // per RES unit [lo, hi]
  std::vector<std::vector<double>> extremes;       // deduplicated box vertices
  std::vector<std::vector<double>> local_extremes; // per RES: endpoint list
};

// All vertices of the availability box, deduplicated (degenerate boxes
// contribute a single endpoint).
ScenarioSet enumerate_extremes(const NetworkCase& net);

// Uniform i.i.d. samples inside the boxes, reproducible by seed.
std::vector<std::vector<double>> sample_scenarios(const NetworkCase& net, int count,
                                                  unsigned long long seed);

} // namespace acdc
