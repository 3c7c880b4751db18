#include "acdcopf/scenarios.hpp"

#include <random>

namespace acdc {

ScenarioSet enumerate_extremes(const NetworkCase& net) {
  ScenarioSet set;
  for (const auto& r : net.res_units) {
    set.boxes.push_back({r.p_avail_min, r.p_avail_max});
    std::vector<double> ends = {r.p_avail_min};
    if (r.p_avail_max != r.p_avail_min) ends.push_back(r.p_avail_max);
    set.local_extremes.push_back(ends);
  }
  set.extremes.push_back({});
  for (const auto& ends : set.local_extremes) {
    std::vector<std::vector<double>> next;
    for (const auto& partial : set.extremes)
      for (double v : ends) {
        std::vector<double> e = partial;
        e.push_back(v);
        next.push_back(std::move(e));
      }
    set.extremes = std::move(next);
  }
  return set;
}

std::vector<std::vector<double>> sample_scenarios(const NetworkCase& net, int count,
                                                  unsigned long long seed) {
  if (count < 1) throw std::invalid_argument("sample count must be at least 1");
  std::mt19937_64 rng(seed);
  std::vector<std::vector<double>> out;
  out.reserve(count);
  for (int k = 0; k < count; ++k) {
    std::vector<double> s;
    for (const auto& r : net.res_units) {
      std::uniform_real_distribution<double> u(r.p_avail_min, r.p_avail_max);
      s.push_back(r.p_avail_min == r.p_avail_max ? r.p_avail_min : u(rng));
    }
    out.push_back(std::move(s));
  }
  return out;
}

} // namespace acdc
