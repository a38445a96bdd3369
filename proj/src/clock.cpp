#include "syncsim/clock.hpp"

#include <algorithm>

namespace syncsim {

std::vector<ClockParams> sample_clocks(int n, const std::vector<int>& masters,
                                       double sigma_alpha, double beta_min,
                                       double beta_max, std::mt19937_64& rng) {
  if (n < 1) throw ConfigError("sample_clocks: need at least one node");
  if (beta_max < beta_min) throw ConfigError("sample_clocks: empty phase interval");
  std::vector<ClockParams> clocks(static_cast<std::size_t>(n));
  std::normal_distribution<double> skew(1.0, sigma_alpha);
  std::uniform_real_distribution<double> phase(beta_min, beta_max);
  for (int id = 1; id <= n; ++id) {
    if (std::find(masters.begin(), masters.end(), id) != masters.end()) {
      clocks[id - 1] = ClockParams{1.0, 0.0};
      continue;
    }
    double a = skew(rng);
    while (!(a > 0.5)) a = skew(rng);  // truncation guard; essentially never fires
    clocks[id - 1] = ClockParams{a, phase(rng)};
  }
  return clocks;
}

}  // namespace syncsim
