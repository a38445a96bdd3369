#include "syncsim/measurement.hpp"

#include <string>

namespace syncsim {

ExchangeSchedule alternating_schedule(double t0, double spacing, int k_fwd, int k_rev) {
  if (k_fwd < 0 || k_rev < 0 || k_fwd + k_rev < 1) {
    throw ConfigError("alternating_schedule: need at least one packet");
  }
  if (!(spacing > 0.0) && k_fwd + k_rev > 1) {
    throw ConfigError("alternating_schedule: spacing must be positive");
  }
  ExchangeSchedule s;
  s.fwd_times.resize(k_fwd);
  s.rev_times.resize(k_rev);
  int f = 0, r = 0, slot = 0;
  // Forward first; once one side is exhausted the other continues alone.
  while (f < k_fwd || r < k_rev) {
    const bool fwd_turn = (slot % 2 == 0) ? (f < k_fwd) : (r >= k_rev);
    if (fwd_turn) {
      s.fwd_times[f++] = t0 + slot * spacing;
    } else {
      s.rev_times[r++] = t0 + slot * spacing;
    }
    ++slot;
  }
  return s;
}

std::vector<ExchangeSchedule> campaign_schedule(const Topology& topo, double t0,
                                                double spacing, int k_fwd, int k_rev) {
  std::vector<ExchangeSchedule> out;
  out.reserve(topo.edges.size());
  const double window = (k_fwd + k_rev) * spacing;
  for (std::size_t e = 0; e < topo.edges.size(); ++e) {
    out.push_back(alternating_schedule(t0 + window * static_cast<double>(e), spacing,
                                       k_fwd, k_rev));
  }
  return out;
}

LinkMeasurements simulate_link_exchange(int i, int j, const ClockParams& clock_i,
                                        const ClockParams& clock_j, double delta,
                                        const ExchangeSchedule& sched, double sigma_w,
                                        std::mt19937_64& rng) {
  LinkMeasurements m;
  m.i = i;
  m.j = j;
  const auto kf = sched.fwd_times.size();
  const auto kr = sched.rev_times.size();
  m.fwd_tx.resize(kf);
  m.fwd_rx.resize(kf);
  m.rev_tx.resize(kr);
  m.rev_rx.resize(kr);
  std::normal_distribution<double> w(0.0, sigma_w);
  for (Eigen::Index k = 0; k < kf; ++k) {
    const double t = sched.fwd_times[k];
    m.fwd_tx[k] = clock_read(clock_i, t);
    m.fwd_rx[k] = clock_read(clock_j, t + delta + (sigma_w > 0.0 ? w(rng) : 0.0));
  }
  for (Eigen::Index k = 0; k < kr; ++k) {
    const double t = sched.rev_times[k];
    m.rev_tx[k] = clock_read(clock_j, t);
    m.rev_rx[k] = clock_read(clock_i, t + delta + (sigma_w > 0.0 ? w(rng) : 0.0));
  }
  return m;
}

std::vector<LinkMeasurements> simulate_campaign(const Topology& topo,
                                                const std::vector<ClockParams>& clocks,
                                                const std::vector<double>& deltas,
                                                const std::vector<ExchangeSchedule>& sched,
                                                double sigma_w, std::mt19937_64& rng) {
  if (deltas.size() != topo.edges.size() || sched.size() != topo.edges.size()) {
    throw ConfigError("simulate_campaign: per-link inputs do not match edge count");
  }
  std::vector<LinkMeasurements> out;
  out.reserve(topo.edges.size());
  for (std::size_t e = 0; e < topo.edges.size(); ++e) {
    const auto& [i, j] = topo.edges[e];
    out.push_back(simulate_link_exchange(i, j, clocks[i - 1], clocks[j - 1], deltas[e],
                                         sched[e], sigma_w, rng));
  }
  return out;
}

}  // namespace syncsim
