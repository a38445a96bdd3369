#include <algorithm>
#include <cmath>
#include <limits>

#include "syncsim/baselines.hpp"
#include "syncsim/errors.hpp"

namespace syncsim {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// Implied estimate of the node's own clock from its virtual clock: the
// virtual map t_hat = a*c + o inverts to c = (1/a)*t_hat - o/a, so the node
// models itself as alpha = 1/a, beta = -o/a.
ClockParams implied_estimate(double alpha_hat, double o_hat) {
  if (!(alpha_hat > 0.0) || !std::isfinite(alpha_hat) || !std::isfinite(o_hat)) {
    return ClockParams{kNan, kNan};
  }
  return ClockParams{1.0 / alpha_hat, -o_hat / alpha_hat};
}

}  // namespace

void ats_receive(AtsNodeState& state, int sender, const AtsPacket& packet,
                 double rx_stamp, const AtsParams& p) {
  AtsNeighborState& nb = state.nb[sender];
  if (nb.has_last) {
    const double dt_tx = packet.tx_stamp - nb.last_tx;
    const double dt_rx = rx_stamp - nb.last_rx;
    if (dt_rx > 0.0 && std::isfinite(dt_tx) && std::isfinite(dt_rx)) {
      nb.eta = p.rho_eta * nb.eta + (1.0 - p.rho_eta) * (dt_tx / dt_rx);
    }
  }
  nb.last_tx = packet.tx_stamp;
  nb.last_rx = rx_stamp;
  nb.has_last = true;

  state.alpha_hat =
      p.rho_skew * state.alpha_hat + (1.0 - p.rho_skew) * nb.eta * packet.alpha_hat;
  const double their_virtual = packet.alpha_hat * packet.tx_stamp + packet.o_hat;
  const double our_virtual = state.alpha_hat * rx_stamp + state.o_hat;
  state.o_hat += (1.0 - p.rho_offset) * (their_virtual - our_virtual);
}

BaselineResult run_ats(const Topology& topo, const std::vector<ClockParams>& clocks,
                       const std::vector<double>& delays, double sigma_w,
                       const AtsParams& p, std::mt19937_64& rng) {
  if (static_cast<int>(clocks.size()) != topo.n) {
    throw ConfigError("run_ats: clock count does not match node count");
  }
  if (delays.size() != topo.edges.size()) {
    throw ConfigError("run_ats: delay count does not match edge count");
  }
  if (p.rounds < 1) throw ConfigError("run_ats: rounds must be >= 1");

  // Delay lookup per unordered pair.
  std::map<std::pair<int, int>, double> delay_of;
  for (std::size_t e = 0; e < topo.edges.size(); ++e) {
    delay_of[topo.edges[e]] = delays[e];
  }
  auto link_delay = [&](int a, int b) {
    return delay_of.at({std::min(a, b), std::max(a, b)});
  };

  BaselineResult out;
  for (int id = 1; id <= topo.n; ++id) {
    if (!topo.is_master(id)) out.agent_ids.push_back(id);
  }
  std::vector<AtsNodeState> state(topo.n + 1);
  std::normal_distribution<double> jitter(0.0, 1.0);

  out.estimates_per_round.reserve(p.rounds);
  out.broadcasts_cumulative.reserve(p.rounds);
  std::vector<AtsPacket> packets(topo.n + 1);
  for (int round = 0; round < p.rounds; ++round) {
    const double t = p.t0 + round * p.round_spacing;
    // Snapshot the packets first: all transmissions of a round carry
    // start-of-round virtual states.
    for (int i = 1; i <= topo.n; ++i) {
      packets[i] = AtsPacket{clock_read(clocks[i - 1], t), state[i].alpha_hat,
                             state[i].o_hat};
    }
    for (int i = 1; i <= topo.n; ++i) {
      for (int j : topo.neighbors[i - 1]) {
        const double w = sigma_w > 0.0 ? sigma_w * jitter(rng) : 0.0;
        if (topo.is_master(j)) continue;  // anchors never adjust
        const double rx = clock_read(clocks[j - 1], t + link_delay(i, j) + w);
        ats_receive(state[j], i, packets[i], rx, p);
      }
    }
    out.broadcasts_total += topo.n;  // one broadcast per node per round
    out.broadcasts_cumulative.push_back(out.broadcasts_total);
    std::vector<ClockParams> est;
    est.reserve(out.agent_ids.size());
    for (int id : out.agent_ids) {
      est.push_back(implied_estimate(state[id].alpha_hat, state[id].o_hat));
    }
    out.estimates_per_round.push_back(std::move(est));
  }
  out.rounds = p.rounds;
  out.estimates = out.estimates_per_round.back();
  return out;
}

}  // namespace syncsim
