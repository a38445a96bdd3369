#pragma once

#include <Eigen/Core>
#include <random>
#include <vector>

#include "syncsim/clock.hpp"
#include "syncsim/topology.hpp"

namespace syncsim {

/// Reference-time transmit instants for one link's two-way exchange.
/// Forward means i -> j throughout.
struct ExchangeSchedule {
  Eigen::VectorXd fwd_times;
  Eigen::VectorXd rev_times;
};

/// k_fwd + k_rev packets spaced `spacing` apart starting at t0, strictly
/// alternating forward/reverse (forward first) until one direction runs out.
ExchangeSchedule alternating_schedule(double t0, double spacing, int k_fwd, int k_rev);

/// One reference-time window per link, links back to back in edge-id order.
/// Window length is (k_fwd + k_rev) * spacing.
std::vector<ExchangeSchedule> campaign_schedule(const Topology& topo, double t0,
                                                double spacing, int k_fwd, int k_rev);

/// Timestamp record of one link's exchange, every stamp in the recording
/// node's own clock units. Transmit stamps are exact (the sender reads its
/// clock at the true departure instant); receive stamps are the receiver's
/// clock read at arrival, i.e. departure + delay + white timing noise.
struct LinkMeasurements {
  int i = 0;  // forward transmitter (1-based id)
  int j = 0;  // forward receiver
  Eigen::VectorXd fwd_tx;  // c_i at forward departures
  Eigen::VectorXd fwd_rx;  // c_j at forward arrivals
  Eigen::VectorXd rev_tx;  // c_j at reverse departures
  Eigen::VectorXd rev_rx;  // c_i at reverse arrivals
};

/// Expected forward receive stamp given both clocks, the link delay, and the
/// transmit stamp recorded by the sender. Works for either direction when
/// called with the proper (sender, receiver) order.
inline double expected_rx_stamp(const ClockParams& sender, const ClockParams& receiver,
                                double delta, double tx_stamp) {
  return clock_read(receiver, clock_invert(sender, tx_stamp) + delta);
}

/// Simulates one link's exchange. Per-packet arrival timing error is
/// N(0, sigma_w^2) in reference time, drawn in schedule order (forward list
/// first, then reverse), so the draw layout is stable.
LinkMeasurements simulate_link_exchange(int i, int j, const ClockParams& clock_i,
                                        const ClockParams& clock_j, double delta,
                                        const ExchangeSchedule& sched, double sigma_w,
                                        std::mt19937_64& rng);

/// Full campaign: simulate_link_exchange for every edge, in edge-id order.
std::vector<LinkMeasurements> simulate_campaign(const Topology& topo,
                                                const std::vector<ClockParams>& clocks,
                                                const std::vector<double>& deltas,
                                                const std::vector<ExchangeSchedule>& sched,
                                                double sigma_w, std::mt19937_64& rng);

}  // namespace syncsim
