#pragma once

#include <map>
#include <numbers>
#include <random>
#include <vector>

#include "syncsim/clock.hpp"
#include "syncsim/measurement.hpp"
#include "syncsim/topology.hpp"

namespace syncsim {

/// Common result shape for the three reference synchronizers, mirroring
/// SyncResult closely enough that the harness can emit one CSV schema.
/// Estimates cover the non-reference nodes in ascending id order; a round
/// whose implied skew is non-positive yields NaN estimates for that node.
struct BaselineResult {
  std::vector<int> agent_ids;
  std::vector<ClockParams> estimates;                         // final
  std::vector<std::vector<ClockParams>> estimates_per_round;  // [round][agent]
  long long broadcasts_total = 0;
  std::vector<long long> broadcasts_cumulative;  // network total after each round
  int rounds = 0;
};

// ---------------------------------------------------------------------------
// Average-consensus synchronizer (virtual clocks).
//
// Every node keeps a virtual clock  c_hat(c) = hat_alpha * c + hat_o  mapping
// its raw reading onto a network-wide common time. Once per round each node
// broadcasts (tx stamp, hat_alpha, hat_o); a receiver j hearing i
//   1. re-estimates the relative rate eta_ij from two consecutive stamp pairs
//      of the same sender (propagation delay cancels in the difference),
//   2. runs a consensus filter on the virtual skew, and
//   3. jumps its virtual phase toward the sender's virtual clock value.
// Propagation delay is ignored by the protocol (it only corrupts rx stamps),
// which is precisely its documented accuracy limitation.
// ---------------------------------------------------------------------------

struct AtsParams {
  double rho_eta = 0.6;     // relative-rate filter
  double rho_skew = 0.6;    // virtual-skew consensus filter
  double rho_offset = 0.6;  // virtual-phase jump filter
  int rounds = 600;
  double t0 = 0.0;            // reference time of the first round
  double round_spacing = 0.01;  // seconds between rounds
};

/// Broadcast packet: the sender's local stamp plus its virtual-clock state.
struct AtsPacket {
  double tx_stamp = 0.0;
  double alpha_hat = 1.0;
  double o_hat = 0.0;
};

struct AtsNeighborState {
  double eta = 1.0;  // filtered relative rate alpha_sender / alpha_self
  double last_tx = 0.0;
  double last_rx = 0.0;
  bool has_last = false;
};

struct AtsNodeState {
  double alpha_hat = 1.0;
  double o_hat = 0.0;
  std::map<int, AtsNeighborState> nb;  // keyed by sender id
};

/// One reception: updates the receiver's state in place from the sender's
/// packet and the receiver's own rx stamp. Pure in (packet, stamps); no RNG.
void ats_receive(AtsNodeState& state, int sender, const AtsPacket& packet,
                 double rx_stamp, const AtsParams& p);

/// Runs the full protocol on a topology with true clocks and per-link
/// propagation delays. Reference nodes broadcast but never update (they pin
/// the common time); rx jitter is N(0, sigma_w^2) per reception, drawn in
/// (round, sender id, receiver id) order.
BaselineResult run_ats(const Topology& topo, const std::vector<ClockParams>& clocks,
                       const std::vector<double>& delays, double sigma_w,
                       const AtsParams& p, std::mt19937_64& rng);

// ---------------------------------------------------------------------------
// ADMM period consensus + phase average-consensus.
//
// Discrete control instants k*dt. Each node carries a period T_i (its clock
// advance per interval, initialised to alpha_i*dt) and a phase beta_i (its
// corrected reading at the interval boundary, initialised to its raw clock).
// Periods reach a common value via consensus ADMM with per-edge copies and
// scaled duals; phases follow beta <- beta + T + u with u an average-consensus
// control on the predicted next boundary reading. Cross-node reads are not
// timestamped packets: relative skews (and phases) are assumed available from
// an external tracking loop, so neighbor periods arrive with multiplicative
// ppm-scale noise and neighbor phases with additive noise.
// ---------------------------------------------------------------------------

struct AdmmParams {
  double rho = 0.5;         // ADMM penalty weight
  double gain_phase = 0.5;  // phase consensus gain
  int rounds = 400;
  int inner = 1;            // inner iterations per control instant
  double dt = 0.01;         // control interval, reference seconds
  double t0 = 0.0;
  double skew_obs_ppm = 0.5;  // multiplicative noise on period reads, ppm
  double phase_obs_sigma = 93e-9 / std::numbers::sqrt2;  // additive, seconds
};

/// Relative clock knowledge of a node pair as an external tracking loop
/// would deliver it: alpha_ij = alpha_i/alpha_j with multiplicative ppm
/// noise, beta_ij = beta_i - beta_j with additive noise. Reversing the pair
/// inverts alpha_ij and negates beta_ij. Draw order: skew first, then phase.
struct RelativeObservation {
  double alpha_ij = 1.0;
  double beta_ij = 0.0;
};

RelativeObservation relative_skew_oracle(const ClockParams& theta_i,
                                         const ClockParams& theta_j,
                                         double skew_noise_ppm, double phase_noise_sigma,
                                         std::mt19937_64& rng);

/// Runs the full protocol. Master-free by design: reference nodes participate
/// as ordinary members, so estimates are meaningful up to a network-common
/// frame (compare with network-mean centred errors). Two broadcasts per node
/// per round (period packet + phase packet), times `inner`.
BaselineResult run_admm(const Topology& topo, const std::vector<ClockParams>& clocks,
                        const AdmmParams& p, std::mt19937_64& rng);

// ---------------------------------------------------------------------------
// Loop-constrained pairwise least squares.
//
// Pairwise offsets x~_ij (phase difference, log skew ratio) are estimated
// from the two-way exchange campaign; absolute per-node values then solve
// min ||A v - x~||^2 by filtered Gauss-Seidel coordinate descent, anchored at
// a reference node (v = 0). Every node starts from the vague value 0 and
// every update is blended with retention lambda, so the protocol pays the
// slow filtered transient its retention implies; sweeps visit nodes in
// (hop level, id) order. The fixed point is the anchored least-squares
// solution for any retention in [0, 1).
// ---------------------------------------------------------------------------

struct LcParams {
  double lambda = 0.9;  // retention of the previous estimate per update
  int sweeps = 300;
};

/// Pairwise offsets of one link, oriented i -> j (edge order).
struct LcObservation {
  double phase = 0.0;     // beta_i - beta_j estimate, seconds
  double log_skew = 0.0;  // log(alpha_i / alpha_j) estimate
};

/// Two-way sample-mean estimators. The phase offset averages the forward and
/// reverse stamp differences so the symmetric propagation delay cancels; the
/// skew ratio compares first-to-last stamp spans in both directions. Links
/// whose spans are degenerate (fewer than two packets, or nonpositive span
/// ratios) yield a zero log-skew observation.
LcObservation lc_observation(const LinkMeasurements& m);

/// One node's absolute estimate in the least-squares system: log skew ratio
/// and phase offset relative to the reference.
struct LcState {
  double log_skew = 0.0;
  double phase = 0.0;
};

/// One coordinate-descent update. `neighbors` are the current neighbor
/// estimates and `toward` the pairwise offsets oriented so the node's target
/// through neighbor k is neighbors[k] + toward[k]; the result blends the
/// current value with the mean target under retention lambda. An empty
/// neighborhood returns `current` unchanged. With lambda = 0 and consistent
/// loop-free offsets fed outward from the anchor, each update is exact.
LcState lc_step(const LcState& current, const std::vector<LcState>& neighbors,
                const std::vector<LcObservation>& toward, double lambda);

/// Runs the full solver on the campaign measurements. Requires at least one
/// reference node (throws ConfigError otherwise). Two broadcasts per node per
/// sweep (skew estimate + phase estimate).
BaselineResult run_lc(const Topology& topo, const std::vector<LinkMeasurements>& links,
                      const LcParams& p);

}  // namespace syncsim
