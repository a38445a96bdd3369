#pragma once

#include <Eigen/Core>
#include <vector>

#include "syncsim/clock.hpp"
#include "syncsim/measurement.hpp"

namespace syncsim {

/// Moments of the inverse skew 1/alpha for alpha ~ N(mu, sigma^2), via the
/// second-order expansion that is accurate for sigma << mu:
///   E[1/a] ~ 2 - mu, then Gaussian moment recursions on top of it.
struct InvSkewMoments {
  double m1 = 1.0;  // E[1/a]
  double m2 = 1.0;  // E[1/a^2]
  double m3 = 1.0;  // E[1/a^3]
  double m4 = 1.0;  // E[1/a^4]
};

InvSkewMoments inv_skew_moments(double mu_alpha, double sigma_alpha_sq);

/// Per-node statistics entering the prior-averaged Fisher blocks. Reference
/// nodes are point masses (exact_node_stats); agents carry the inverse-skew
/// moments and their phase prior variance.
struct NodeStats {
  InvSkewMoments inv;
  double beta_var = 0.0;
};

inline NodeStats exact_node_stats() { return NodeStats{}; }
NodeStats agent_node_stats(double sigma_alpha_sq, double beta_var);

/// 2x2 blocks of one link's Fisher information over (alpha_i, beta_i) and
/// (alpha_j, beta_j); j_ij is the cross block in that order.
struct LinkFisher {
  Mat2d j_ii = Mat2d::Zero();
  Mat2d j_jj = Mat2d::Zero();
  Mat2d j_ij = Mat2d::Zero();
};

/// Fisher blocks of the exact two-way likelihood at a known parameter point.
/// Inputs are the *local* transmit stamps each sender records (forward list
/// recorded by i, reverse list by j); the expectation is over the packet
/// noise only. This is the block set the finite-difference Hessian oracle
/// must reproduce.
LinkFisher fisher_link_blocks_at(const ClockParams& theta_i, const ClockParams& theta_j,
                                 const Eigen::VectorXd& fwd_tx_stamps,
                                 const Eigen::VectorXd& rev_tx_stamps, double delta,
                                 double sigma_w);

/// Who fixes the transmit instants when the prior is averaged over:
///   ReferenceSchedule - packets leave at known reference times (exactly what
///     simulate_link_exchange does); only first and second inverse-skew
///     moments enter and the phase prior drops out of the likelihood term.
///   LocalSchedule - each sender transmits when its own clock shows the
///     scheduled value, so the true departure time is prior-distributed and
///     the third/fourth moments and the phase spread enter. This is the
///     convention under which a wider phase prior visibly moves the bound.
enum class BcrbDesign { ReferenceSchedule, LocalSchedule };

/// Prior-averaged Fisher blocks of one link. `fwd_times`/`rev_times` are the
/// scheduled transmit instants: reference times for ReferenceSchedule, the
/// senders' nominal local stamp values for LocalSchedule.
LinkFisher expected_fisher_link_blocks(const NodeStats& stats_i, const NodeStats& stats_j,
                                       const Eigen::VectorXd& fwd_times,
                                       const Eigen::VectorXd& rev_times, double delta,
                                       double sigma_w, BcrbDesign design);

/// Per-agent Bayesian bounds: root of the (alpha, alpha) and (beta, beta)
/// diagonal entries of the inverse of (prior Fisher + averaged likelihood
/// Fisher) assembled over all agents. Skew bound reported in ppm.
struct BcrbBounds {
  std::vector<int> agent_ids;
  Eigen::VectorXd bound_skew_ppm;
  Eigen::VectorXd bound_phase_s;
};

BcrbBounds bcrb_bounds(const Topology& topo, const std::vector<ExchangeSchedule>& sched,
                       const std::vector<double>& deltas, double sigma_w,
                       double sigma_alpha_sq, double sigma_beta_sq,
                       BcrbDesign design = BcrbDesign::ReferenceSchedule);

}  // namespace syncsim
