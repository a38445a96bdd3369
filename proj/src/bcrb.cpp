#include "syncsim/bcrb.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <unordered_map>

#include "syncsim/errors.hpp"

namespace syncsim {

InvSkewMoments inv_skew_moments(double mu_alpha, double sigma_alpha_sq) {
  InvSkewMoments m;
  m.m1 = 2.0 - mu_alpha;
  m.m2 = sigma_alpha_sq + m.m1 * m.m1;
  m.m3 = m.m1 * m.m1 * m.m1 + 3.0 * m.m1 * sigma_alpha_sq;
  m.m4 = m.m1 * m.m1 * m.m1 * m.m1 + 6.0 * m.m1 * m.m1 * sigma_alpha_sq +
         3.0 * sigma_alpha_sq * sigma_alpha_sq;
  return m;
}

NodeStats agent_node_stats(double sigma_alpha_sq, double beta_var) {
  NodeStats s;
  s.inv = inv_skew_moments(1.0, sigma_alpha_sq);
  s.beta_var = beta_var;
  return s;
}

namespace {

// Sender-side diagonal term of one packet: tau0 is the true departure time.
Mat2d sender_block(double tau0) {
  Mat2d b;
  b << tau0 * tau0, tau0, tau0, 1.0;
  return b;
}

// Receiver-side diagonal term: tau1 is the true arrival time; the extra
// 2 sigma_w^2 in the skew entry is the variance-sensitivity (trace) term of
// the Gaussian Fisher formula, since the receive noise scales with the
// receiver's skew.
Mat2d receiver_block(double tau1, double sw2) {
  Mat2d b;
  b << tau1 * tau1 + 2.0 * sw2, tau1, tau1, 1.0;
  return b;
}

// Cross block of one packet, sender rows, receiver columns.
Mat2d cross_block(double tau0, double tau1) {
  Mat2d b;
  b << tau0 * tau1, tau0, tau1, 1.0;
  return b;
}

}  // namespace

LinkFisher fisher_link_blocks_at(const ClockParams& theta_i, const ClockParams& theta_j,
                                 const Eigen::VectorXd& fwd_tx_stamps,
                                 const Eigen::VectorXd& rev_tx_stamps, double delta,
                                 double sigma_w) {
  const double sw2 = sigma_w * sigma_w;
  const double ai2 = theta_i.alpha * theta_i.alpha;
  const double aj2 = theta_j.alpha * theta_j.alpha;
  LinkFisher f;
  for (Eigen::Index k = 0; k < fwd_tx_stamps.size(); ++k) {
    const double tau0 = clock_invert(theta_i, fwd_tx_stamps[k]);
    const double tau1 = tau0 + delta;
    f.j_ii += sender_block(tau0) / (ai2 * sw2);
    f.j_jj += receiver_block(tau1, sw2) / (aj2 * sw2);
    f.j_ij -= cross_block(tau0, tau1) / (theta_i.alpha * theta_j.alpha * sw2);
  }
  for (Eigen::Index k = 0; k < rev_tx_stamps.size(); ++k) {
    const double tau0 = clock_invert(theta_j, rev_tx_stamps[k]);
    const double tau1 = tau0 + delta;
    f.j_jj += sender_block(tau0) / (aj2 * sw2);
    f.j_ii += receiver_block(tau1, sw2) / (ai2 * sw2);
    f.j_ij -= cross_block(tau0, tau1).transpose() / (theta_i.alpha * theta_j.alpha * sw2);
  }
  return f;
}

LinkFisher expected_fisher_link_blocks(const NodeStats& stats_i, const NodeStats& stats_j,
                                       const Eigen::VectorXd& fwd_times,
                                       const Eigen::VectorXd& rev_times, double delta,
                                       double sigma_w, BcrbDesign design) {
  const double sw2 = sigma_w * sigma_w;
  const auto& mi = stats_i.inv;
  const auto& mj = stats_j.inv;
  LinkFisher f;

  if (design == BcrbDesign::ReferenceSchedule) {
    // Departure times are known constants; randomness enters only through
    // the 1/alpha factors in front of each block.
    for (Eigen::Index k = 0; k < fwd_times.size(); ++k) {
      const double t0 = fwd_times[k];
      const double t1 = t0 + delta;
      f.j_ii += mi.m2 * sender_block(t0) / sw2;
      f.j_jj += mj.m2 * receiver_block(t1, sw2) / sw2;
      f.j_ij -= mi.m1 * mj.m1 * cross_block(t0, t1) / sw2;
    }
    for (Eigen::Index k = 0; k < rev_times.size(); ++k) {
      const double t0 = rev_times[k];
      const double t1 = t0 + delta;
      f.j_jj += mj.m2 * sender_block(t0) / sw2;
      f.j_ii += mi.m2 * receiver_block(t1, sw2) / sw2;
      f.j_ij -= mi.m1 * mj.m1 * cross_block(t0, t1).transpose() / sw2;
    }
    return f;
  }

  // LocalSchedule: the sender fires when its own clock shows the scheduled
  // value c, so tau0 = (c - beta)/alpha is random. With beta centered and
  // independent of alpha, E[(c - beta)^2] = c^2 + var(beta) and each extra
  // 1/alpha power raises the moment order by one.
  auto sender_avg = [&](const InvSkewMoments& m, double c, double bvar) {
    Mat2d b;
    b << m.m4 * (c * c + bvar), m.m3 * c, m.m3 * c, m.m2;
    return b;
  };
  auto receiver_avg = [&](const InvSkewMoments& m_rx, const InvSkewMoments& m_tx,
                          double c, double bvar_tx) {
    Mat2d b;
    const double e_t1 = m_tx.m1 * c + delta;
    const double e_t1_sq =
        m_tx.m2 * (c * c + bvar_tx) + 2.0 * delta * m_tx.m1 * c + delta * delta;
    b << m_rx.m2 * (e_t1_sq + 2.0 * sw2), m_rx.m2 * e_t1, m_rx.m2 * e_t1, m_rx.m2;
    return b;
  };
  auto cross_avg = [&](const InvSkewMoments& m_tx, const InvSkewMoments& m_rx,
                       double c, double bvar_tx) {
    // Sender rows, receiver columns; tau0 and tau1 share the sender's draw.
    Mat2d b;
    b << m_rx.m1 * (m_tx.m3 * (c * c + bvar_tx) + delta * c * m_tx.m2),
        m_rx.m1 * m_tx.m2 * c, m_rx.m1 * (m_tx.m2 * c + delta * m_tx.m1),
        m_rx.m1 * m_tx.m1;
    return b;
  };

  for (Eigen::Index k = 0; k < fwd_times.size(); ++k) {
    const double c = fwd_times[k];
    f.j_ii += sender_avg(mi, c, stats_i.beta_var) / sw2;
    f.j_jj += receiver_avg(mj, mi, c, stats_i.beta_var) / sw2;
    f.j_ij -= cross_avg(mi, mj, c, stats_i.beta_var) / sw2;
  }
  for (Eigen::Index k = 0; k < rev_times.size(); ++k) {
    const double c = rev_times[k];
    f.j_jj += sender_avg(mj, c, stats_j.beta_var) / sw2;
    f.j_ii += receiver_avg(mi, mj, c, stats_j.beta_var) / sw2;
    f.j_ij -= cross_avg(mj, mi, c, stats_j.beta_var).transpose() / sw2;
  }
  return f;
}

BcrbBounds bcrb_bounds(const Topology& topo, const std::vector<ExchangeSchedule>& sched,
                       const std::vector<double>& deltas, double sigma_w,
                       double sigma_alpha_sq, double sigma_beta_sq, BcrbDesign design) {
  if (sched.size() != topo.edges.size() || deltas.size() != topo.edges.size()) {
    throw ConfigError("bcrb_bounds: per-link inputs do not match edge count");
  }
  BcrbBounds out;
  std::unordered_map<int, int> block_of;
  for (int id = 1; id <= topo.n; ++id) {
    if (!topo.is_master(id)) {
      block_of.emplace(id, static_cast<int>(out.agent_ids.size()));
      out.agent_ids.push_back(id);
    }
  }
  const int dim = 2 * static_cast<int>(out.agent_ids.size());
  if (dim == 0) throw ConfigError("bcrb_bounds: no agent to bound");
  Eigen::MatrixXd info = Eigen::MatrixXd::Zero(dim, dim);
  for (int k = 0; k < dim / 2; ++k) {
    info(2 * k, 2 * k) = 1.0 / sigma_alpha_sq;
    info(2 * k + 1, 2 * k + 1) = 1.0 / sigma_beta_sq;
  }

  const NodeStats agent = agent_node_stats(sigma_alpha_sq, sigma_beta_sq);
  const NodeStats master = exact_node_stats();
  for (std::size_t e = 0; e < topo.edges.size(); ++e) {
    const auto& [i, j] = topo.edges[e];
    const bool mi = topo.is_master(i);
    const bool mj = topo.is_master(j);
    if (mi && mj) continue;
    const LinkFisher f =
        expected_fisher_link_blocks(mi ? master : agent, mj ? master : agent,
                                    sched[e].fwd_times, sched[e].rev_times, deltas[e],
                                    sigma_w, design);
    if (!mi) info.block<2, 2>(2 * block_of.at(i), 2 * block_of.at(i)) += f.j_ii;
    if (!mj) info.block<2, 2>(2 * block_of.at(j), 2 * block_of.at(j)) += f.j_jj;
    if (!mi && !mj) {
      info.block<2, 2>(2 * block_of.at(i), 2 * block_of.at(j)) += f.j_ij;
      info.block<2, 2>(2 * block_of.at(j), 2 * block_of.at(i)) += f.j_ij.transpose();
    }
  }

  // Same equilibrated inversion the dense posterior uses.
  Eigen::VectorXd d(dim);
  for (int k = 0; k < dim; ++k) {
    const double diag = info(k, k);
    if (!(diag > 0.0) || !std::isfinite(diag)) {
      throw SingularFisher("information matrix has a non-positive diagonal");
    }
    d[k] = 1.0 / std::sqrt(diag);
  }
  const Eigen::MatrixXd scaled = d.asDiagonal() * info * d.asDiagonal();
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(scaled);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    throw SingularFisher("information matrix is not positive definite");
  }
  const Eigen::MatrixXd cov_scaled = ldlt.solve(Eigen::MatrixXd::Identity(dim, dim));
  out.bound_skew_ppm.resize(dim / 2);
  out.bound_phase_s.resize(dim / 2);
  for (int k = 0; k < dim / 2; ++k) {
    const double va = cov_scaled(2 * k, 2 * k) * d[2 * k] * d[2 * k];
    const double vb = cov_scaled(2 * k + 1, 2 * k + 1) * d[2 * k + 1] * d[2 * k + 1];
    if (!(va >= 0.0) || !(vb >= 0.0)) {
      throw SingularFisher("negative variance from information inverse");
    }
    out.bound_skew_ppm[k] = std::sqrt(va) * 1e6;
    out.bound_phase_s[k] = std::sqrt(vb);
  }
  return out;
}

}  // namespace syncsim
