#include "syncsim/link_model.hpp"

#include <limits>

namespace syncsim {

std::vector<double> node_epochs(const Topology& topo,
                                const std::vector<LinkMeasurements>& meas) {
  constexpr double kNone = std::numeric_limits<double>::infinity();
  std::vector<double> epochs(static_cast<std::size_t>(topo.n), kNone);
  for (const auto& m : meas) {
    // Earliest stamp each endpoint records on this link. Forward goes first
    // in the schedule, but take the min anyway so reverse-only links work.
    double first_i = kNone, first_j = kNone;
    if (m.fwd_tx.size() > 0) first_i = std::min(first_i, m.fwd_tx[0]);
    if (m.rev_rx.size() > 0) first_i = std::min(first_i, m.rev_rx[0]);
    if (m.fwd_rx.size() > 0) first_j = std::min(first_j, m.fwd_rx[0]);
    if (m.rev_tx.size() > 0) first_j = std::min(first_j, m.rev_tx[0]);
    epochs[m.i - 1] = std::min(epochs[m.i - 1], first_i);
    epochs[m.j - 1] = std::min(epochs[m.j - 1], first_j);
  }
  for (auto& e : epochs) {
    if (e == kNone) e = 0.0;
  }
  return epochs;
}

DelayStats delay_stats(const LinkMeasurements& m, double epoch_i, double epoch_j) {
  const Eigen::Index kf = m.fwd_tx.size();
  const Eigen::Index kr = m.rev_tx.size();
  const double n = static_cast<double>(kf + kr);
  if (!(n > 0)) throw DegenerateLink("delay_stats: empty link");
  DelayStats s;
  // Negated column means of the uncentered coefficient stacks.
  s.a_i = (m.fwd_tx.sum() - kf * epoch_i - (m.rev_rx.sum() - kr * epoch_i)) / n;
  s.a_j = (m.rev_tx.sum() - kr * epoch_j - (m.fwd_rx.sum() - kf * epoch_j)) / n;
  s.b = static_cast<double>(kr - kf) / n;
  return s;
}

double delay_ml(const LinkMeasurements& m, const Vec2d& vartheta_i,
                const Vec2d& vartheta_j) {
  const DelayStats s = delay_stats(m);
  return s.a_i * vartheta_i[0] + s.a_j * vartheta_j[0] +
         s.b * (vartheta_i[1] - vartheta_j[1]);
}

double exact_profile_objective(const LinkMeasurements& m, const Vec2d& vartheta_i,
                               const Vec2d& vartheta_j, double delta) {
  double obj = 0.0;
  for (Eigen::Index k = 0; k < m.fwd_tx.size(); ++k) {
    const double r = m.fwd_rx[k] * vartheta_j[0] - vartheta_j[1] -
                     (m.fwd_tx[k] * vartheta_i[0] - vartheta_i[1]) - delta;
    obj += r * r;
  }
  for (Eigen::Index k = 0; k < m.rev_tx.size(); ++k) {
    const double r = m.rev_rx[k] * vartheta_i[0] - vartheta_i[1] -
                     (m.rev_tx[k] * vartheta_j[0] - vartheta_j[1]) - delta;
    obj += r * r;
  }
  return obj;
}

LinkMeasurements swap_link_roles(const LinkMeasurements& m) {
  LinkMeasurements out;
  out.i = m.j;
  out.j = m.i;
  out.fwd_tx = m.rev_tx;
  out.fwd_rx = m.rev_rx;
  out.rev_tx = m.fwd_tx;
  out.rev_rx = m.fwd_rx;
  return out;
}

ClockParams extract_clock_estimate(const Gaussian2d& belief, double epoch) {
  const Vec2d mean = shift_mean(gaussian_mean(belief), -epoch);
  return from_transformed(mean);
}

BeliefSummary belief_summary(const Gaussian2d& belief, double epoch) {
  const Mat2d cov = gaussian_cov(belief);
  const Vec2d mean = gaussian_mean(belief);
  BeliefSummary s;
  s.mean = shift_mean(mean, -epoch);
  s.var[0] = cov(0, 0);
  // nu = nu' + epoch * lambda, so the variance picks up the cross terms.
  s.var[1] = cov(1, 1) + 2.0 * epoch * cov(0, 1) + epoch * epoch * cov(0, 0);
  return s;
}

}  // namespace syncsim
