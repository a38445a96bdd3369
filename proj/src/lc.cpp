#include <algorithm>
#include <cmath>
#include <limits>

#include "syncsim/baselines.hpp"
#include "syncsim/errors.hpp"

namespace syncsim {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

double mean_of(const Eigen::VectorXd& v) { return v.mean(); }

double span_of(const Eigen::VectorXd& v) { return v(v.size() - 1) - v(0); }

}  // namespace

LcObservation lc_observation(const LinkMeasurements& m) {
  LcObservation obs;
  const bool has_fwd = m.fwd_tx.size() > 0;
  const bool has_rev = m.rev_tx.size() > 0;

  // Phase: tx-minus-rx differences see beta_i - beta_j shifted by -delta on
  // the forward direction and +delta on the reverse, so averaging both
  // directions cancels the symmetric propagation delay.
  if (has_fwd && has_rev) {
    obs.phase = 0.5 * (mean_of(m.fwd_tx) - mean_of(m.fwd_rx) + mean_of(m.rev_rx) -
                       mean_of(m.rev_tx));
  } else if (has_fwd) {
    obs.phase = mean_of(m.fwd_tx) - mean_of(m.fwd_rx);
  } else if (has_rev) {
    obs.phase = mean_of(m.rev_rx) - mean_of(m.rev_tx);
  }

  // Skew: the first-to-last stamp span of one direction scales with the
  // writing clock's rate, so span ratios estimate alpha_i/alpha_j. Degenerate
  // spans (single packet, zero or negative denominators) contribute nothing.
  double ratio_acc = 0.0;
  int ratio_cnt = 0;
  if (m.fwd_tx.size() >= 2) {
    const double num = span_of(m.fwd_tx);
    const double den = span_of(m.fwd_rx);
    if (den > 0.0 && std::isfinite(num / den)) {
      ratio_acc += num / den;
      ++ratio_cnt;
    }
  }
  if (m.rev_tx.size() >= 2) {
    const double num = span_of(m.rev_rx);
    const double den = span_of(m.rev_tx);
    if (den > 0.0 && std::isfinite(num / den)) {
      ratio_acc += num / den;
      ++ratio_cnt;
    }
  }
  if (ratio_cnt > 0) {
    const double ratio = ratio_acc / ratio_cnt;
    if (ratio > 0.0) obs.log_skew = std::log(ratio);
  }
  return obs;
}

LcState lc_step(const LcState& current, const std::vector<LcState>& neighbors,
                const std::vector<LcObservation>& toward, double lambda) {
  if (neighbors.size() != toward.size()) {
    throw ConfigError("lc_step: neighbor and offset counts differ");
  }
  if (neighbors.empty()) return current;
  double acc_phase = 0.0, acc_skew = 0.0;
  for (std::size_t k = 0; k < neighbors.size(); ++k) {
    acc_phase += neighbors[k].phase + toward[k].phase;
    acc_skew += neighbors[k].log_skew + toward[k].log_skew;
  }
  const double inv = 1.0 / static_cast<double>(neighbors.size());
  return LcState{lambda * current.log_skew + (1.0 - lambda) * acc_skew * inv,
                 lambda * current.phase + (1.0 - lambda) * acc_phase * inv};
}

BaselineResult run_lc(const Topology& topo, const std::vector<LinkMeasurements>& links,
                      const LcParams& p) {
  if (topo.masters.empty()) {
    throw ConfigError("run_lc: a reference node is required to anchor the solution");
  }
  if (links.size() != topo.edges.size()) {
    throw ConfigError("run_lc: measurement count does not match edge count");
  }
  if (p.sweeps < 1) throw ConfigError("run_lc: sweeps must be >= 1");
  if (!(p.lambda >= 0.0 && p.lambda < 1.0)) {
    throw ConfigError("run_lc: lambda must lie in [0, 1)");
  }

  const int n = topo.n;
  std::vector<LcObservation> obs(links.size());
  for (std::size_t e = 0; e < links.size(); ++e) obs[e] = lc_observation(links[e]);

  std::vector<std::vector<std::pair<int, int>>> incident(n + 1);  // (neighbor, edge)
  for (std::size_t e = 0; e < topo.edges.size(); ++e) {
    const auto& [i, j] = topo.edges[e];
    incident[i].push_back({j, static_cast<int>(e)});
    incident[j].push_back({i, static_cast<int>(e)});
  }
  for (auto& inc : incident) std::sort(inc.begin(), inc.end());

  // Sweep order: hop level from the anchors, then id; nodes the anchors
  // cannot reach have no meaningful estimate and are skipped (NaN output).
  const std::vector<int> level = hop_distances(topo, topo.masters);
  std::vector<int> order;
  for (int id = 1; id <= n; ++id) {
    if (!topo.is_master(id) && level[id - 1] >= 0) order.push_back(id);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return level[a - 1] < level[b - 1]; });

  std::vector<LcState> v(n + 1);  // anchors stay at {0, 0}, their true value

  BaselineResult out;
  for (int id = 1; id <= n; ++id) {
    if (!topo.is_master(id)) out.agent_ids.push_back(id);
  }
  out.estimates_per_round.reserve(p.sweeps);
  out.broadcasts_cumulative.reserve(p.sweeps);

  std::vector<LcState> nb;
  std::vector<LcObservation> toward;
  for (int sweep = 0; sweep < p.sweeps; ++sweep) {
    for (int uid : order) {
      nb.clear();
      toward.clear();
      for (const auto& [j, e] : incident[uid]) {
        nb.push_back(v[j]);
        // obs[e] is oriented first -> second; flip when uid is the second
        // endpoint so the target reads v[j] + offset.
        const bool oriented_out = topo.edges[e].first == uid;
        toward.push_back(oriented_out ? obs[e]
                                      : LcObservation{-obs[e].phase, -obs[e].log_skew});
      }
      v[uid] = lc_step(v[uid], nb, toward, p.lambda);
    }
    out.broadcasts_total += 2LL * n;
    out.broadcasts_cumulative.push_back(out.broadcasts_total);
    std::vector<ClockParams> est;
    est.reserve(out.agent_ids.size());
    for (int id : out.agent_ids) {
      if (level[id - 1] >= 0) {
        est.push_back(ClockParams{std::exp(v[id].log_skew), v[id].phase});
      } else {
        est.push_back(ClockParams{kNan, kNan});
      }
    }
    out.estimates_per_round.push_back(std::move(est));
  }
  out.rounds = p.sweeps;
  out.estimates = out.estimates_per_round.back();
  return out;
}

}  // namespace syncsim
