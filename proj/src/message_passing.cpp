#include "syncsim/message_passing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace syncsim {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// One factor endpoint as seen from its receiving node.
struct Incident {
  int neighbor = 0;   // sending node id
  int in_slot = 0;    // intrinsic message toward the owner
  int out_slot = 0;   // extrinsic the owner sends back over this link
  const LinkFactor<double>* factor = nullptr;  // oriented toward the owner
};

struct Graph {
  std::vector<int> agents;                  // ascending ids
  std::vector<char> master;                 // by id-1
  std::vector<int> level;                   // wavefront level by id-1
  int max_agent_level = 0;
  std::vector<double> epochs;               // by id-1
  std::vector<Gaussian2d> prior;            // by id-1 (agents only meaningful)
  std::vector<Vec2d> master_value;          // by id-1 (masters only meaningful)
  std::vector<std::vector<Incident>> incident;  // by id-1
  std::vector<LinkFactor<double>> factors;      // 2 per edge: toward i, toward j
  long long measurement_broadcasts = 0;
};

Graph build_graph(const Topology& topo, const std::vector<LinkMeasurements>& meas,
                  const MpOptions& opts) {
  Graph g;
  g.epochs = node_epochs(topo, meas);
  g.master.assign(static_cast<std::size_t>(topo.n), 0);
  for (int id = 1; id <= topo.n; ++id) {
    if (topo.is_master(id)) {
      g.master[id - 1] = 1;
    } else {
      g.agents.push_back(id);
    }
  }
  if (g.agents.empty()) throw ConfigError("run_sync: no agent to estimate");

  const Gaussian2d prior_global =
      prior_for(opts.model.sigma_lambda_sq, opts.model.sigma_nu_sq);
  g.prior.resize(static_cast<std::size_t>(topo.n));
  g.master_value.resize(static_cast<std::size_t>(topo.n), Vec2d::Zero());
  for (int id = 1; id <= topo.n; ++id) {
    if (g.master[id - 1]) {
      g.master_value[id - 1] = Vec2d(1.0, -g.epochs[id - 1]);
    } else {
      g.prior[id - 1] = shift_frame(prior_global, g.epochs[id - 1]);
    }
  }

  // Wavefront levels: hop distance from the reference nodes, or from the
  // lowest-id agent when the network is reference-free.
  std::vector<int> sources = topo.masters;
  if (sources.empty()) sources.push_back(g.agents.front());
  g.level = hop_distances(topo, sources);
  for (int id : g.agents) g.max_agent_level = std::max(g.max_agent_level, g.level[id - 1]);

  g.factors.resize(2 * meas.size());
  g.incident.resize(static_cast<std::size_t>(topo.n));
  for (std::size_t e = 0; e < meas.size(); ++e) {
    const auto& m = meas[e];
    const auto lm = build_link_matrices<double>(m, g.epochs[m.i - 1], g.epochs[m.j - 1]);
    g.factors[2 * e] = make_link_factor(lm);                      // toward i
    g.factors[2 * e + 1] = make_link_factor<double>({lm.B, lm.A});  // toward j
    g.measurement_broadcasts += lm.A.rows();
    const int to_i = static_cast<int>(2 * e);
    const int to_j = static_cast<int>(2 * e + 1);
    if (!g.master[m.i - 1]) {
      g.incident[m.i - 1].push_back({m.j, to_i, to_j, &g.factors[to_i]});
    }
    if (!g.master[m.j - 1]) {
      g.incident[m.j - 1].push_back({m.i, to_j, to_i, &g.factors[to_j]});
    }
  }
  return g;
}

// Iteration from which a node participates: reference nodes (and the
// reference-free initiator) speak at iteration 1, a level-L node at L+1.
bool emits_at(const Graph& g, const MpOptions& opts, int id, int iter) {
  if (opts.schedule == MpSchedule::Parallel) return true;
  return iter >= g.level[id - 1] + 1;
}

}  // namespace

SyncResult run_sync(const Topology& topo, const std::vector<LinkMeasurements>& meas,
                    const MpOptions& opts) {
  if (!(opts.model.sigma_w > 0.0)) throw ConfigError("run_sync: sigma_w must be positive");
  if (!(opts.damping > 0.0) || opts.damping > 1.0) {
    throw ConfigError("run_sync: damping must be in (0, 1]");
  }
  if (opts.max_iter < 1) throw ConfigError("run_sync: max_iter must be at least 1");

  Graph g = build_graph(topo, meas, opts);
  const double s = opts.model.sigma_w * opts.model.sigma_w;
  const std::size_t n_dir = 2 * meas.size();

  SyncResult res;
  res.agent_ids = g.agents;
  res.epochs = g.epochs;
  res.measurement_broadcasts = g.measurement_broadcasts;
  res.beliefs.resize(g.agents.size());

  // --- mutable state ----------------------------------------------------
  std::vector<Gaussian2d> intrinsic(n_dir);   // factor -> node, slot-indexed
  std::vector<Gaussian2d> extrinsic(n_dir);   // node -> factor, slot = the
                                              // intrinsic slot it feeds
  std::vector<char> has_emitted(static_cast<std::size_t>(topo.n), 0);
  std::vector<Vec2d> mf_mean(static_cast<std::size_t>(topo.n), Vec2d::Zero());
  std::vector<Gaussian2d> mf_belief(g.agents.size());

  if (opts.algo == MpAlgo::Mf) {
    for (std::size_t a = 0; a < g.agents.size(); ++a) {
      const int id = g.agents[a];
      mf_belief[a] = g.prior[id - 1];
      mf_mean[id - 1] = gaussian_mean(g.prior[id - 1]);
    }
    for (int id = 1; id <= topo.n; ++id) {
      if (g.master[id - 1]) mf_mean[id - 1] = g.master_value[id - 1];
    }
  }

  std::vector<Vec2d> prev_mean(g.agents.size());
  std::vector<char> have_prev(g.agents.size(), 0);
  std::vector<double> change(g.agents.size(), 0.0);

  // Per-iteration global-frame means, for the convergence test and trace.
  auto agent_belief = [&](std::size_t a) -> Gaussian2d {
    if (opts.algo == MpAlgo::Mf) return mf_belief[a];
    const int id = g.agents[a];
    Gaussian2d b = g.prior[id - 1];
    for (const auto& inc : g.incident[id - 1]) b += intrinsic[inc.in_slot];
    return b;
  };

  long long broadcasts = g.measurement_broadcasts;
  int t = 0;
  for (t = 1; t <= opts.max_iter; ++t) {
    // Masters transmit their constant message once, up front.
    if (t == 1) broadcasts += static_cast<long long>(topo.masters.size());

    if (opts.algo == MpAlgo::Bp) {
      // Phase A: active nodes publish extrinsics from last round's intrinsics.
      for (int id : g.agents) {
        if (!emits_at(g, opts, id, t)) continue;
        const auto& inc = g.incident[id - 1];
        for (std::size_t k = 0; k < inc.size(); ++k) {
          Gaussian2d ext = g.prior[id - 1];
          for (std::size_t l = 0; l < inc.size(); ++l) {
            if (l != k) ext += intrinsic[inc[l].in_slot];
          }
          if (opts.damping < 1.0 && has_emitted[id - 1]) {
            ext.eta = opts.damping * ext.eta +
                      (1.0 - opts.damping) * extrinsic[inc[k].out_slot].eta;
          }
          extrinsic[inc[k].out_slot] = ext;
        }
        has_emitted[id - 1] = 1;
        ++broadcasts;
      }
      // Phase B: every node refreshes intrinsics from what has been sent.
      for (int id : g.agents) {
        for (const auto& inc : g.incident[id - 1]) {
          const int u = inc.neighbor;
          if (g.master[u - 1]) {
            intrinsic[inc.in_slot] = bp_factor_message(
                *inc.factor, Mat2d(Mat2d::Zero()), g.master_value[u - 1], s);
          } else if (has_emitted[u - 1]) {
            const Gaussian2d& ext = extrinsic[inc.in_slot];
            Mat2d ext_cov;
            if (!spd_invert(ext.lam, ext_cov)) {
              throw DegenerateMessage("extrinsic precision not invertible at node " +
                                      std::to_string(u));
            }
            intrinsic[inc.in_slot] =
                bp_factor_message(*inc.factor, ext_cov, Vec2d(ext_cov * ext.eta), s);
          }
        }
      }
    } else {
      // Mean field: active nodes refresh their belief from neighbor means.
      // A link contributes only once its far end has actually sent a belief
      // (reference nodes count from the start); silent links would otherwise
      // inject their neighbor's prior as a hard constraint. Serial sweeps
      // update in wavefront order within the iteration (Gauss-Seidel); the
      // parallel schedule works on last round's means and emission state.
      std::vector<Vec2d> snapshot;
      std::vector<char> emitted_snapshot;
      const bool parallel = opts.schedule == MpSchedule::Parallel;
      if (parallel) {
        snapshot = mf_mean;
        emitted_snapshot = has_emitted;
      }
      std::vector<std::size_t> order(g.agents.size());
      for (std::size_t a = 0; a < order.size(); ++a) order[a] = a;
      std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        return g.level[g.agents[x] - 1] < g.level[g.agents[y] - 1];
      });
      for (std::size_t a : order) {
        const int id = g.agents[a];
        if (!emits_at(g, opts, id, t)) continue;
        Gaussian2d b = g.prior[id - 1];
        for (const auto& inc : g.incident[id - 1]) {
          const int u = inc.neighbor;
          const bool heard =
              g.master[u - 1] || (parallel ? emitted_snapshot[u - 1] : has_emitted[u - 1]);
          if (!heard) continue;
          const Vec2d& mu = parallel ? snapshot[u - 1] : mf_mean[u - 1];
          b.lam += inc.factor->aa / s;
          b.eta -= (inc.factor->ab * mu) / s;
        }
        Mat2d cov;
        if (!spd_invert(b.lam, cov)) {
          throw SingularBelief("mean-field precision not positive definite at node " +
                               std::to_string(id));
        }
        mf_belief[a] = b;
        mf_mean[id - 1] = cov * b.eta;
        has_emitted[id - 1] = 1;
        ++broadcasts;
      }
    }

    // Convergence bookkeeping on global-frame means.
    double max_change = 0.0;
    for (std::size_t a = 0; a < g.agents.size(); ++a) {
      const int id = g.agents[a];
      const Vec2d mean_node = opts.algo == MpAlgo::Mf
                                  ? mf_mean[id - 1]
                                  : gaussian_mean(agent_belief(a));
      const Vec2d mean = shift_mean(mean_node, -g.epochs[id - 1]);
      change[a] = have_prev[a]
                      ? (mean - prev_mean[a]).cwiseAbs().maxCoeff()
                      : std::numeric_limits<double>::infinity();
      prev_mean[a] = mean;
      have_prev[a] = 1;
      max_change = std::max(max_change, change[a]);
    }
    res.mean_change_history.push_back(max_change);
    res.broadcasts_cumulative.push_back(broadcasts);

    if (opts.collect_trace) {
      for (std::size_t a = 0; a < g.agents.size(); ++a) {
        const int id = g.agents[a];
        const BeliefSummary bs = belief_summary(agent_belief(a), g.epochs[id - 1]);
        res.trace.push_back({t, id, bs.mean[0], bs.mean[1], bs.var[0], bs.var[1],
                             std::isfinite(change[a]) ? change[a] : kNan});
      }
    }
    if (opts.collect_estimates_per_iter) {
      std::vector<ClockParams> est(g.agents.size());
      for (std::size_t a = 0; a < g.agents.size(); ++a) {
        try {
          est[a] = extract_clock_estimate(agent_belief(a), g.epochs[g.agents[a] - 1]);
        } catch (const InvalidSkew&) {
          est[a] = ClockParams{kNan, kNan};
        }
      }
      res.estimates_per_iter.push_back(std::move(est));
    }

    const bool all_active = t >= g.max_agent_level + 1 ||
                            opts.schedule == MpSchedule::Parallel;
    if (all_active && max_change < opts.tol) {
      res.converged = true;
      break;
    }
  }
  res.iterations = std::min(t, opts.max_iter);

  for (std::size_t a = 0; a < g.agents.size(); ++a) {
    res.beliefs[a] = agent_belief(a);
    res.summaries.push_back(belief_summary(res.beliefs[a], g.epochs[g.agents[a] - 1]));
  }
  if (!res.converged) {
    // The partial still carries usable estimates whenever every belief admits
    // a positive inverse-skew mean; otherwise it ships beliefs only.
    SyncResult partial = res;
    try {
      for (std::size_t a = 0; a < g.agents.size(); ++a) {
        partial.estimates.push_back(
            extract_clock_estimate(partial.beliefs[a], g.epochs[g.agents[a] - 1]));
      }
    } catch (const InvalidSkew&) {
      partial.estimates.clear();
    }
    throw NotConverged("message passing did not reach tol " + std::to_string(opts.tol) +
                           " within " + std::to_string(opts.max_iter) + " iterations",
                       std::move(partial));
  }
  for (std::size_t a = 0; a < g.agents.size(); ++a) {
    res.estimates.push_back(
        extract_clock_estimate(res.beliefs[a], g.epochs[g.agents[a] - 1]));
  }
  return res;
}

}  // namespace syncsim
