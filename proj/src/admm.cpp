#include <algorithm>
#include <cmath>
#include <limits>

#include "syncsim/baselines.hpp"
#include "syncsim/errors.hpp"

namespace syncsim {

RelativeObservation relative_skew_oracle(const ClockParams& theta_i,
                                         const ClockParams& theta_j,
                                         double skew_noise_ppm, double phase_noise_sigma,
                                         std::mt19937_64& rng) {
  std::normal_distribution<double> unit(0.0, 1.0);
  RelativeObservation obs;
  obs.alpha_ij = theta_i.alpha / theta_j.alpha;
  if (skew_noise_ppm > 0.0) obs.alpha_ij *= 1.0 + skew_noise_ppm * 1e-6 * unit(rng);
  obs.beta_ij = theta_i.beta - theta_j.beta;
  if (phase_noise_sigma > 0.0) obs.beta_ij += phase_noise_sigma * unit(rng);
  return obs;
}

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// The corrected clock of a node runs at a_i = T_i/dt reference rate and reads
// b_i at the reference origin; treating it as the node's time estimate, the
// raw clock c = alpha*t + beta maps through it as
//   c = (alpha/a) * t_hat + (beta - (alpha/a) * b),
// which is the implied (alpha, beta) estimate of the node's own clock.
ClockParams implied_estimate(const ClockParams& truth, double a, double b) {
  if (!(a > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    return ClockParams{kNan, kNan};
  }
  return ClockParams{truth.alpha / a, truth.beta - (truth.alpha / a) * b};
}

}  // namespace

BaselineResult run_admm(const Topology& topo, const std::vector<ClockParams>& clocks,
                        const AdmmParams& p, std::mt19937_64& rng) {
  if (static_cast<int>(clocks.size()) != topo.n) {
    throw ConfigError("run_admm: clock count does not match node count");
  }
  if (p.rounds < 1 || p.inner < 1) {
    throw ConfigError("run_admm: rounds and inner iterations must be >= 1");
  }
  if (!(p.rho > 0.0) || !(p.dt > 0.0)) {
    throw ConfigError("run_admm: rho and dt must be positive");
  }

  const int n = topo.n;
  // Incident edge slots per node, in ascending neighbor order.
  std::vector<std::vector<std::pair<int, int>>> incident(n + 1);  // (neighbor, edge)
  for (std::size_t e = 0; e < topo.edges.size(); ++e) {
    const auto& [i, j] = topo.edges[e];
    incident[i].push_back({j, static_cast<int>(e)});
    incident[j].push_back({i, static_cast<int>(e)});
  }
  for (auto& inc : incident) std::sort(inc.begin(), inc.end());

  // Period consensus state: per node, and per (node, incident edge) copies of
  // the edge variable and its scaled dual.
  std::vector<double> T(n + 1), T0(n + 1), beta(n + 1);
  std::vector<std::vector<double>> z(n + 1), u(n + 1);
  for (int i = 1; i <= n; ++i) {
    T[i] = clocks[i - 1].alpha * p.dt;
    T0[i] = T[i];
    beta[i] = clock_read(clocks[i - 1], p.t0);
    z[i].assign(incident[i].size(), T[i]);
    u[i].assign(incident[i].size(), 0.0);
  }

  BaselineResult out;
  for (int id = 1; id <= n; ++id) {
    if (!topo.is_master(id)) out.agent_ids.push_back(id);
  }
  out.estimates_per_round.reserve(p.rounds);
  out.broadcasts_cumulative.reserve(p.rounds);

  std::normal_distribution<double> unit(0.0, 1.0);
  std::vector<double> T_snap(n + 1), beta_snap(n + 1);
  std::vector<std::vector<double>> u_snap;
  for (int round = 0; round < p.rounds; ++round) {
    const std::vector<double> T_start(T);  // period governing this interval

    for (int it = 0; it < p.inner; ++it) {
      // Each node broadcasts, per incident edge e, the value T_i + u_ie; the
      // receiving endpoint reads it through its tracking loop, i.e. with
      // multiplicative ppm-scale noise.
      T_snap = T;
      u_snap = u;
      for (int i = 1; i <= n; ++i) {
        for (std::size_t s = 0; s < incident[i].size(); ++s) {
          const auto [j, e] = incident[i][s];
          // Locate this edge's slot on the neighbor side.
          const auto& inc_j = incident[j];
          std::size_t sj = 0;
          while (inc_j[sj].second != e) ++sj;
          double read = T_snap[j] + u_snap[j][sj];
          if (p.skew_obs_ppm > 0.0) read *= 1.0 + p.skew_obs_ppm * 1e-6 * unit(rng);
          z[i][s] = 0.5 * ((T_snap[i] + u_snap[i][s]) + read);
          u[i][s] = u_snap[i][s] + T_snap[i] - z[i][s];
        }
      }
      for (int i = 1; i <= n; ++i) {
        double acc = 0.0;
        for (std::size_t s = 0; s < incident[i].size(); ++s) acc += z[i][s] - u[i][s];
        T[i] = (T0[i] + p.rho * acc) / (1.0 + p.rho * static_cast<double>(incident[i].size()));
      }
    }

    // Phase stage: every clock advances one period; an average-consensus
    // control nudges the predicted boundary reading toward the neighborhood.
    beta_snap = beta;
    for (int i = 1; i <= n; ++i) {
      const double pred_i = beta_snap[i] + T_start[i];
      double acc = 0.0;
      for (const auto& [j, e] : incident[i]) {
        (void)e;
        double read = beta_snap[j] + T_start[j];
        if (p.phase_obs_sigma > 0.0) read += p.phase_obs_sigma * unit(rng);
        acc += read - pred_i;
      }
      const double ctrl =
          incident[i].empty() ? 0.0
                              : p.gain_phase * acc / static_cast<double>(incident[i].size());
      beta[i] = pred_i + ctrl;
    }

    out.broadcasts_total += 2LL * p.inner * n;
    out.broadcasts_cumulative.push_back(out.broadcasts_total);
    const double boundary = p.t0 + (round + 1) * p.dt;
    std::vector<ClockParams> est;
    est.reserve(out.agent_ids.size());
    for (int id : out.agent_ids) {
      const double a = T[id] / p.dt;
      const double b = beta[id] - a * boundary;
      est.push_back(implied_estimate(clocks[id - 1], a, b));
    }
    out.estimates_per_round.push_back(std::move(est));
  }
  out.rounds = p.rounds;
  out.estimates = out.estimates_per_round.back();
  return out;
}

}  // namespace syncsim
