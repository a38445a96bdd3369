#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "syncsim/baselines.hpp"
#include "syncsim/clock.hpp"
#include "syncsim/config.hpp"
#include "syncsim/link_model.hpp"
#include "syncsim/measurement.hpp"
#include "syncsim/metrics.hpp"
#include "syncsim/topology.hpp"

namespace syncsim {

/// Everything one Monte-Carlo run consumes, generated deterministically from
/// (config, run index). Tests and the acceptance suite reuse this to see the
/// exact data the harness saw.
struct RunData {
  Topology topo;
  std::vector<ClockParams> clocks;
  std::vector<double> delays;
  std::vector<ExchangeSchedule> schedules;
  std::vector<LinkMeasurements> links;
};

/// Topology for a given run; honors topology_per_run (a frozen topology is
/// the run-0 draw). Grid and explicit topologies consume no randomness.
Topology make_topology(const ExperimentConfig& cfg, int run);

/// Full deterministic run input: topology, clocks, delays, schedules, and
/// the simulated exchange campaign.
RunData make_run_data(const ExperimentConfig& cfg, int run);

/// Estimator-side model parameters implied by the config (prior fallbacks
/// resolved).
ModelParams model_params(const ExperimentConfig& cfg);

/// Variance of the uniform phase prior, (beta_max - beta_min)^2 / 12.
double beta_prior_var(const ExperimentConfig& cfg);

/// The algorithms a run executes: the config/CLI selection, expanded when it
/// is "all" (order: bp, mf, ats, admm, lc).
std::vector<std::string> algo_list(const std::string& selection);

/// Error reference for one algorithm under this config ("auto" resolves to
/// network-mean for the master-free consensus protocols, and to truth for
/// the estimators that exploit a reference node when one exists).
RmseMode resolve_rmse_mode(const ExperimentConfig& cfg, const std::string& algo);

/// Runs the full experiment and writes CSV artifacts into out_dir:
///   metrics.csv               one row per (run, algorithm)
///   bcrb.csv                  per-node bounds, when bounds are requested
///   convergence.csv           per-iteration network RMSE, when configured
///   trace_<algo>_run<k>.csv   per-iteration per-node state, when configured
/// Overrides replace the config's algo/bcrb/trace selections when non-empty
/// (CLI flags). Failed runs are recorded in-band via the status column.
void run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                    const std::string& algo_override = "", bool bcrb_override = false,
                    bool trace_override = false);

}  // namespace syncsim
