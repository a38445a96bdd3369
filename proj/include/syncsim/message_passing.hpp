#pragma once

#include <string>
#include <vector>

#include "syncsim/dense_posterior.hpp"
#include "syncsim/link_model.hpp"

namespace syncsim {

enum class MpAlgo { Bp, Mf };

/// Parallel: every node recomputes and rebroadcasts each iteration.
/// SerialFromSource: a wavefront schedule; reference nodes (or, without any,
/// the lowest-id agent) speak first and a node starts participating one
/// iteration after its nearest active neighbor, staying active afterwards.
enum class MpSchedule { Parallel, SerialFromSource };

struct MpOptions {
  MpAlgo algo = MpAlgo::Bp;
  MpSchedule schedule = MpSchedule::Parallel;
  ModelParams model;
  double tol = 1e-9;     // stop when no belief mean moves more than this
  int max_iter = 100;
  double damping = 1.0;  // weight on the fresh extrinsic mean; 1 = undamped
  bool collect_trace = false;
  bool collect_estimates_per_iter = false;
};

/// One belief snapshot in the per-iteration trace (global frame).
struct TraceRow {
  int iteration = 0;
  int node = 0;
  double mean_lambda = 0.0;
  double mean_nu = 0.0;
  double var_lambda = 0.0;
  double var_nu = 0.0;
  double mean_change = 0.0;  // this node's mean movement at this iteration
};

struct SyncResult {
  std::vector<int> agent_ids;               // ascending 1-based ids
  std::vector<double> epochs;               // per node id-1, all nodes
  std::vector<Gaussian2d> beliefs;          // per agent, node epoch frame
  std::vector<BeliefSummary> summaries;     // per agent, global frame
  std::vector<ClockParams> estimates;       // per agent
  int iterations = 0;
  bool converged = false;
  std::vector<double> mean_change_history;  // entry t-1 belongs to iteration t
  long long measurement_broadcasts = 0;     // packets of the exchange campaign
  std::vector<long long> broadcasts_cumulative;  // network total incl. campaign
  std::vector<std::vector<ClockParams>> estimates_per_iter;  // optional
  std::vector<TraceRow> trace;                               // optional
};

/// max_iter elapsed with the largest belief-mean movement still above tol.
/// Carries the full partial result so callers can inspect the trace.
struct NotConverged : SyncError {
  SyncResult partial;
  NotConverged(const std::string& msg, SyncResult r)
      : SyncError(msg), partial(std::move(r)) {}
};

/// Runs the selected message-passing estimator over one measurement campaign.
SyncResult run_sync(const Topology& topo, const std::vector<LinkMeasurements>& meas,
                    const MpOptions& opts);

}  // namespace syncsim
