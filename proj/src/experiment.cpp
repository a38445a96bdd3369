#include "syncsim/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>

#include "syncsim/bcrb.hpp"
#include "syncsim/csv.hpp"
#include "syncsim/errors.hpp"
#include "syncsim/message_passing.hpp"
#include "syncsim/rng.hpp"

namespace syncsim {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// Node count of an explicit edge list: the largest id mentioned (the config's
// `n` is a random-topology parameter and is ignored here).
int explicit_node_count(const std::vector<std::pair<int, int>>& edges) {
  int n = 0;
  for (const auto& [i, j] : edges) {
    if (i < 1 || j < 1) throw ConfigError("explicit topology: node ids are 1-based");
    n = std::max(n, std::max(i, j));
  }
  return n;
}

Topology explicit_topology(const ExperimentConfig& cfg) {
  Topology t;
  const int n = explicit_node_count(cfg.edges);
  t.n = n;
  // No geometry is specified for explicit edge lists; propagation distance
  // is zero and link delay reduces to the processing time.
  t.positions.assign(n, Eigen::Vector2d::Zero());
  t.edges = cfg.edges;
  std::sort(t.edges.begin(), t.edges.end());
  t.masters = cfg.masters;
  for (int m : t.masters) {
    if (m < 1 || m > n) throw ConfigError("explicit topology: master id out of range");
  }
  t.rebuild_neighbors();
  return t;
}

}  // namespace

Topology make_topology(const ExperimentConfig& cfg, int run) {
  switch (cfg.topology) {
    case ExperimentConfig::TopologyKind::Random: {
      auto rng = make_rng(cfg.seed, cfg.topology_per_run ? static_cast<uint64_t>(run) : 0,
                          Stream::Topology);
      return random_topology(cfg.n, cfg.masters, cfg.area_m, cfg.radius_m, rng);
    }
    case ExperimentConfig::TopologyKind::Grid:
      return grid_topology(cfg.rows, cfg.cols, cfg.grid_spacing_m, cfg.masters);
    case ExperimentConfig::TopologyKind::Explicit:
      return explicit_topology(cfg);
  }
  throw ConfigError("make_topology: unreachable topology kind");
}

RunData make_run_data(const ExperimentConfig& cfg, int run) {
  RunData d;
  d.topo = make_topology(cfg, run);
  auto clock_rng = make_rng(cfg.seed, static_cast<uint64_t>(run), Stream::Clocks);
  d.clocks = sample_clocks(d.topo.n, d.topo.masters, std::sqrt(cfg.sigma_alpha_sq),
                           cfg.beta_min, cfg.beta_max, clock_rng);
  d.delays = link_delays(d.topo, cfg.t_c, cfg.propagation_speed);
  d.schedules.reserve(d.topo.edges.size());
  const double window = (cfg.k_fwd + cfg.k_rev) * cfg.spacing;
  for (std::size_t e = 0; e < d.topo.edges.size(); ++e) {
    const double start = cfg.t0 + (cfg.concurrent_links ? 0.0 : window * static_cast<double>(e));
    d.schedules.push_back(alternating_schedule(start, cfg.spacing, cfg.k_fwd, cfg.k_rev));
  }
  auto meas_rng = make_rng(cfg.seed, static_cast<uint64_t>(run), Stream::Measurement);
  d.links = simulate_campaign(d.topo, d.clocks, d.delays, d.schedules, cfg.sigma_w,
                              meas_rng);
  return d;
}

ModelParams model_params(const ExperimentConfig& cfg) {
  ModelParams m;
  m.sigma_w = cfg.sigma_w;
  m.sigma_lambda_sq =
      cfg.prior_sigma_lambda_sq > 0.0 ? cfg.prior_sigma_lambda_sq : cfg.sigma_alpha_sq;
  m.sigma_nu_sq = cfg.prior_sigma_nu_sq > 0.0 ? cfg.prior_sigma_nu_sq : beta_prior_var(cfg);
  return m;
}

double beta_prior_var(const ExperimentConfig& cfg) {
  const double w = cfg.beta_max - cfg.beta_min;
  return w * w / 12.0;
}

std::vector<std::string> algo_list(const std::string& selection) {
  if (selection == "all") return {"bp", "mf", "ats", "admm", "lc"};
  return {selection};
}

RmseMode resolve_rmse_mode(const ExperimentConfig& cfg, const std::string& algo) {
  if (cfg.rmse_mode == "truth") return RmseMode::Truth;
  if (cfg.rmse_mode == "network_mean") return RmseMode::NetworkMean;
  // auto: the consensus protocols synchronize to an arbitrary network-common
  // frame; the anchored estimators are absolute when a reference node exists.
  if (algo == "ats" || algo == "admm") return RmseMode::NetworkMean;
  return cfg.masters.empty() ? RmseMode::NetworkMean : RmseMode::Truth;
}

namespace {

struct AlgoOutcome {
  std::string status = "ok";
  long long iterations = 0;
  long long broadcasts = 0;
  std::vector<ClockParams> estimates;                      // per agent; may be empty
  std::vector<std::vector<ClockParams>> estimates_per_it;  // optional
  std::vector<long long> broadcasts_cumulative;            // optional
  std::vector<TraceRow> trace;                             // bp/mf only
};

std::vector<ClockParams> agent_truth(const RunData& d, const std::vector<int>& agent_ids) {
  std::vector<ClockParams> t;
  t.reserve(agent_ids.size());
  for (int id : agent_ids) t.push_back(d.clocks[id - 1]);
  return t;
}

MpOptions mp_options(const ExperimentConfig& cfg, const std::string& algo) {
  MpOptions opt;
  opt.algo = algo == "bp" ? MpAlgo::Bp : MpAlgo::Mf;
  if (cfg.schedule == "parallel") {
    opt.schedule = MpSchedule::Parallel;
  } else if (cfg.schedule == "serial") {
    opt.schedule = MpSchedule::SerialFromSource;
  } else {
    opt.schedule = algo == "bp" ? MpSchedule::Parallel : MpSchedule::SerialFromSource;
  }
  opt.model = model_params(cfg);
  opt.tol = cfg.tol;
  opt.max_iter = cfg.max_iter;
  opt.damping = cfg.damping;
  opt.collect_trace = cfg.trace;
  opt.collect_estimates_per_iter = cfg.convergence;
  return opt;
}

AtsParams ats_params(const ExperimentConfig& cfg) {
  AtsParams p;
  p.rho_eta = p.rho_skew = p.rho_offset = cfg.ats_rho;
  p.rounds = cfg.ats_rounds;
  p.t0 = cfg.t0;
  p.round_spacing = cfg.ats_round_spacing;
  return p;
}

AdmmParams admm_params(const ExperimentConfig& cfg) {
  AdmmParams p;
  p.rho = cfg.admm_rho;
  p.gain_phase = cfg.admm_gain;
  p.rounds = cfg.admm_rounds;
  p.inner = cfg.admm_inner;
  p.dt = cfg.admm_dt;
  p.t0 = cfg.t0;
  p.skew_obs_ppm = cfg.admm_skew_obs_ppm;
  p.phase_obs_sigma = cfg.admm_phase_obs_sigma >= 0.0
                          ? cfg.admm_phase_obs_sigma
                          : cfg.sigma_w / std::numbers::sqrt2;
  return p;
}

LcParams lc_params(const ExperimentConfig& cfg) {
  LcParams p;
  p.lambda = cfg.lc_lambda;
  p.sweeps = cfg.lc_sweeps;
  return p;
}

AlgoOutcome from_sync_result(const SyncResult& r, bool filled) {
  AlgoOutcome o;
  o.iterations = r.iterations;
  o.broadcasts = r.broadcasts_cumulative.empty() ? r.measurement_broadcasts
                                                 : r.broadcasts_cumulative.back();
  if (filled) o.estimates = r.estimates;
  o.estimates_per_it = r.estimates_per_iter;
  o.broadcasts_cumulative = r.broadcasts_cumulative;
  o.trace = r.trace;
  return o;
}

AlgoOutcome failed_outcome(const std::string& status) {
  AlgoOutcome o;
  o.status = status;
  return o;
}

AlgoOutcome from_baseline_result(const BaselineResult& r) {
  AlgoOutcome o;
  o.iterations = r.rounds;
  o.broadcasts = r.broadcasts_total;
  o.estimates = r.estimates;
  o.estimates_per_it = r.estimates_per_round;
  o.broadcasts_cumulative = r.broadcasts_cumulative;
  return o;
}

AlgoOutcome execute_algo(const ExperimentConfig& cfg, const std::string& algo,
                         const RunData& d, int run) {
  try {
    if (algo == "bp" || algo == "mf") {
      try {
        return from_sync_result(run_sync(d.topo, d.links, mp_options(cfg, algo)), true);
      } catch (const NotConverged& nc) {
        AlgoOutcome o = from_sync_result(nc.partial, false);
        o.status = "not_converged";
        return o;
      }
    }
    if (algo == "ats") {
      auto rng = make_rng(cfg.seed, static_cast<uint64_t>(run), Stream::Ats);
      return from_baseline_result(
          run_ats(d.topo, d.clocks, d.delays, cfg.sigma_w, ats_params(cfg), rng));
    }
    if (algo == "admm") {
      auto rng = make_rng(cfg.seed, static_cast<uint64_t>(run), Stream::Admm);
      return from_baseline_result(run_admm(d.topo, d.clocks, admm_params(cfg), rng));
    }
    if (algo == "lc") {
      return from_baseline_result(run_lc(d.topo, d.links, lc_params(cfg)));
    }
    throw ConfigError("unknown algorithm '" + algo + "'");
  } catch (const DegenerateLink&) {
    return failed_outcome("degenerate_link");
  } catch (const DegenerateMessage&) {
    return failed_outcome("degenerate_message");
  } catch (const SingularBelief&) {
    return failed_outcome("singular_belief");
  } catch (const SingularPosterior&) {
    return failed_outcome("singular_posterior");
  } catch (const InvalidSkew&) {
    return failed_outcome("invalid_skew");
  } catch (const ConfigError&) {
    return failed_outcome("config_error");
  }
}

std::vector<std::string> metric_header(const ExperimentConfig& cfg,
                                       const std::vector<int>& agent_ids, bool with_bcrb) {
  std::vector<std::string> h = {"run",          "algorithm",     "status",
                                "iterations",   "broadcasts",    "rmse_phase_s",
                                "rmse_skew_ppm"};
  (void)cfg;
  for (int id : agent_ids) h.push_back("err_phase_" + std::to_string(id));
  for (int id : agent_ids) h.push_back("err_skew_ppm_" + std::to_string(id));
  if (with_bcrb) {
    h.push_back("bcrb_rmse_phase_s");
    h.push_back("bcrb_rmse_skew_ppm");
  }
  return h;
}

}  // namespace

void run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                    const std::string& algo_override, bool bcrb_override,
                    bool trace_override) {
  ExperimentConfig c = cfg;
  if (!algo_override.empty()) c.algo = algo_override;
  if (bcrb_override) c.bcrb = true;
  if (trace_override) c.trace = true;
  const std::vector<std::string> algos = algo_list(c.algo);

  std::filesystem::create_directories(out_dir);

  // The agent id set is stable across runs: node count and master ids are
  // config constants, only the edges may be redrawn.
  int node_count = c.n;
  if (c.topology == ExperimentConfig::TopologyKind::Grid) node_count = c.rows * c.cols;
  if (c.topology == ExperimentConfig::TopologyKind::Explicit) {
    node_count = explicit_node_count(c.edges);
  }
  std::vector<int> agent_ids;
  for (int id = 1; id <= node_count; ++id) {
    if (!std::binary_search(c.masters.begin(), c.masters.end(), id)) {
      agent_ids.push_back(id);
    }
  }

  CsvWriter metrics(out_dir / "metrics.csv");
  metrics.write_row(metric_header(c, agent_ids, c.bcrb));

  std::unique_ptr<CsvWriter> bcrb_csv;
  if (c.bcrb) {
    bcrb_csv = std::make_unique<CsvWriter>(out_dir / "bcrb.csv");
    bcrb_csv->write_row({"run", "node", "bcrb_phase_s", "bcrb_skew_ppm"});
  }
  std::unique_ptr<CsvWriter> conv_csv;
  if (c.convergence) {
    conv_csv = std::make_unique<CsvWriter>(out_dir / "convergence.csv");
    conv_csv->write_row(
        {"run", "algorithm", "iteration", "broadcasts", "rmse_phase_s", "rmse_skew_ppm"});
  }

  const BcrbDesign design = c.bcrb_design == "reference" ? BcrbDesign::ReferenceSchedule
                                                         : BcrbDesign::LocalSchedule;

  for (int run = 0; run < c.runs; ++run) {
    RunData data;
    std::string run_status = "ok";
    try {
      data = make_run_data(c, run);
    } catch (const TopologyGenerationFailed&) {
      run_status = "topology_failed";
    } catch (const DegenerateLink&) {
      run_status = "degenerate_link";
    }

    // Per-node bounds are per-run (the topology may be), written before the
    // algorithm rows so file layout is independent of algorithm failures.
    std::vector<double> bound_phase(agent_ids.size(), kNan);
    std::vector<double> bound_skew(agent_ids.size(), kNan);
    if (c.bcrb && run_status == "ok") {
      try {
        const BcrbBounds b =
            bcrb_bounds(data.topo, data.schedules, data.delays, c.sigma_w,
                        c.sigma_alpha_sq, beta_prior_var(c), design);
        for (std::size_t k = 0; k < b.agent_ids.size(); ++k) {
          bound_phase[k] = b.bound_phase_s[k];
          bound_skew[k] = b.bound_skew_ppm[k];
        }
      } catch (const SingularFisher&) {
        // leave NaN bounds
      }
      for (std::size_t k = 0; k < agent_ids.size(); ++k) {
        bcrb_csv->write_row({format_int(run), format_int(agent_ids[k]),
                             format_double(bound_phase[k]), format_double(bound_skew[k])});
      }
    }

    const std::vector<ClockParams> truth =
        run_status == "ok" ? agent_truth(data, agent_ids) : std::vector<ClockParams>{};

    for (const std::string& algo : algos) {
      AlgoOutcome out;
      if (run_status == "ok") {
        out = execute_algo(c, algo, data, run);
      } else {
        out.status = run_status;
      }

      const RmseMode mode = resolve_rmse_mode(c, algo);
      double rmse_phase = kNan, rmse_skew = kNan;
      std::vector<double> err_phase(agent_ids.size(), kNan);
      std::vector<double> err_skew(agent_ids.size(), kNan);
      if (!out.estimates.empty()) {
        const ErrorStats es = error_stats(out.estimates, truth, mode);
        rmse_phase = es.rmse_phase_s;
        rmse_skew = es.rmse_skew_ppm;
        err_phase = es.err_phase_s;
        err_skew = es.err_skew_ppm;
      }

      std::vector<std::string> row = {format_int(run),
                                      algo,
                                      out.status,
                                      format_int(out.iterations),
                                      format_int(out.broadcasts),
                                      format_double(rmse_phase),
                                      format_double(rmse_skew)};
      for (double e : err_phase) row.push_back(format_double(e));
      for (double e : err_skew) row.push_back(format_double(e));
      if (c.bcrb) {
        row.push_back(format_double(rmse(bound_phase)));
        row.push_back(format_double(rmse(bound_skew)));
      }
      metrics.write_row(row);

      if (conv_csv && !out.estimates_per_it.empty()) {
        for (std::size_t it = 0; it < out.estimates_per_it.size(); ++it) {
          const ErrorStats es = error_stats(out.estimates_per_it[it], truth, mode);
          const long long bc = it < out.broadcasts_cumulative.size()
                                   ? out.broadcasts_cumulative[it]
                                   : 0;
          conv_csv->write_row({format_int(run), algo, format_int(static_cast<long long>(it) + 1),
                               format_int(bc), format_double(es.rmse_phase_s),
                               format_double(es.rmse_skew_ppm)});
        }
      }

      if (c.trace) {
        CsvWriter tr(out_dir / ("trace_" + algo + "_run" + std::to_string(run) + ".csv"));
        tr.write_row({"iteration", "node", "mean_lambda", "mean_nu", "var_lambda",
                      "var_nu", "mean_change"});
        if (algo == "bp" || algo == "mf") {
          for (const TraceRow& t : out.trace) {
            tr.write_row({format_int(t.iteration), format_int(t.node),
                          format_double(t.mean_lambda), format_double(t.mean_nu),
                          format_double(t.var_lambda), format_double(t.var_nu),
                          format_double(t.mean_change)});
          }
        } else {
          // Baselines expose implied transformed estimates, no covariances.
          for (std::size_t it = 0; it < out.estimates_per_it.size(); ++it) {
            for (std::size_t k = 0; k < agent_ids.size(); ++k) {
              const ClockParams& est = out.estimates_per_it[it][k];
              double ml = kNan, mn = kNan;
              if (std::isfinite(est.alpha) && est.alpha > 0.0) {
                ml = 1.0 / est.alpha;
                mn = est.beta / est.alpha;
              }
              tr.write_row({format_int(static_cast<long long>(it) + 1),
                            format_int(agent_ids[k]), format_double(ml),
                            format_double(mn), format_double(kNan), format_double(kNan),
                            format_double(kNan)});
            }
          }
        }
      }
    }
  }
}

}  // namespace syncsim
