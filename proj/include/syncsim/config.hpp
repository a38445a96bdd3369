#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace syncsim {

/// Flat experiment description, one key per line in the file form
/// (`key = value`, '#' comments). Unknown keys are errors; every field below
/// documents its key name and default. Negative sentinel values on the
/// `prior_*` and `admm_phase_obs_sigma` fields mean "derive from the other
/// fields" at run time.
struct ExperimentConfig {
  enum class TopologyKind { Random, Grid, Explicit };

  // -- topology --------------------------------------------------------
  TopologyKind topology = TopologyKind::Random;  // topology = random|grid|explicit
  int n = 26;                                    // n
  double area_m = 1000.0;                        // area_m
  double radius_m = 300.0;                       // radius_m
  int rows = 0;                                  // rows
  int cols = 0;                                  // cols
  double grid_spacing_m = 100.0;                 // grid_spacing_m
  std::vector<std::pair<int, int>> edges;        // edges = 1-2,2-3,...
  std::vector<int> masters{1};                   // masters = 1,2 (empty allowed)
  bool topology_per_run = true;                  // topology_per_run

  // -- measurement campaign ---------------------------------------------
  int k_fwd = 20;                      // k_fwd
  int k_rev = 20;                      // k_rev
  double sigma_w = 93e-9;              // sigma_w
  double t_c = 7.6e-6;                 // t_c (processing delay, s)
  double spacing = 0.01;               // spacing (s between packets)
  double t0 = 0.0;                     // t0
  double propagation_speed = 299792458.0;  // propagation_speed (m/s)
  bool concurrent_links = true;        // link_schedule = concurrent|sequential

  // -- clock population and priors --------------------------------------
  double sigma_alpha_sq = 1e-8;        // sigma_alpha_sq
  double beta_min = -10.0;             // beta_min
  double beta_max = 10.0;              // beta_max
  double prior_sigma_lambda_sq = -1.0; // prior_sigma_lambda_sq (<0: sigma_alpha_sq)
  double prior_sigma_nu_sq = -1.0;     // prior_sigma_nu_sq (<0: (bmax-bmin)^2/12)

  // -- estimator ---------------------------------------------------------
  std::string algo = "bp";        // algo = bp|mf|ats|admm|lc|all
  std::string schedule = "auto";  // schedule = auto|parallel|serial
  double tol = 1e-9;              // tol
  int max_iter = 100;             // max_iter
  double damping = 1.0;           // damping

  // -- Monte Carlo -------------------------------------------------------
  int runs = 100;                   // runs
  unsigned long long seed = 1;      // seed
  std::string rmse_mode = "auto";   // rmse_mode = auto|truth|network_mean

  // -- baselines ----------------------------------------------------------
  double ats_rho = 0.6;             // ats_rho (all three filters)
  int ats_rounds = 600;             // ats_rounds
  double ats_round_spacing = 0.01;  // ats_round_spacing
  double admm_rho = 0.5;            // admm_rho
  double admm_gain = 0.5;           // admm_gain
  int admm_rounds = 400;            // admm_rounds
  int admm_inner = 1;               // admm_inner
  double admm_dt = 0.01;            // admm_dt
  double admm_skew_obs_ppm = 0.5;   // admm_skew_obs_ppm
  double admm_phase_obs_sigma = -1.0;  // admm_phase_obs_sigma (<0: sigma_w/sqrt(2))
  double lc_lambda = 0.9;           // lc_lambda
  int lc_sweeps = 300;              // lc_sweeps

  // -- bound and outputs ---------------------------------------------------
  bool bcrb = false;                  // bcrb
  std::string bcrb_design = "local";  // bcrb_design = local|reference
  bool trace = false;                 // trace
  bool convergence = false;           // convergence (per-iteration RMSE rows)
};

/// Parses the textual form; throws ConfigError on unknown keys, bad values,
/// or inconsistent combinations.
ExperimentConfig parse_config_text(const std::string& text);

ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace syncsim
