#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "syncsim/dense_posterior.hpp"
#include "syncsim/experiment.hpp"
#include "syncsim/message_passing.hpp"
#include "syncsim/metrics.hpp"
#include "syncsim/rng.hpp"

using namespace syncsim;

namespace {

ExperimentConfig tree_config(unsigned long long seed, int n_nodes) {
  ExperimentConfig cfg;
  cfg.topology = ExperimentConfig::TopologyKind::Explicit;
  auto rng = make_rng(seed, 0, Stream::Oracle);
  cfg.edges = oracles::random_tree_edges(n_nodes, rng);
  cfg.masters = {1};
  cfg.k_fwd = 5;
  cfg.k_rev = 5;
  cfg.seed = seed;
  return cfg;
}

ExperimentConfig loopy_config(unsigned long long seed) {
  ExperimentConfig cfg;  // 26-node random network, one reference node
  cfg.seed = seed;
  return cfg;
}

MpOptions options_for(const ExperimentConfig& cfg, MpAlgo algo, double tol, int max_iter) {
  MpOptions o;
  o.algo = algo;
  o.model = model_params(cfg);
  o.tol = tol;
  o.max_iter = max_iter;
  return o;
}

// Largest relative deviations between a belief set and the dense marginals,
// in the shared node-epoch frames. Means and covariances are reported
// separately: the dense oracle's covariance carries the conditioning floor of
// one big equilibrated solve, while its means cancel most of that error.
struct BeliefDeviation {
  double mean = 0.0;
  double cov = 0.0;
};

BeliefDeviation belief_deviation(const SyncResult& res,
                                 const std::vector<NodeMarginal>& exact) {
  REQUIRE(res.agent_ids.size() == exact.size());
  BeliefDeviation worst;
  for (std::size_t a = 0; a < exact.size(); ++a) {
    REQUIRE(res.agent_ids[a] == exact[a].node);
    const Vec2d mean = gaussian_mean(res.beliefs[a]);
    const Mat2d cov = gaussian_cov(res.beliefs[a]);
    worst.mean = std::max(worst.mean, (mean - exact[a].mean).norm() / exact[a].mean.norm());
    worst.cov = std::max(worst.cov, (cov - exact[a].cov).norm() / exact[a].cov.norm());
  }
  return worst;
}

}  // namespace

TEST_CASE("belief propagation is exact on trees") {
  for (unsigned long long seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
    const ExperimentConfig cfg = tree_config(seed, 4 + static_cast<int>(seed % 7));
    const RunData data = make_run_data(cfg, 0);
    const auto exact = exact_marginals(data.topo, data.links, model_params(cfg));

    for (MpSchedule sched : {MpSchedule::Parallel, MpSchedule::SerialFromSource}) {
      MpOptions o = options_for(cfg, MpAlgo::Bp, 1e-12, 100);
      o.schedule = sched;
      const SyncResult res = run_sync(data.topo, data.links, o);
      CHECK(res.converged);
      const BeliefDeviation dev = belief_deviation(res, exact);
      CHECK(dev.mean < 1e-9);
      CHECK(dev.cov < 1e-6);
    }
  }
}

TEST_CASE("two-node network settles immediately onto the dense answer") {
  ExperimentConfig cfg;
  cfg.topology = ExperimentConfig::TopologyKind::Explicit;
  cfg.edges = {{1, 2}};
  cfg.masters = {1};
  cfg.seed = 9;
  const RunData data = make_run_data(cfg, 0);
  const SyncResult res =
      run_sync(data.topo, data.links, options_for(cfg, MpAlgo::Bp, 1e-12, 10));
  CHECK(res.converged);
  CHECK(res.iterations <= 3);
  const auto exact = exact_marginals(data.topo, data.links, model_params(cfg));
  const BeliefDeviation dev = belief_deviation(res, exact);
  CHECK(dev.mean < 1e-10);
  CHECK(dev.cov < 1e-6);
}

TEST_CASE("noise-free exchanges recover the true clocks") {
  ExperimentConfig cfg = tree_config(6, 6);
  cfg.sigma_w = 0.0;  // exact stamps on the wire
  const RunData data = make_run_data(cfg, 0);
  MpOptions o = options_for(cfg, MpAlgo::Bp, 1e-13, 100);
  o.model.sigma_w = 1e-12;  // estimator still needs a positive noise scale
  const SyncResult res = run_sync(data.topo, data.links, o);
  REQUIRE(res.converged);
  for (std::size_t a = 0; a < res.agent_ids.size(); ++a) {
    const ClockParams& truth = data.clocks[res.agent_ids[a] - 1];
    CHECK(res.estimates[a].alpha == doctest::Approx(truth.alpha).epsilon(1e-9));
    CHECK(res.estimates[a].beta == doctest::Approx(truth.beta).epsilon(1e-8));
  }
}

TEST_CASE("both estimators and the dense solver agree at convergence") {
  const ExperimentConfig cfg = loopy_config(42);
  const RunData data = make_run_data(cfg, 0);
  const auto exact = exact_marginals(data.topo, data.links, model_params(cfg));

  const SyncResult bp =
      run_sync(data.topo, data.links, options_for(cfg, MpAlgo::Bp, 1e-12, 3000));
  const SyncResult mf =
      run_sync(data.topo, data.links, options_for(cfg, MpAlgo::Mf, 1e-12, 3000));
  REQUIRE(bp.converged);
  REQUIRE(mf.converged);

  for (std::size_t a = 0; a < exact.size(); ++a) {
    const ClockParams dense = extract_clock_estimate(
        gaussian_from_moments(exact[a].mean, exact[a].cov), bp.epochs[exact[a].node - 1]);
    // Means of loopy Gaussian message passing are exact at the fixed point;
    // only the spreads are approximate.
    CHECK(bp.estimates[a].alpha == doctest::Approx(dense.alpha).epsilon(1e-8));
    CHECK(bp.estimates[a].beta == doctest::Approx(dense.beta).epsilon(1e-6));
    CHECK(mf.estimates[a].alpha == doctest::Approx(dense.alpha).epsilon(1e-8));
    CHECK(mf.estimates[a].beta == doctest::Approx(dense.beta).epsilon(1e-6));
  }
}

TEST_CASE("damping does not move the fixed point") {
  const ExperimentConfig cfg = loopy_config(7);
  const RunData data = make_run_data(cfg, 0);
  MpOptions plain = options_for(cfg, MpAlgo::Bp, 1e-12, 3000);
  MpOptions damped = plain;
  damped.damping = 0.7;
  const SyncResult a = run_sync(data.topo, data.links, plain);
  const SyncResult b = run_sync(data.topo, data.links, damped);
  REQUIRE(a.converged);
  REQUIRE(b.converged);
  for (std::size_t k = 0; k < a.estimates.size(); ++k) {
    CHECK(a.estimates[k].alpha == doctest::Approx(b.estimates[k].alpha).epsilon(1e-8));
    CHECK(a.estimates[k].beta ==
          doctest::Approx(b.estimates[k].beta).epsilon(1e-6).scale(1.0));
  }
}

TEST_CASE("belief variances never increase along the iterations") {
  auto check_monotone = [](const ExperimentConfig& cfg) {
    const RunData data = make_run_data(cfg, 0);
    MpOptions o = options_for(cfg, MpAlgo::Bp, 1e-12, 120);
    o.collect_trace = true;
    SyncResult res;
    try {
      res = run_sync(data.topo, data.links, o);
    } catch (const NotConverged& e) {
      res = e.partial;  // monotonicity must hold on the partial trace too
    }
    std::vector<double> last_l(static_cast<std::size_t>(data.topo.n) + 1, 0.0);
    std::vector<double> last_n(static_cast<std::size_t>(data.topo.n) + 1, 0.0);
    std::vector<char> seen(static_cast<std::size_t>(data.topo.n) + 1, 0);
    for (const TraceRow& row : res.trace) {
      const auto id = static_cast<std::size_t>(row.node);
      if (seen[id]) {
        CHECK(row.var_lambda <= last_l[id] + 1e-12 * last_l[id]);
        CHECK(row.var_nu <= last_n[id] + 1e-12 * last_n[id]);
      }
      last_l[id] = row.var_lambda;
      last_n[id] = row.var_nu;
      seen[id] = 1;
    }
  };

  SUBCASE("anchored network") { check_monotone(loopy_config(11)); }
  SUBCASE("reference-free network with finite priors") {
    ExperimentConfig cfg = loopy_config(12);
    cfg.masters = {};
    check_monotone(cfg);
  }
}

TEST_CASE("running out of iterations reports the partial state") {
  const ExperimentConfig cfg = loopy_config(13);
  const RunData data = make_run_data(cfg, 0);
  const MpOptions o = options_for(cfg, MpAlgo::Bp, 1e-12, 3);
  bool threw = false;
  try {
    run_sync(data.topo, data.links, o);
  } catch (const NotConverged& e) {
    threw = true;
    CHECK(e.partial.iterations == 3);
    CHECK_FALSE(e.partial.converged);
    CHECK(e.partial.mean_change_history.size() == 3);
    CHECK(e.partial.beliefs.size() == 25);
    // The partial still carries extractable estimates.
    REQUIRE(e.partial.estimates.size() == 25);
    for (const ClockParams& c : e.partial.estimates) CHECK(c.alpha > 0.0);
  }
  CHECK(threw);
}

TEST_CASE("reference-free networks are estimated against their prior frame") {
  ExperimentConfig cfg = loopy_config(14);
  cfg.masters = {};
  const RunData data = make_run_data(cfg, 0);
  const SyncResult res =
      run_sync(data.topo, data.links, options_for(cfg, MpAlgo::Bp, 1e-10, 3000));
  REQUIRE(res.converged);
  REQUIRE(res.estimates.size() == 26);
  std::vector<ClockParams> truth;
  for (int id : res.agent_ids) truth.push_back(data.clocks[id - 1]);
  const ErrorStats err = error_stats(res.estimates, truth, RmseMode::NetworkMean);
  // Internal agreement is what a frame-free estimate can promise.
  CHECK(err.rmse_phase_s < 1e-4);
  CHECK(err.rmse_skew_ppm < 10.0);
}

TEST_CASE("trace and per-iteration estimates follow the iteration count") {
  const ExperimentConfig cfg = loopy_config(15);
  const RunData data = make_run_data(cfg, 0);
  MpOptions o = options_for(cfg, MpAlgo::Bp, 1e-9, 400);
  o.collect_trace = true;
  o.collect_estimates_per_iter = true;
  const SyncResult res = run_sync(data.topo, data.links, o);
  REQUIRE(res.converged);
  const std::size_t agents = res.agent_ids.size();
  CHECK(res.trace.size() == agents * static_cast<std::size_t>(res.iterations));
  CHECK(res.estimates_per_iter.size() == static_cast<std::size_t>(res.iterations));
  CHECK(res.broadcasts_cumulative.size() == static_cast<std::size_t>(res.iterations));
  CHECK(res.mean_change_history.size() == static_cast<std::size_t>(res.iterations));
  // Rows come out iteration-major in agent order, 1-based iterations.
  CHECK(res.trace.front().iteration == 1);
  CHECK(res.trace.back().iteration == res.iterations);
  // The stopping rule is the last recorded change.
  CHECK(res.mean_change_history.back() < 1e-9);
  // Final per-iteration estimates equal the returned ones.
  for (std::size_t a = 0; a < agents; ++a) {
    CHECK(res.estimates_per_iter.back()[a].alpha == res.estimates[a].alpha);
    CHECK(res.estimates_per_iter.back()[a].beta == res.estimates[a].beta);
  }
}

TEST_CASE("broadcast accounting matches the protocol") {
  ExperimentConfig cfg;
  cfg.topology = ExperimentConfig::TopologyKind::Explicit;
  cfg.edges = {{1, 2}, {2, 3}, {3, 4}};  // path, reference at 1
  cfg.masters = {1};
  cfg.k_fwd = 4;
  cfg.k_rev = 3;
  cfg.seed = 16;
  const RunData data = make_run_data(cfg, 0);

  SUBCASE("parallel: every agent speaks every iteration") {
    const SyncResult res =
        run_sync(data.topo, data.links, options_for(cfg, MpAlgo::Bp, 1e-11, 100));
    REQUIRE(res.converged);
    // Campaign packets: (4 + 3) per link.
    CHECK(res.measurement_broadcasts == 3 * 7);
    const long long masters = 1;
    for (int t = 1; t <= res.iterations; ++t) {
      CHECK(res.broadcasts_cumulative[t - 1] ==
            res.measurement_broadcasts + masters + 3LL * t);
    }
  }

  SUBCASE("serial: the wavefront admits one level per iteration") {
    MpOptions o = options_for(cfg, MpAlgo::Bp, 1e-11, 100);
    o.schedule = MpSchedule::SerialFromSource;
    const SyncResult res = run_sync(data.topo, data.links, o);
    REQUIRE(res.converged);
    // Levels: node 2 -> 1, node 3 -> 2, node 4 -> 3; node of level L first
    // speaks at iteration L + 1.
    const long long base = res.measurement_broadcasts + 1;
    CHECK(res.broadcasts_cumulative[0] == base + 0);       // t=1: nobody yet
    CHECK(res.broadcasts_cumulative[1] == base + 1);       // t=2: node 2
    CHECK(res.broadcasts_cumulative[2] == base + 1 + 2);   // t=3: nodes 2,3
    CHECK(res.broadcasts_cumulative[3] == base + 3 + 3);   // t=4: all three
  }
}

TEST_CASE("mean-field serial sweep converges on the wavefront") {
  const ExperimentConfig cfg = loopy_config(17);
  const RunData data = make_run_data(cfg, 0);
  MpOptions o = options_for(cfg, MpAlgo::Mf, 1e-10, 2000);
  o.schedule = MpSchedule::SerialFromSource;
  const SyncResult serial = run_sync(data.topo, data.links, o);
  o.schedule = MpSchedule::Parallel;
  const SyncResult parallel = run_sync(data.topo, data.links, o);
  REQUIRE(serial.converged);
  REQUIRE(parallel.converged);
  for (std::size_t a = 0; a < serial.estimates.size(); ++a) {
    CHECK(serial.estimates[a].alpha ==
          doctest::Approx(parallel.estimates[a].alpha).epsilon(1e-7));
    CHECK(serial.estimates[a].beta ==
          doctest::Approx(parallel.estimates[a].beta).epsilon(1e-5).scale(1.0));
  }
}

TEST_CASE("estimator options are validated") {
  const ExperimentConfig cfg = tree_config(18, 4);
  const RunData data = make_run_data(cfg, 0);
  MpOptions o = options_for(cfg, MpAlgo::Bp, 1e-9, 50);

  MpOptions bad = o;
  bad.model.sigma_w = 0.0;
  CHECK_THROWS_AS(run_sync(data.topo, data.links, bad), ConfigError);
  bad = o;
  bad.damping = 0.0;
  CHECK_THROWS_AS(run_sync(data.topo, data.links, bad), ConfigError);
  bad = o;
  bad.damping = 1.5;
  CHECK_THROWS_AS(run_sync(data.topo, data.links, bad), ConfigError);
  bad = o;
  bad.max_iter = 0;
  CHECK_THROWS_AS(run_sync(data.topo, data.links, bad), ConfigError);

  Topology all_masters = data.topo;
  all_masters.masters = {1, 2, 3, 4};
  CHECK_THROWS_AS(run_sync(all_masters, data.links, o), ConfigError);
}
