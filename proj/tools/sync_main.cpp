#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "syncsim/csv.hpp"
#include "syncsim/errors.hpp"
#include "syncsim/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Distributed clock synchronization simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::string algo;
  bool with_bcrb = false;
  bool with_trace = false;
  int topo_run = 0;
  bool preview = false;

  CLI::App* run = app.add_subcommand("run", "Run a configured experiment");
  run->add_option("--config", config_path, "Experiment config file")->required();
  run->add_option("--out", out_dir, "Output directory for CSV results")->required();
  CLI::Option* run_seed = run->add_option("--seed", seed, "Override the config seed");
  run->add_option("--algo", algo, "Override the configured algorithm")
      ->check(CLI::IsMember({"bp", "mf", "ats", "admm", "lc", "all"}));
  run->add_flag("--bcrb", with_bcrb, "Also compute per-node posterior bounds");
  run->add_flag("--trace", with_trace, "Write per-iteration trace files");

  CLI::App* topo = app.add_subcommand("topo", "Generate and print a topology");
  topo->add_option("--config", config_path, "Experiment config file")->required();
  CLI::Option* topo_seed = topo->add_option("--seed", seed, "Override the config seed");
  topo->add_option("--run", topo_run, "Run index whose topology to show");
  topo->add_flag("--preview", preview, "Print the topology as CSV (default action)");

  CLI11_PARSE(app, argc, argv);

  try {
    syncsim::ExperimentConfig cfg = syncsim::load_config(config_path);
    if (run->parsed()) {
      if (run_seed->count() > 0) cfg.seed = seed;
      syncsim::run_experiment(cfg, out_dir, algo, with_bcrb, with_trace);
      return 0;
    }
    // topo
    if (topo_seed->count() > 0) cfg.seed = seed;
    const syncsim::Topology t = syncsim::make_topology(cfg, topo_run);
    std::cout << "node,x,y,is_master\n";
    for (int id = 1; id <= t.n; ++id) {
      std::cout << id << ',' << syncsim::format_double(t.positions[id - 1].x()) << ','
                << syncsim::format_double(t.positions[id - 1].y()) << ','
                << (t.is_master(id) ? 1 : 0) << '\n';
    }
    std::cout << "\nedge,i,j,distance_m\n";
    for (std::size_t e = 0; e < t.edges.size(); ++e) {
      std::cout << e << ',' << t.edges[e].first << ',' << t.edges[e].second << ','
                << syncsim::format_double(t.edge_distance(static_cast<int>(e))) << '\n';
    }
    return 0;
  } catch (const syncsim::SyncError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  }
}
