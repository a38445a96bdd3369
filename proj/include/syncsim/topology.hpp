#pragma once

#include <Eigen/Core>
#include <random>
#include <utility>
#include <vector>

#include "syncsim/errors.hpp"

namespace syncsim {

/// Connected network of n nodes with fixed positions. Node ids are 1-based
/// everywhere a user sees them (API, configs, CSV); internal arrays index by
/// id - 1. Edges are undirected, stored with i < j and sorted, so the edge
/// index doubles as a stable link id.
struct Topology {
  int n = 0;
  std::vector<Eigen::Vector2d> positions;   // meters, positions[id - 1]
  std::vector<std::pair<int, int>> edges;   // (i, j) with i < j, lexicographic
  std::vector<int> masters;                 // sorted 1-based ids, may be empty
  std::vector<std::vector<int>> neighbors;  // neighbors[id - 1], ascending ids

  bool is_master(int id) const;
  double edge_distance(int e) const;

  /// Rebuilds the adjacency lists from `edges`; call after editing edges.
  void rebuild_neighbors();
};

/// Uniform node placement on an area_m x area_m square; every pair within
/// comm_radius_m becomes a link, except pairs of reference nodes (they have
/// nothing to learn from each other). Resamples all positions until the graph
/// is connected; throws TopologyGenerationFailed after max_attempts.
Topology random_topology(int n, const std::vector<int>& masters, double area_m,
                         double comm_radius_m, std::mt19937_64& rng,
                         int max_attempts = 200);

/// rows x cols grid with the given spacing, node 1 at the origin corner, ids
/// row-major, links between horizontal/vertical neighbors.
Topology grid_topology(int rows, int cols, double spacing_m,
                       const std::vector<int>& masters);

/// BFS hop count from the given source set (1-based ids); unreachable nodes
/// get -1, sources get 0. Result indexed by id - 1.
std::vector<int> hop_distances(const Topology& topo, const std::vector<int>& sources);

/// Graph diameter in hops (maximum over all pairs); assumes connectivity.
int graph_diameter(const Topology& topo);

/// Fixed per-link propagation delay: processing time plus line-of-sight
/// travel at the given speed. Symmetric by construction. Indexed by edge id.
std::vector<double> link_delays(const Topology& topo, double t_proc_s,
                                double speed_mps);

}  // namespace syncsim
