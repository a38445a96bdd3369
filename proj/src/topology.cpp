#include "syncsim/topology.hpp"

#include <algorithm>
#include <queue>
#include <string>

namespace syncsim {

namespace {

void check_masters(int n, const std::vector<int>& masters) {
  for (std::size_t k = 0; k < masters.size(); ++k) {
    const int id = masters[k];
    if (id < 1 || id > n) {
      throw ConfigError("master id out of range: " + std::to_string(id));
    }
    if (std::count(masters.begin(), masters.end(), id) > 1) {
      throw ConfigError("duplicate master id: " + std::to_string(id));
    }
  }
}

bool connected(const Topology& topo) {
  if (topo.n == 0) return false;
  std::vector<char> seen(static_cast<std::size_t>(topo.n), 0);
  std::queue<int> q;
  q.push(1);
  seen[0] = 1;
  int reached = 1;
  while (!q.empty()) {
    const int v = q.front();
    q.pop();
    for (int w : topo.neighbors[v - 1]) {
      if (!seen[w - 1]) {
        seen[w - 1] = 1;
        ++reached;
        q.push(w);
      }
    }
  }
  return reached == topo.n;
}

}  // namespace

bool Topology::is_master(int id) const {
  return std::binary_search(masters.begin(), masters.end(), id);
}

double Topology::edge_distance(int e) const {
  const auto& [i, j] = edges[static_cast<std::size_t>(e)];
  return (positions[i - 1] - positions[j - 1]).norm();
}

void Topology::rebuild_neighbors() {
  neighbors.assign(static_cast<std::size_t>(n), {});
  for (const auto& [i, j] : edges) {
    neighbors[i - 1].push_back(j);
    neighbors[j - 1].push_back(i);
  }
  for (auto& nb : neighbors) std::sort(nb.begin(), nb.end());
}

Topology random_topology(int n, const std::vector<int>& masters, double area_m,
                         double comm_radius_m, std::mt19937_64& rng,
                         int max_attempts) {
  if (n < 2) throw ConfigError("random_topology: need at least two nodes");
  check_masters(n, masters);
  std::uniform_real_distribution<double> u(0.0, area_m);
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    Topology topo;
    topo.n = n;
    topo.masters = masters;
    std::sort(topo.masters.begin(), topo.masters.end());
    topo.positions.resize(static_cast<std::size_t>(n));
    for (int id = 1; id <= n; ++id) {
      const double x = u(rng);
      const double y = u(rng);
      topo.positions[id - 1] = Eigen::Vector2d(x, y);
    }
    for (int i = 1; i <= n; ++i) {
      for (int j = i + 1; j <= n; ++j) {
        if (topo.is_master(i) && topo.is_master(j)) continue;
        if ((topo.positions[i - 1] - topo.positions[j - 1]).norm() <= comm_radius_m) {
          topo.edges.emplace_back(i, j);
        }
      }
    }
    topo.rebuild_neighbors();
    if (connected(topo)) return topo;
  }
  throw TopologyGenerationFailed(
      "no connected placement after " + std::to_string(max_attempts) +
      " attempts (n=" + std::to_string(n) + ", radius=" +
      std::to_string(comm_radius_m) + " m)");
}

Topology grid_topology(int rows, int cols, double spacing_m,
                       const std::vector<int>& masters) {
  if (rows < 1 || cols < 1 || rows * cols < 2) {
    throw ConfigError("grid_topology: need at least two nodes");
  }
  const int n = rows * cols;
  check_masters(n, masters);
  Topology topo;
  topo.n = n;
  topo.masters = masters;
  std::sort(topo.masters.begin(), topo.masters.end());
  topo.positions.resize(static_cast<std::size_t>(n));
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const int id = r * cols + c + 1;
      topo.positions[id - 1] = Eigen::Vector2d(c * spacing_m, r * spacing_m);
      if (c + 1 < cols) topo.edges.emplace_back(id, id + 1);
      if (r + 1 < rows) topo.edges.emplace_back(id, id + cols);
    }
  }
  std::sort(topo.edges.begin(), topo.edges.end());
  // A grid of reference nodes only could create master-master links; drop them
  // for consistency with the random generator.
  topo.edges.erase(std::remove_if(topo.edges.begin(), topo.edges.end(),
                                  [&](const std::pair<int, int>& e) {
                                    return topo.is_master(e.first) &&
                                           topo.is_master(e.second);
                                  }),
                   topo.edges.end());
  topo.rebuild_neighbors();
  if (!connected(topo)) {
    throw TopologyGenerationFailed("grid disconnected after master-master pruning");
  }
  return topo;
}

std::vector<int> hop_distances(const Topology& topo, const std::vector<int>& sources) {
  std::vector<int> dist(static_cast<std::size_t>(topo.n), -1);
  std::queue<int> q;
  for (int s : sources) {
    if (s < 1 || s > topo.n) throw ConfigError("hop_distances: source id out of range");
    dist[s - 1] = 0;
    q.push(s);
  }
  while (!q.empty()) {
    const int v = q.front();
    q.pop();
    for (int w : topo.neighbors[v - 1]) {
      if (dist[w - 1] < 0) {
        dist[w - 1] = dist[v - 1] + 1;
        q.push(w);
      }
    }
  }
  return dist;
}

int graph_diameter(const Topology& topo) {
  int diam = 0;
  for (int v = 1; v <= topo.n; ++v) {
    const auto d = hop_distances(topo, {v});
    for (int x : d) diam = std::max(diam, x);
  }
  return diam;
}

std::vector<double> link_delays(const Topology& topo, double t_proc_s,
                                double speed_mps) {
  std::vector<double> delays(topo.edges.size());
  for (std::size_t e = 0; e < topo.edges.size(); ++e) {
    delays[e] = t_proc_s + topo.edge_distance(static_cast<int>(e)) / speed_mps;
  }
  return delays;
}

}  // namespace syncsim
