#include "syncsim/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "syncsim/errors.hpp"

namespace syncsim {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const char* end = v.data() + v.size();
  const auto res = std::from_chars(v.data(), end, out);
  if (res.ec != std::errc{} || res.ptr != end) {
    throw ConfigError("config key '" + key + "': invalid number '" + v + "'");
  }
  return out;
}

long long parse_ll(const std::string& key, const std::string& v) {
  long long out = 0;
  const char* end = v.data() + v.size();
  const auto res = std::from_chars(v.data(), end, out);
  if (res.ec != std::errc{} || res.ptr != end) {
    throw ConfigError("config key '" + key + "': invalid integer '" + v + "'");
  }
  return out;
}

int parse_int(const std::string& key, const std::string& v) {
  return static_cast<int>(parse_ll(key, v));
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key '" + key + "': invalid boolean '" + v + "'");
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      parts.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(trim(cur));
  return parts;
}

std::vector<int> parse_id_list(const std::string& key, const std::string& v) {
  std::vector<int> ids;
  if (trim(v).empty()) return ids;
  for (const auto& part : split(v, ',')) {
    if (!part.empty()) ids.push_back(parse_int(key, part));
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

std::vector<std::pair<int, int>> parse_edge_list(const std::string& key,
                                                 const std::string& v) {
  std::vector<std::pair<int, int>> edges;
  if (trim(v).empty()) return edges;
  for (const auto& part : split(v, ',')) {
    if (part.empty()) continue;
    const auto dash = part.find('-');
    if (dash == std::string::npos) {
      throw ConfigError("config key '" + key + "': edge '" + part + "' is not i-j");
    }
    int a = parse_int(key, trim(part.substr(0, dash)));
    int b = parse_int(key, trim(part.substr(dash + 1)));
    if (a == b) throw ConfigError("config key '" + key + "': self-loop " + part);
    edges.emplace_back(std::min(a, b), std::max(a, b));
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

void check_choice(const std::string& key, const std::string& v,
                  std::initializer_list<const char*> allowed) {
  for (const char* a : allowed) {
    if (v == a) return;
  }
  std::string msg = "config key '" + key + "': invalid value '" + v + "' (expected one of";
  for (const char* a : allowed) msg += std::string(" ") + a;
  throw ConfigError(msg + ")");
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    }

    if (key == "topology") {
      check_choice(key, val, {"random", "grid", "explicit"});
      cfg.topology = val == "random"   ? ExperimentConfig::TopologyKind::Random
                     : val == "grid" ? ExperimentConfig::TopologyKind::Grid
                                     : ExperimentConfig::TopologyKind::Explicit;
    } else if (key == "n") {
      cfg.n = parse_int(key, val);
    } else if (key == "area_m") {
      cfg.area_m = parse_double(key, val);
    } else if (key == "radius_m") {
      cfg.radius_m = parse_double(key, val);
    } else if (key == "rows") {
      cfg.rows = parse_int(key, val);
    } else if (key == "cols") {
      cfg.cols = parse_int(key, val);
    } else if (key == "grid_spacing_m") {
      cfg.grid_spacing_m = parse_double(key, val);
    } else if (key == "edges") {
      cfg.edges = parse_edge_list(key, val);
    } else if (key == "masters") {
      cfg.masters = parse_id_list(key, val);
    } else if (key == "topology_per_run") {
      cfg.topology_per_run = parse_bool(key, val);
    } else if (key == "k_fwd") {
      cfg.k_fwd = parse_int(key, val);
    } else if (key == "k_rev") {
      cfg.k_rev = parse_int(key, val);
    } else if (key == "sigma_w") {
      cfg.sigma_w = parse_double(key, val);
    } else if (key == "t_c") {
      cfg.t_c = parse_double(key, val);
    } else if (key == "spacing") {
      cfg.spacing = parse_double(key, val);
    } else if (key == "t0") {
      cfg.t0 = parse_double(key, val);
    } else if (key == "propagation_speed") {
      cfg.propagation_speed = parse_double(key, val);
    } else if (key == "link_schedule") {
      check_choice(key, val, {"sequential", "concurrent"});
      cfg.concurrent_links = val == "concurrent";
    } else if (key == "sigma_alpha_sq") {
      cfg.sigma_alpha_sq = parse_double(key, val);
    } else if (key == "beta_min") {
      cfg.beta_min = parse_double(key, val);
    } else if (key == "beta_max") {
      cfg.beta_max = parse_double(key, val);
    } else if (key == "prior_sigma_lambda_sq") {
      cfg.prior_sigma_lambda_sq = parse_double(key, val);
    } else if (key == "prior_sigma_nu_sq") {
      cfg.prior_sigma_nu_sq = parse_double(key, val);
    } else if (key == "algo") {
      check_choice(key, val, {"bp", "mf", "ats", "admm", "lc", "all"});
      cfg.algo = val;
    } else if (key == "schedule") {
      check_choice(key, val, {"auto", "parallel", "serial"});
      cfg.schedule = val;
    } else if (key == "tol") {
      cfg.tol = parse_double(key, val);
    } else if (key == "max_iter") {
      cfg.max_iter = parse_int(key, val);
    } else if (key == "damping") {
      cfg.damping = parse_double(key, val);
    } else if (key == "runs") {
      cfg.runs = parse_int(key, val);
    } else if (key == "seed") {
      cfg.seed = static_cast<unsigned long long>(parse_ll(key, val));
    } else if (key == "rmse_mode") {
      check_choice(key, val, {"auto", "truth", "network_mean"});
      cfg.rmse_mode = val;
    } else if (key == "ats_rho") {
      cfg.ats_rho = parse_double(key, val);
    } else if (key == "ats_rounds") {
      cfg.ats_rounds = parse_int(key, val);
    } else if (key == "ats_round_spacing") {
      cfg.ats_round_spacing = parse_double(key, val);
    } else if (key == "admm_rho") {
      cfg.admm_rho = parse_double(key, val);
    } else if (key == "admm_gain") {
      cfg.admm_gain = parse_double(key, val);
    } else if (key == "admm_rounds") {
      cfg.admm_rounds = parse_int(key, val);
    } else if (key == "admm_inner") {
      cfg.admm_inner = parse_int(key, val);
    } else if (key == "admm_dt") {
      cfg.admm_dt = parse_double(key, val);
    } else if (key == "admm_skew_obs_ppm") {
      cfg.admm_skew_obs_ppm = parse_double(key, val);
    } else if (key == "admm_phase_obs_sigma") {
      cfg.admm_phase_obs_sigma = parse_double(key, val);
    } else if (key == "lc_lambda") {
      cfg.lc_lambda = parse_double(key, val);
    } else if (key == "lc_sweeps") {
      cfg.lc_sweeps = parse_int(key, val);
    } else if (key == "bcrb") {
      cfg.bcrb = parse_bool(key, val);
    } else if (key == "bcrb_design") {
      check_choice(key, val, {"local", "reference"});
      cfg.bcrb_design = val;
    } else if (key == "trace") {
      cfg.trace = parse_bool(key, val);
    } else if (key == "convergence") {
      cfg.convergence = parse_bool(key, val);
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }

  // Cross-field validation.
  if (cfg.topology == ExperimentConfig::TopologyKind::Random && cfg.n < 2) {
    throw ConfigError("config: random topology needs n >= 2");
  }
  if (cfg.topology == ExperimentConfig::TopologyKind::Grid &&
      (cfg.rows < 1 || cfg.cols < 1 || cfg.rows * cfg.cols < 2)) {
    throw ConfigError("config: grid topology needs rows*cols >= 2");
  }
  if (cfg.topology == ExperimentConfig::TopologyKind::Explicit && cfg.edges.empty()) {
    throw ConfigError("config: explicit topology needs a non-empty edge list");
  }
  if (cfg.k_fwd < 0 || cfg.k_rev < 0 || cfg.k_fwd + cfg.k_rev < 1) {
    throw ConfigError("config: k_fwd/k_rev must be non-negative with at least one packet");
  }
  if (!(cfg.sigma_w > 0.0)) throw ConfigError("config: sigma_w must be positive");
  if (!(cfg.spacing > 0.0)) throw ConfigError("config: spacing must be positive");
  if (cfg.t_c < 0.0) throw ConfigError("config: t_c must be non-negative");
  if (!(cfg.propagation_speed > 0.0)) {
    throw ConfigError("config: propagation_speed must be positive");
  }
  if (!(cfg.sigma_alpha_sq > 0.0)) {
    throw ConfigError("config: sigma_alpha_sq must be positive");
  }
  if (!(cfg.beta_max > cfg.beta_min)) {
    throw ConfigError("config: beta_max must exceed beta_min");
  }
  if (cfg.runs < 1) throw ConfigError("config: runs must be >= 1");
  if (cfg.max_iter < 1) throw ConfigError("config: max_iter must be >= 1");
  if (!(cfg.damping > 0.0 && cfg.damping <= 1.0)) {
    throw ConfigError("config: damping must lie in (0, 1]");
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

}  // namespace syncsim
