#include "syncsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "syncsim/errors.hpp"

namespace syncsim {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Average ranks (1-based), ties share the mean of the positions they occupy.
std::vector<double> average_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> rank(n, 0.0);
  std::size_t pos = 0;
  while (pos < n) {
    std::size_t end = pos + 1;
    while (end < n && v[idx[end]] == v[idx[pos]]) ++end;
    const double shared = 0.5 * static_cast<double>(pos + 1 + end);  // mean of pos+1..end
    for (std::size_t k = pos; k < end; ++k) rank[idx[k]] = shared;
    pos = end;
  }
  return rank;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double mx = mean_of(x);
  const double my = mean_of(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (x[k] - mx) * (y[k] - my);
    sxx += (x[k] - mx) * (x[k] - mx);
    syy += (y[k] - my) * (y[k] - my);
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) return kNan;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

ErrorStats error_stats(const std::vector<ClockParams>& estimates,
                       const std::vector<ClockParams>& truth, RmseMode mode) {
  if (estimates.size() != truth.size()) {
    throw ConfigError("error_stats: estimate/truth size mismatch");
  }
  ErrorStats s;
  s.err_phase_s.reserve(estimates.size());
  s.err_skew_ppm.reserve(estimates.size());
  for (std::size_t k = 0; k < estimates.size(); ++k) {
    s.err_phase_s.push_back(estimates[k].beta - truth[k].beta);
    s.err_skew_ppm.push_back((estimates[k].alpha - truth[k].alpha) * 1e6);
  }
  if (mode == RmseMode::NetworkMean && !estimates.empty()) {
    const double mp = mean_of(s.err_phase_s);
    const double ms = mean_of(s.err_skew_ppm);
    for (double& e : s.err_phase_s) e -= mp;
    for (double& e : s.err_skew_ppm) e -= ms;
  }
  s.rmse_phase_s = rmse(s.err_phase_s);
  s.rmse_skew_ppm = rmse(s.err_skew_ppm);
  return s;
}

double rmse(const std::vector<double>& v) {
  if (v.empty()) return kNan;
  double acc = 0.0;
  for (double x : v) {
    if (!std::isfinite(x)) return kNan;
    acc += x * x;
  }
  return std::sqrt(acc / static_cast<double>(v.size()));
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) return kNan;
  return pearson(average_ranks(x), average_ranks(y));
}

double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) return kNan;
  const double mx = mean_of(x);
  const double my = mean_of(y);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (x[k] - mx) * (y[k] - my);
    sxx += (x[k] - mx) * (x[k] - mx);
  }
  if (!(sxx > 0.0)) return kNan;
  return sxy / sxx;
}

}  // namespace syncsim
