#pragma once

#include <vector>

#include "syncsim/clock.hpp"

namespace syncsim {

/// How estimation errors are referenced before aggregation. Truth compares
/// against the true clock parameters directly (meaningful when a reference
/// node pins the absolute time); NetworkMean first subtracts the network-wide
/// mean error, measuring internal agreement for master-free protocols whose
/// common frame is arbitrary.
enum class RmseMode { Truth, NetworkMean };

/// Per-node errors (phase in seconds, skew in parts per million) and their
/// root-mean-square aggregates. Entries follow the estimate order; any
/// non-finite estimate yields NaN errors and NaN aggregates.
struct ErrorStats {
  std::vector<double> err_phase_s;
  std::vector<double> err_skew_ppm;
  double rmse_phase_s = 0.0;
  double rmse_skew_ppm = 0.0;
};

/// Errors of per-node clock estimates against the true parameters, in
/// matching order.
ErrorStats error_stats(const std::vector<ClockParams>& estimates,
                       const std::vector<ClockParams>& truth, RmseMode mode);

/// Root mean square of a sample vector; NaN on empty or non-finite input.
double rmse(const std::vector<double>& v);

/// Spearman rank correlation with average ranks on ties; NaN when either
/// side is constant or sizes mismatch.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

/// Least-squares slope of y against x; NaN when x is constant.
double ols_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace syncsim
