#pragma once

#include <Eigen/Core>
#include <random>
#include <vector>

#include "syncsim/errors.hpp"

namespace syncsim {

template <class S>
using Vec2 = Eigen::Matrix<S, 2, 1>;
template <class S>
using Mat2 = Eigen::Matrix<S, 2, 2>;

using Vec2d = Vec2<double>;
using Mat2d = Mat2<double>;

/// Affine local clock c(t) = alpha * t + beta, where t is reference time,
/// alpha the skew (rate) and beta the phase offset. A perfect clock is
/// {1, 0}; reference nodes hold exactly that by definition.
struct ClockParams {
  double alpha = 1.0;
  double beta = 0.0;
};

/// Local clock reading at reference time t.
inline double clock_read(const ClockParams& p, double t) { return p.alpha * t + p.beta; }

/// Reference time at which the clock shows reading c.
inline double clock_invert(const ClockParams& p, double c) { return (c - p.beta) / p.alpha; }

/// Transformed clock vector [lambda, nu] = [1/alpha, beta/alpha]. Inverting a
/// clock reading is affine in these: t = lambda * c - nu, which is what makes
/// the estimation problem Gaussian. Estimators work in this parameterization
/// and map back at the very end.
inline Vec2d to_transformed(const ClockParams& p) {
  return Vec2d(1.0 / p.alpha, p.beta / p.alpha);
}

/// Inverse of to_transformed. Throws InvalidSkew when lambda is not positive,
/// since no physical clock maps to that point.
inline ClockParams from_transformed(const Vec2d& v) {
  if (!(v[0] > 0.0)) {
    throw InvalidSkew("inverse skew estimate is not positive: lambda = " +
                      std::to_string(v[0]));
  }
  return ClockParams{1.0 / v[0], v[1] / v[0]};
}

/// Draws clocks for nodes 1..n. Reference nodes (listed in `masters`, 1-based)
/// get the exact {1, 0} clock and consume no randomness; every other node
/// draws alpha ~ N(1, sigma_alpha^2) truncated below at 0.5 (redraw) and then
/// beta ~ U[beta_min, beta_max]. Draw order is node id order, alpha before
/// beta, so the stream layout is stable.
std::vector<ClockParams> sample_clocks(int n, const std::vector<int>& masters,
                                       double sigma_alpha, double beta_min,
                                       double beta_max, std::mt19937_64& rng);

}  // namespace syncsim
