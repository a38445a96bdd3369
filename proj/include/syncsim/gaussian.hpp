#pragma once

#include <Eigen/Core>
#include <cmath>

#include "syncsim/clock.hpp"
#include "syncsim/errors.hpp"

namespace syncsim {

/// Bivariate Gaussian in natural (information) form: precision `lam` and
/// information vector `eta` = lam * mean. The zero pair is the uninformative
/// density, and multiplying densities is entrywise addition, which is why
/// every estimator in this library works in this parameterization.
template <class S>
struct Gaussian2 {
  Mat2<S> lam = Mat2<S>::Zero();
  Vec2<S> eta = Vec2<S>::Zero();
};

using Gaussian2d = Gaussian2<double>;

template <class S>
Gaussian2<S> operator+(const Gaussian2<S>& a, const Gaussian2<S>& b) {
  return {a.lam + b.lam, a.eta + b.eta};
}

template <class S>
Gaussian2<S>& operator+=(Gaussian2<S>& a, const Gaussian2<S>& b) {
  a.lam += b.lam;
  a.eta += b.eta;
  return a;
}

/// Closed-form inverse of a symmetric positive definite 2x2. Returns false
/// when the determinant is not strictly positive and finite, i.e. the matrix
/// is not a usable precision/covariance.
template <class S>
bool spd_invert(const Mat2<S>& m, Mat2<S>& out) {
  const S det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  if (!(det > S(0)) || !std::isfinite(static_cast<double>(det))) return false;
  out(0, 0) = m(1, 1) / det;
  out(1, 1) = m(0, 0) / det;
  out(0, 1) = -m(0, 1) / det;
  out(1, 0) = -m(1, 0) / det;
  return true;
}

template <class S>
Mat2<S> gaussian_cov(const Gaussian2<S>& g) {
  Mat2<S> cov;
  if (!spd_invert(g.lam, cov)) {
    throw SingularBelief("belief precision is not positive definite");
  }
  return cov;
}

template <class S>
Vec2<S> gaussian_mean(const Gaussian2<S>& g) {
  return gaussian_cov(g) * g.eta;
}

template <class S>
Gaussian2<S> gaussian_from_moments(const Vec2<S>& mean, const Mat2<S>& cov) {
  Gaussian2<S> g;
  if (!spd_invert(cov, g.lam)) {
    throw SingularBelief("covariance is not positive definite");
  }
  g.eta = g.lam * mean;
  return g;
}

/// Re-expresses a density over [lambda, nu] as a density over the shifted
/// variable [lambda, nu - e * lambda]. Shifting every local timestamp of a
/// node by an epoch e is exactly this change of variable, so priors move
/// between the global frame and a node's epoch frame through this map.
/// shift_frame(g, e) followed by shift_frame(., -e) is the identity.
template <class S>
Gaussian2<S> shift_frame(const Gaussian2<S>& g, S e) {
  Mat2<S> f;
  f << S(1), e, S(0), S(1);
  Gaussian2<S> out;
  out.lam = f * g.lam * f.transpose();
  out.eta = f * g.eta;
  return out;
}

/// Mean vector transported the same way: [lambda, nu] -> [lambda, nu - e*lambda].
template <class S>
Vec2<S> shift_mean(const Vec2<S>& mean, S e) {
  return Vec2<S>(mean[0], mean[1] - e * mean[0]);
}

/// Agent prior over the transformed clock [lambda, nu] in the global frame:
/// independent lambda ~ N(1, sigma_lambda_sq), nu ~ N(0, sigma_nu_sq).
template <class S>
Gaussian2<S> prior_for(S sigma_lambda_sq, S sigma_nu_sq) {
  if (!(sigma_lambda_sq > S(0)) || !(sigma_nu_sq > S(0))) {
    throw ConfigError("prior variances must be positive");
  }
  Gaussian2<S> g;
  g.lam << S(1) / sigma_lambda_sq, S(0), S(0), S(1) / sigma_nu_sq;
  g.eta << S(1) / sigma_lambda_sq, S(0);
  return g;
}

}  // namespace syncsim
