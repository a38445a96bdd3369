#pragma once

#include <Eigen/Core>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "syncsim/gaussian.hpp"
#include "syncsim/measurement.hpp"

namespace syncsim {

/// Noise scale and prior spread shared by every estimator in the library.
struct ModelParams {
  double sigma_w = 93e-9;        // per-packet timing noise, seconds
  double sigma_lambda_sq = 1e-8; // prior variance of the inverse skew
  double sigma_nu_sq = 33.64;    // prior variance of the scaled phase
};

/// Epoch of every node: the first timestamp that node records anywhere in the
/// campaign, 0.0 for nodes that never record one. Estimators subtract a
/// node's epoch from all of its stamps, which keeps the stacked coefficient
/// matrices well scaled (entries span the campaign duration instead of the
/// absolute clock readings). The change of variable this induces on the
/// node's parameters is shift_frame(., epoch) and is undone at extraction.
std::vector<double> node_epochs(const Topology& topo,
                                const std::vector<LinkMeasurements>& meas);

/// Closed-form delay-estimate coefficients: delay_ml = a_i * lambda_i +
/// a_j * lambda_j + b * (nu_i - nu_j). They are the negated column means of
/// the uncentered coefficient matrices.
struct DelayStats {
  double a_i = 0.0;
  double a_j = 0.0;
  double b = 0.0;
};

DelayStats delay_stats(const LinkMeasurements& m, double epoch_i = 0.0,
                       double epoch_j = 0.0);

/// Maximum-likelihood link delay given both transformed clock vectors.
/// Sign convention: this equals MINUS the per-packet residual mean, i.e. on
/// noise-free data it returns the negative of the true propagation delay.
/// The profile objective below is invariant to that sign and is the quantity
/// every estimator actually consumes.
double delay_ml(const LinkMeasurements& m, const Vec2d& vartheta_i,
                const Vec2d& vartheta_j);

/// Exact two-way exponent with the delay still in: the sum over both
/// directions of squared (receiver-frame residual - delta). Minimizing over
/// delta profiles the deterministic unknown out of the link likelihood.
double exact_profile_objective(const LinkMeasurements& m, const Vec2d& vartheta_i,
                               const Vec2d& vartheta_j, double delta);

/// Stacked, mean-centered residual coefficients of one link, oriented so
/// that A multiplies node i's transformed clock and B node j's. Rows are the
/// forward packets followed by the reverse packets;
/// || A vartheta_i + B vartheta_j ||^2 equals the delay-profiled exact
/// exponent at machine precision.
template <class S>
struct LinkMatrices {
  Eigen::Matrix<S, Eigen::Dynamic, 2> A;
  Eigen::Matrix<S, Eigen::Dynamic, 2> B;
};

/// Throws DegenerateLink when the pooled Gram A'A + B'B carries no usable
/// information (all stamps equal, or a single packet total): such a link
/// constrains nothing once the delay is profiled out. A rank-one Gram is
/// kept: a single two-way exchange pins down one linear combination per
/// endpoint, which is exactly what the factor should say.
template <class S>
LinkMatrices<S> build_link_matrices(const LinkMeasurements& m, double epoch_i = 0.0,
                                    double epoch_j = 0.0);

/// The same link measurements with the two roles swapped: forward packets of
/// the result are the reverse packets of the input. Building matrices from
/// the swapped record is the independent construction of the (j, i)
/// orientation; its Grams must agree with the (i, j) ones exactly.
LinkMeasurements swap_link_roles(const LinkMeasurements& m);

template <class S>
S approx_objective(const LinkMatrices<S>& lm, const Vec2<S>& vartheta_i,
                   const Vec2<S>& vartheta_j) {
  return (lm.A * vartheta_i + lm.B * vartheta_j).squaredNorm();
}

/// One directed link factor, oriented toward its receiving node (A columns
/// multiply the receiver's parameters). Holds the 2x2 Grams plus the R
/// blocks of a Householder QR of [B A], which let the belief-propagation
/// message be evaluated without the catastrophic cancellation the textbook
/// Schur-complement form suffers when the extrinsic precision is many orders
/// of magnitude below the Gram scale (always the case here: Grams carry
/// 1/sigma_w^2 ~ 1e14 while a phase prior contributes ~3e-2).
template <class S>
struct LinkFactor {
  Mat2<S> aa = Mat2<S>::Zero();         // A'A
  Mat2<S> ab = Mat2<S>::Zero();         // A'B
  Mat2<S> bb = Mat2<S>::Zero();         // B'B
  Mat2<S> r_bb = Mat2<S>::Zero();       // QR blocks: [B A] = Q [r_bb r_ba; 0 r_aa]
  Mat2<S> r_ba = Mat2<S>::Zero();
  Mat2<S> gram_perp = Mat2<S>::Zero();  // r_aa' r_aa, the part of A outside span(B)
  int rows = 0;
};

template <class S>
LinkFactor<S> make_link_factor(const LinkMatrices<S>& lm);

/// Factor-to-variable message of Gaussian belief propagation.
///
/// The extrinsic density of the neighbor enters through its covariance-like
/// matrix ext_cov (the inverse extrinsic precision; exactly Zero() for a
/// reference node, whose value is known) and its mean ext_mean. Derivation:
/// marginalizing the neighbor out of the pair likelihood gives
///   lam = (A'A - A'B (B'B + s Lambda_e)^-1 B'A) / s,  s = sigma_w^2,
/// and with [B A] = Q R this collapses to the cancellation-free form
///   lam = (r_ba' C r_ba + r_aa' r_aa) / s,  C = (I + r_bb ext_cov r_bb'/s)^-1,
///   eta = -r_ba' C r_bb ext_mean / s,
/// where C is the inverse of an SPD matrix with eigenvalues >= 1.
template <class S>
Gaussian2<S> bp_factor_message(const LinkFactor<S>& f, const Mat2<S>& ext_cov,
                               const Vec2<S>& ext_mean, S sigma_w_sq);

/// Mean-field message: the neighbor enters through its belief mean only.
template <class S>
Gaussian2<S> mf_factor_message(const LinkFactor<S>& f, const Vec2<S>& neighbor_mean,
                               S sigma_w_sq) {
  Gaussian2<S> out;
  out.lam = f.aa / sigma_w_sq;
  out.eta = -(f.ab * neighbor_mean) / sigma_w_sq;
  return out;
}

/// Maps a converged belief (in the node's epoch frame) back to clock
/// parameters. Throws InvalidSkew when the inverse-skew mean is not positive.
ClockParams extract_clock_estimate(const Gaussian2d& belief, double epoch);

/// Global-frame mean and variances of a belief held in an epoch frame.
struct BeliefSummary {
  Vec2d mean = Vec2d::Zero();  // [lambda, nu], global frame
  Vec2d var = Vec2d::Zero();   // [var(lambda), var(nu)]
};

BeliefSummary belief_summary(const Gaussian2d& belief, double epoch);

// ---------------------------------------------------------------------------
// template implementations
// ---------------------------------------------------------------------------

template <class S>
LinkMatrices<S> build_link_matrices(const LinkMeasurements& m, double epoch_i,
                                    double epoch_j) {
  const Eigen::Index kf = m.fwd_tx.size();
  const Eigen::Index kr = m.rev_tx.size();
  const Eigen::Index rows = kf + kr;
  if (rows < 1 || m.fwd_rx.size() != kf || m.rev_rx.size() != kr) {
    throw DegenerateLink("link has no complete packets");
  }
  LinkMatrices<S> lm;
  lm.A.resize(rows, 2);
  lm.B.resize(rows, 2);
  for (Eigen::Index k = 0; k < kf; ++k) {
    lm.A(k, 0) = -static_cast<S>(m.fwd_tx[k] - epoch_i);
    lm.A(k, 1) = S(1);
    lm.B(k, 0) = static_cast<S>(m.fwd_rx[k] - epoch_j);
    lm.B(k, 1) = S(-1);
  }
  for (Eigen::Index k = 0; k < kr; ++k) {
    lm.A(kf + k, 0) = static_cast<S>(m.rev_rx[k] - epoch_i);
    lm.A(kf + k, 1) = S(-1);
    lm.B(kf + k, 0) = -static_cast<S>(m.rev_tx[k] - epoch_j);
    lm.B(kf + k, 1) = S(1);
  }
  // Center the columns: projecting onto the complement of the all-ones vector
  // is exactly the profiling of the unknown symmetric delay.
  lm.A.rowwise() -= lm.A.colwise().mean();
  lm.B.rowwise() -= lm.B.colwise().mean();

  // Reject only information-free links. The floor sits far above centering
  // round-off on identical stamps (~1e-32 s^2) and far below any real signal
  // (a stamp spread of even one delay, ~1e-6 s, already contributes ~1e-12).
  const S pooled_norm = (lm.A.transpose() * lm.A + lm.B.transpose() * lm.B).norm();
  if (!(pooled_norm > S(1e-24))) {
    throw DegenerateLink("link " + std::to_string(m.i) + "-" + std::to_string(m.j) +
                         ": stamps carry no information once the delay is profiled");
  }
  return lm;
}

template <class S>
LinkFactor<S> make_link_factor(const LinkMatrices<S>& lm) {
  LinkFactor<S> f;
  const Eigen::Index rows = lm.A.rows();
  f.rows = static_cast<int>(rows);
  f.aa = lm.A.transpose() * lm.A;
  f.ab = lm.A.transpose() * lm.B;
  f.bb = lm.B.transpose() * lm.B;

  Eigen::Matrix<S, Eigen::Dynamic, 4> ba(rows, 4);
  ba.template leftCols<2>() = lm.B;
  ba.template rightCols<2>() = lm.A;
  Eigen::HouseholderQR<Eigen::Matrix<S, Eigen::Dynamic, 4>> qr(ba);
  const Eigen::Index r = std::min<Eigen::Index>(rows, 4);
  Eigen::Matrix<S, Eigen::Dynamic, 4> rfull =
      qr.matrixQR().topRows(r).template triangularView<Eigen::Upper>();
  const Eigen::Index r1 = std::min<Eigen::Index>(r, 2);
  f.r_bb.setZero();
  f.r_ba.setZero();
  f.r_bb.topRows(r1) = rfull.block(0, 0, r1, 2);
  f.r_ba.topRows(r1) = rfull.block(0, 2, r1, 2);
  if (r > 2) {
    const auto r_aa = rfull.block(2, 2, r - 2, 2);
    f.gram_perp = r_aa.transpose() * r_aa;
  } else {
    f.gram_perp.setZero();
  }
  return f;
}

template <class S>
Gaussian2<S> bp_factor_message(const LinkFactor<S>& f, const Mat2<S>& ext_cov,
                               const Vec2<S>& ext_mean, S sigma_w_sq) {
  const Mat2<S> x = (f.r_bb * ext_cov * f.r_bb.transpose()) / sigma_w_sq;
  Mat2<S> c;
  if (!spd_invert(Mat2<S>(Mat2<S>::Identity() + x), c)) {
    throw DegenerateMessage("factor message: I + r_bb cov r_bb' not invertible");
  }
  Gaussian2<S> out;
  out.lam = (f.r_ba.transpose() * c * f.r_ba + f.gram_perp) / sigma_w_sq;
  out.eta = -(f.r_ba.transpose() * (c * (f.r_bb * ext_mean))) / sigma_w_sq;
  return out;
}

}  // namespace syncsim
