#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "syncsim/link_model.hpp"
#include "syncsim/rng.hpp"

using namespace syncsim;

namespace {

struct LinkFixture {
  ClockParams ci;
  ClockParams cj;
  double delta = 0.0;
  LinkMeasurements m;
};

LinkFixture make_link(unsigned long long seed, int k_fwd, int k_rev, double sigma_w,
                      double delta = 7.6e-6) {
  LinkFixture f;
  auto crng = make_rng(seed, 0, Stream::Clocks);
  const auto clocks = sample_clocks(2, {}, 1e-4, -10.0, 10.0, crng);
  f.ci = clocks[0];
  f.cj = clocks[1];
  f.delta = delta;
  const ExchangeSchedule s = alternating_schedule(0.0, 0.01, k_fwd, k_rev);
  auto mrng = make_rng(seed, 0, Stream::Measurement);
  f.m = simulate_link_exchange(1, 2, f.ci, f.cj, delta, s, sigma_w, mrng);
  return f;
}

}  // namespace

TEST_CASE("true parameters zero the centered residual on noise-free data") {
  const LinkFixture f = make_link(2, 10, 10, 0.0);
  const auto lm = build_link_matrices<double>(f.m);
  const double obj = approx_objective(lm, to_transformed(f.ci), to_transformed(f.cj));
  // Uncentered residuals are all exactly delta + noise; centering removes the
  // common delta, so the noise-free objective vanishes.
  CHECK(obj < 1e-22);
}

TEST_CASE("link matrices are exactly column-centered") {
  const LinkFixture f = make_link(3, 7, 5, 93e-9);
  const auto lm = build_link_matrices<double>(f.m);
  REQUIRE(lm.A.rows() == 12);
  REQUIRE(lm.B.rows() == 12);
  CHECK(std::abs(lm.A.col(0).mean()) < 1e-12);
  CHECK(std::abs(lm.A.col(1).mean()) < 1e-12);
  CHECK(std::abs(lm.B.col(0).mean()) < 1e-12);
  CHECK(std::abs(lm.B.col(1).mean()) < 1e-12);
}

TEST_CASE("delay estimate recovers the negated true delay without noise") {
  const LinkFixture f = make_link(4, 20, 20, 0.0, 3.3e-6);
  const double d = delay_ml(f.m, to_transformed(f.ci), to_transformed(f.cj));
  CHECK(d == doctest::Approx(-3.3e-6).epsilon(1e-9));
  // The exact exponent at the matching delay is zero.
  CHECK(exact_profile_objective(f.m, to_transformed(f.ci), to_transformed(f.cj),
                                3.3e-6) < 1e-22);
}

TEST_CASE("delay_stats are the negated column means") {
  LinkMeasurements m;
  m.i = 1;
  m.j = 2;
  m.fwd_tx.resize(2);
  m.fwd_tx << 1.0, 2.0;
  m.fwd_rx.resize(2);
  m.fwd_rx << 1.5, 2.5;
  m.rev_tx.resize(1);
  m.rev_tx << 3.0;
  m.rev_rx.resize(1);
  m.rev_rx << 3.25;
  const DelayStats s = delay_stats(m);
  // a_i = (sum fwd_tx - sum rev_rx) / n = (3.0 - 3.25) / 3.
  CHECK(s.a_i == doctest::Approx((3.0 - 3.25) / 3.0).epsilon(1e-15));
  // a_j = (sum rev_tx - sum fwd_rx) / n = (3.0 - 4.0) / 3.
  CHECK(s.a_j == doctest::Approx((3.0 - 4.0) / 3.0).epsilon(1e-15));
  // b = (k_rev - k_fwd) / n = -1/3.
  CHECK(s.b == doctest::Approx(-1.0 / 3.0).epsilon(1e-15));
  CHECK_THROWS_AS(delay_stats(LinkMeasurements{}), DegenerateLink);
}

TEST_CASE("centered quadratic equals the delay-profiled exact exponent") {
  // The identity holds at any parameter point, not just the truth, and the
  // golden-section minimizer is the independent check on the profiling.
  for (unsigned long long seed : {10ull, 11ull, 12ull, 13ull, 14ull}) {
    const LinkFixture f = make_link(seed, 10, 10, 93e-9);
    const auto lm = build_link_matrices<double>(f.m);
    Vec2d vi = to_transformed(f.ci);
    Vec2d vj = to_transformed(f.cj);

    for (int variant = 0; variant < 2; ++variant) {
      if (variant == 1) {
        vi += Vec2d(3e-5, -2e-4);  // deliberately wrong point
        vj += Vec2d(-1e-5, 4e-4);
      }
      const double quad = approx_objective(lm, vi, vj);
      const double dhat = delay_ml(f.m, vi, vj);
      const double exact = exact_profile_objective(f.m, vi, vj, -dhat);
      CHECK(quad == doctest::Approx(exact).epsilon(1e-10));

      const double dstar = oracles::golden_section_min(
          [&](double d) { return exact_profile_objective(f.m, vi, vj, d); }, -1.0, 1.0);
      CHECK(dstar == doctest::Approx(-dhat).epsilon(1e-6));
      const double exact_min = exact_profile_objective(f.m, vi, vj, dstar);
      CHECK(quad == doctest::Approx(exact_min).epsilon(1e-8));
    }
  }
}

TEST_CASE("role-swapped construction reproduces the receiver Gram exactly") {
  const LinkFixture f = make_link(21, 8, 6, 93e-9);
  const auto lm = build_link_matrices<double>(f.m);
  const auto lm_swapped = build_link_matrices<double>(swap_link_roles(f.m));
  const Mat2d bb = lm.B.transpose() * lm.B;
  const Mat2d aa_swapped = lm_swapped.A.transpose() * lm_swapped.A;
  CHECK((bb - aa_swapped).norm() < 1e-12 * bb.norm());
  // And symmetrically for the other endpoint.
  const Mat2d aa = lm.A.transpose() * lm.A;
  const Mat2d bb_swapped = lm_swapped.B.transpose() * lm_swapped.B;
  CHECK((aa - bb_swapped).norm() < 1e-12 * aa.norm());
}

TEST_CASE("epoch shifts change the frame, not the objective") {
  const LinkFixture f = make_link(22, 10, 10, 93e-9);
  const double ei = f.m.fwd_tx[0];
  const double ej = f.m.fwd_rx[0];
  const auto plain = build_link_matrices<double>(f.m);
  const auto shifted = build_link_matrices<double>(f.m, ei, ej);
  const Vec2d vi = to_transformed(f.ci);
  const Vec2d vj = to_transformed(f.cj);
  const double a = approx_objective(plain, vi, vj);
  const double b = approx_objective(shifted, shift_mean(vi, ei), shift_mean(vj, ej));
  CHECK(a == doctest::Approx(b).epsilon(1e-6));
}

TEST_CASE("information-free links are rejected") {
  SUBCASE("no packets at all") {
    CHECK_THROWS_AS(build_link_matrices<double>(LinkMeasurements{}), DegenerateLink);
  }
  SUBCASE("repeated one-way stamps carry nothing once the delay is profiled") {
    // A single direction with identical stamps: its one mean equation is
    // consumed entirely by the delay profile, leaving a zero system.
    LinkMeasurements m;
    m.i = 1;
    m.j = 2;
    m.fwd_tx = Eigen::VectorXd::Constant(3, 5.0);
    m.fwd_rx = Eigen::VectorXd::Constant(3, 5.1);
    CHECK_THROWS_AS(build_link_matrices<double>(m), DegenerateLink);
  }
  SUBCASE("identical two-way stamps still pin one combination") {
    // Both directions present: the centered rows are opposite but nonzero,
    // so the link keeps exactly one constraint, like a single two-way pair.
    LinkMeasurements m;
    m.i = 1;
    m.j = 2;
    m.fwd_tx = Eigen::VectorXd::Constant(3, 5.0);
    m.fwd_rx = Eigen::VectorXd::Constant(3, 5.1);
    m.rev_tx = Eigen::VectorXd::Constant(3, 5.1);
    m.rev_rx = Eigen::VectorXd::Constant(3, 5.2);
    const auto lm = build_link_matrices<double>(m);
    const auto factor = make_link_factor(lm);
    Eigen::SelfAdjointEigenSolver<Mat2d> es(factor.aa + factor.bb);
    CHECK(es.eigenvalues()[1] > 1.0);
    CHECK(es.eigenvalues()[0] < 1e-12 * es.eigenvalues()[1]);
  }
  SUBCASE("a single two-way pair is rank one but kept") {
    const LinkFixture f = make_link(23, 1, 1, 93e-9);
    // Epoch-shifted stamps, the way estimators consume links.
    const auto lm = build_link_matrices<double>(f.m, f.m.fwd_tx[0], f.m.fwd_rx[0]);
    const auto factor = make_link_factor(lm);
    CHECK(factor.rows == 2);
    // Centering two rows leaves exactly opposite rows, so each endpoint's
    // Gram is rank one; the link still pins one linear combination each.
    for (const Mat2d& gram : {factor.aa, factor.bb}) {
      Eigen::SelfAdjointEigenSolver<Mat2d> es(gram);
      CHECK(es.eigenvalues()[1] > 0.0);
      CHECK(es.eigenvalues()[0] < 1e-12 * es.eigenvalues()[1]);
    }
    // A reference-neighbor message can still be formed from it.
    const Gaussian2d msg = bp_factor_message(factor, Mat2d(Mat2d::Zero()),
                                             Vec2d(Vec2d::Zero()), 93e-9 * 93e-9);
    CHECK(msg.lam.norm() > 0.0);
  }
}

TEST_CASE("factor QR blocks reconstruct the Grams") {
  const LinkFixture f = make_link(24, 10, 10, 93e-9);
  const auto lm = build_link_matrices<double>(f.m);
  const auto factor = make_link_factor(lm);
  CHECK((factor.aa - lm.A.transpose() * lm.A).norm() < 1e-12 * factor.aa.norm());
  CHECK((factor.ab - lm.A.transpose() * lm.B).norm() < 1e-12 * factor.ab.norm());
  CHECK((factor.bb - lm.B.transpose() * lm.B).norm() < 1e-12 * factor.bb.norm());
  // [B A] = QR implies B'B = r_bb' r_bb, B'A = r_bb' r_ba, and
  // A'A = r_ba' r_ba + gram_perp.
  CHECK((factor.r_bb.transpose() * factor.r_bb - factor.bb).norm() <
        1e-12 * factor.bb.norm());
  CHECK((factor.r_bb.transpose() * factor.r_ba - factor.ab.transpose()).norm() <
        1e-12 * factor.ab.norm());
  CHECK((factor.r_ba.transpose() * factor.r_ba + factor.gram_perp - factor.aa).norm() <
        1e-12 * factor.aa.norm());
}

TEST_CASE("factor message matches the textbook Schur complement") {
  // At moderate precision ratios the naive formula is still accurate enough
  // to serve as an oracle for the QR form.
  const LinkFixture f = make_link(25, 10, 10, 93e-9);
  const auto lm = build_link_matrices<double>(f.m);
  const auto factor = make_link_factor(lm);
  const double s = 93e-9 * 93e-9;
  Mat2d ext_cov;
  ext_cov << 1e-14, 0.0, 0.0, 1e-12;  // tight extrinsic: comparable scales
  const Vec2d ext_mean(1.00002, 0.3);

  const Gaussian2d msg = bp_factor_message(factor, ext_cov, ext_mean, s);

  Mat2d ext_lam;
  REQUIRE(spd_invert(ext_cov, ext_lam));
  Mat2d inner;
  REQUIRE(spd_invert(Mat2d(factor.bb + s * ext_lam), inner));
  const Mat2d lam_ref =
      (factor.aa - factor.ab * inner * factor.ab.transpose()) / s;
  const Vec2d eta_ref = -(factor.ab * inner * (s * (ext_lam * ext_mean))) / s;
  CHECK((msg.lam - lam_ref).norm() < 1e-6 * lam_ref.norm());
  CHECK((msg.eta - eta_ref).norm() < 1e-6 * eta_ref.norm() + 1e-12);
}

TEST_CASE("node epochs are the earliest recorded stamps") {
  const Topology topo = oracles::explicit_topo(4, {{1, 2}, {2, 3}}, {1});
  auto crng = make_rng(31, 0, Stream::Clocks);
  const auto clocks = sample_clocks(4, {1}, 1e-4, -10.0, 10.0, crng);
  const auto sched = campaign_schedule(topo, 5.0, 0.01, 3, 3);
  auto mrng = make_rng(31, 0, Stream::Measurement);
  const auto links = simulate_campaign(topo, clocks, {1e-6, 1e-6}, sched, 93e-9, mrng);

  const auto epochs = node_epochs(topo, links);
  REQUIRE(epochs.size() == 4);
  CHECK(epochs[0] == links[0].fwd_tx[0]);
  // Node 2 appears on both links; its epoch is its earliest stamp anywhere.
  CHECK(epochs[1] == std::min(links[0].fwd_rx[0], links[1].fwd_tx[0]));
  CHECK(epochs[2] == links[1].fwd_rx[0]);
  // Node 4 never records a stamp.
  CHECK(epochs[3] == 0.0);
}

TEST_CASE("clock extraction undoes the epoch frame") {
  const ClockParams truth{1.00037, -2.9};
  const double epoch = 17.25;
  const Vec2d global = to_transformed(truth);
  const Vec2d framed = shift_mean(global, epoch);
  Mat2d cov;
  cov << 1e-10, 0.0, 0.0, 1e-8;
  const Gaussian2d belief = gaussian_from_moments(framed, cov);
  const ClockParams est = extract_clock_estimate(belief, epoch);
  CHECK(est.alpha == doctest::Approx(truth.alpha).epsilon(1e-9));
  CHECK(est.beta == doctest::Approx(truth.beta).epsilon(1e-9));

  SUBCASE("non-positive inverse skew cannot be a clock") {
    const Gaussian2d bad = gaussian_from_moments(Vec2d(-0.2, 0.0), cov);
    CHECK_THROWS_AS(extract_clock_estimate(bad, 0.0), InvalidSkew);
  }
}

TEST_CASE("belief summary transports the variance with its cross terms") {
  const Vec2d mean(1.0001, 0.5);
  Mat2d cov;
  cov << 4e-10, 3e-9, 3e-9, 2e-7;
  const Gaussian2d g = gaussian_from_moments(mean, cov);
  const double e = 12.0;
  const BeliefSummary s = belief_summary(g, e);
  CHECK((s.mean - shift_mean(mean, -e)).norm() < 1e-12);
  CHECK(s.var[0] == doctest::Approx(cov(0, 0)).epsilon(1e-9));
  // var(nu + e * lambda) = var(nu) + 2 e cov + e^2 var(lambda).
  const double expect = cov(1, 1) + 2.0 * e * cov(0, 1) + e * e * cov(0, 0);
  CHECK(s.var[1] == doctest::Approx(expect).epsilon(1e-9));
}
