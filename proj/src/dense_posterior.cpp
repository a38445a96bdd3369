#include "syncsim/dense_posterior.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <unordered_map>
#include <utility>

namespace syncsim {

namespace {

// The assembly and solve are templated on the scalar so the convenience
// overload can run in extended precision: this solver serves as the accuracy
// reference for the message-passing estimators, so its own rounding error has
// to sit well below the tolerances it is used to judge, and the equilibrated
// joint system leaves plain double with only ~1e-7 of headroom.
template <class S>
struct JointSystem {
  std::vector<int> order;
  Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> precision;
  Eigen::Matrix<S, Eigen::Dynamic, 1> info;
  std::vector<double> epochs;
};

template <class S>
JointSystem<S> assemble(const Topology& topo, const std::vector<LinkMeasurements>& meas,
                        const ModelParams& params) {
  JointSystem<S> joint;
  joint.epochs = node_epochs(topo, meas);
  std::unordered_map<int, int> block_of;
  for (int id = 1; id <= topo.n; ++id) {
    if (!topo.is_master(id)) {
      block_of.emplace(id, static_cast<int>(joint.order.size()));
      joint.order.push_back(id);
    }
  }
  const int dim = 2 * static_cast<int>(joint.order.size());
  joint.precision = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>::Zero(dim, dim);
  joint.info = Eigen::Matrix<S, Eigen::Dynamic, 1>::Zero(dim);

  const Gaussian2<S> prior = prior_for<S>(static_cast<S>(params.sigma_lambda_sq),
                                          static_cast<S>(params.sigma_nu_sq));
  for (std::size_t k = 0; k < joint.order.size(); ++k) {
    const int id = joint.order[k];
    const Gaussian2<S> p = shift_frame(prior, static_cast<S>(joint.epochs[id - 1]));
    joint.precision.template block<2, 2>(2 * k, 2 * k) += p.lam;
    joint.info.template segment<2>(2 * k) += p.eta;
  }

  const S s = static_cast<S>(params.sigma_w) * static_cast<S>(params.sigma_w);
  for (const auto& m : meas) {
    const auto lm =
        build_link_matrices<S>(m, joint.epochs[m.i - 1], joint.epochs[m.j - 1]);
    const Mat2<S> aa = lm.A.transpose() * lm.A;
    const Mat2<S> ab = lm.A.transpose() * lm.B;
    const Mat2<S> bb = lm.B.transpose() * lm.B;
    const bool i_master = topo.is_master(m.i);
    const bool j_master = topo.is_master(m.j);
    if (i_master && j_master) continue;  // carries no unknown
    if (!i_master && !j_master) {
      const int bi = block_of.at(m.i);
      const int bj = block_of.at(m.j);
      joint.precision.template block<2, 2>(2 * bi, 2 * bi) += aa / s;
      joint.precision.template block<2, 2>(2 * bj, 2 * bj) += bb / s;
      joint.precision.template block<2, 2>(2 * bi, 2 * bj) += ab / s;
      joint.precision.template block<2, 2>(2 * bj, 2 * bi) += ab.transpose() / s;
    } else if (j_master) {
      const int bi = block_of.at(m.i);
      // Master clock expressed in j's epoch frame.
      const Vec2<S> value(S(1), static_cast<S>(-joint.epochs[m.j - 1]));
      joint.precision.template block<2, 2>(2 * bi, 2 * bi) += aa / s;
      joint.info.template segment<2>(2 * bi) -= (ab * value) / s;
    } else {
      const int bj = block_of.at(m.j);
      const Vec2<S> value(S(1), static_cast<S>(-joint.epochs[m.i - 1]));
      joint.precision.template block<2, 2>(2 * bj, 2 * bj) += bb / s;
      joint.info.template segment<2>(2 * bj) -= (ab.transpose() * value) / s;
    }
  }
  return joint;
}

template <class S>
std::vector<NodeMarginal> solve_marginals(const JointSystem<S>& joint) {
  using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
  using VecX = Eigen::Matrix<S, Eigen::Dynamic, 1>;
  const Eigen::Index dim = joint.precision.rows();
  VecX d(dim);
  for (Eigen::Index k = 0; k < dim; ++k) {
    const S diag = joint.precision(k, k);
    if (!(diag > S(0)) || !std::isfinite(static_cast<double>(diag))) {
      throw SingularPosterior("posterior precision has a non-positive diagonal");
    }
    d[k] = S(1) / std::sqrt(diag);
  }
  // Jacobi equilibration: the raw precision mixes prior-scale (~1e-2) and
  // Gram-scale (~1e14) entries, which would sink a direct factorization.
  const MatX scaled = d.asDiagonal() * joint.precision * d.asDiagonal();
  const Eigen::LDLT<MatX> ldlt(scaled);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    throw SingularPosterior("posterior precision is not positive definite");
  }
  const VecX mean = d.asDiagonal() * ldlt.solve(VecX(d.asDiagonal() * joint.info));
  const MatX cov_scaled = ldlt.solve(MatX::Identity(dim, dim));

  std::vector<NodeMarginal> out(joint.order.size());
  for (std::size_t k = 0; k < joint.order.size(); ++k) {
    out[k].node = joint.order[k];
    out[k].mean = mean.template segment<2>(2 * k).template cast<double>();
    const Mat2<S> cs = cov_scaled.template block<2, 2>(2 * k, 2 * k);
    const Vec2<S> dk = d.template segment<2>(2 * k);
    out[k].cov = Mat2<S>(dk.asDiagonal() * cs * dk.asDiagonal()).template cast<double>();
  }
  return out;
}

}  // namespace

DensePosterior assemble_dense_posterior(const Topology& topo,
                                        const std::vector<LinkMeasurements>& meas,
                                        const ModelParams& params) {
  JointSystem<double> j = assemble<double>(topo, meas, params);
  DensePosterior out;
  out.order = std::move(j.order);
  out.precision = std::move(j.precision);
  out.info = std::move(j.info);
  out.epochs = std::move(j.epochs);
  return out;
}

std::vector<NodeMarginal> exact_marginals(const DensePosterior& joint) {
  JointSystem<double> j{joint.order, joint.precision, joint.info, joint.epochs};
  return solve_marginals(j);
}

std::vector<NodeMarginal> exact_marginals(const Topology& topo,
                                          const std::vector<LinkMeasurements>& meas,
                                          const ModelParams& params) {
  return solve_marginals(assemble<long double>(topo, meas, params));
}

}  // namespace syncsim
