#pragma once

#include <Eigen/Core>
#include <vector>

#include "syncsim/link_model.hpp"

namespace syncsim {

/// Exact per-node posterior marginal in that node's epoch frame.
struct NodeMarginal {
  int node = 0;  // 1-based id
  Vec2d mean = Vec2d::Zero();
  Mat2d cov = Mat2d::Zero();
};

/// Assembled joint posterior over all non-reference nodes: one 2x2 block per
/// agent, reference nodes conditioned on exactly (their links contribute a
/// Gram term to the adjacent diagonal block and a known-value term to the
/// information vector). `order` maps block index to node id.
struct DensePosterior {
  std::vector<int> order;
  Eigen::MatrixXd precision;
  Eigen::VectorXd info;
  std::vector<double> epochs;  // per node id-1, for all n nodes
};

DensePosterior assemble_dense_posterior(const Topology& topo,
                                        const std::vector<LinkMeasurements>& meas,
                                        const ModelParams& params);

/// Solves the assembled system with symmetric diagonal equilibration and
/// returns every agent's exact marginal (joint mean block plus the 2x2
/// diagonal block of the joint covariance). Throws SingularPosterior when
/// the precision is not positive definite.
std::vector<NodeMarginal> exact_marginals(const DensePosterior& joint);

/// Convenience form: assembles and factorizes in extended precision, so the
/// result can serve as an accuracy reference for the message-passing
/// estimators (its own rounding error sits well below double round-off).
std::vector<NodeMarginal> exact_marginals(const Topology& topo,
                                          const std::vector<LinkMeasurements>& meas,
                                          const ModelParams& params);

}  // namespace syncsim
