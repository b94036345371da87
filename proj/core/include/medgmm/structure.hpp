#pragma once

#include <Eigen/Dense>
#include <vector>

#include "medgmm/linalg.hpp"
#include "medgmm/potts.hpp"
#include "medgmm/rng.hpp"

namespace medgmm {

// Sample correlation of the mediator matrix plus the derived quantities the
// samplers consume.
struct CorrelationSummary {
  Eigen::MatrixXd corr;              // p x p, unit diagonal
  Eigen::MatrixXd abs_corr;          // entrywise absolute values
  std::vector<double> offdiag_abs;   // |corr_ij| over the p(p-1)/2 upper triangle

  int p() const { return static_cast<int>(corr.rows()); }
};

// Pearson sample correlation; n >= 3 and no constant columns.
CorrelationSummary estimate_correlation(const Eigen::MatrixXd& mediators);

// Exact 1-D two-means split of the values (global optimum of the k-means
// objective found by a sorted scan). Returns the two centers, low first.
std::pair<double, double> two_means_1d(const std::vector<double>& values);

struct GraphBuildResult {
  NeighborGraph graph;
  double threshold = 0.0;
  bool degenerate = false;  // all correlations equal: empty graph
};

// Splits |off-diagonal correlations| into background and high groups by
// two-means and connects every pair at or above the midpoint of the centers.
GraphBuildResult build_neighbor_graph(const CorrelationSummary& summary);

// Absolute correlations projected to the nearest positive definite matrix
// with unit diagonal.
SymmetricMatrix build_corrs_D(const CorrelationSummary& summary, double eigen_floor = 1e-6);

// Rewires floor(rate * |E|) edges (at least one when rate > 0): removes that
// many random edges and adds the same count of previously absent pairs.
NeighborGraph perturb_graph(const NeighborGraph& graph, double rate, RngStream& rng);

// Adds one symmetric N(0, sd^2) draw to each off-diagonal pair, clipping to
// [-1, 1]; the diagonal is untouched. Downstream consumers re-project to PD.
CorrelationSummary perturb_correlation(const CorrelationSummary& summary, double noise_sd,
                                       RngStream& rng);

}  // namespace medgmm
