#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "medgmm/analysis.hpp"
#include "medgmm/conditionals.hpp"
#include "medgmm/fitopts.hpp"

namespace medgmm {

// Undirected simple graph over mediators. Edges are stored once as (i, j)
// with i < j; adjacency lists are derived.
struct NeighborGraph {
  int p = 0;
  std::vector<std::pair<int, int>> edges;
  std::vector<std::vector<int>> neighbors;       // node -> neighbor nodes
  std::vector<std::vector<int>> incident_edges;  // node -> edge ids

  static NeighborGraph from_edges(int p, std::vector<std::pair<int, int>> edges);
  int edge_count() const { return static_cast<int>(edges.size()); }
};

// Potts prior parameters over the four components: external field (theta_0)
// and same-label coupling (theta_1) on the neighbor graph.
struct PottsState {
  Eigen::Vector4d field = Eigen::Vector4d::Zero();
  Eigen::Vector4d coupling = Eigen::Vector4d::Zero();
  const NeighborGraph* graph = nullptr;
};

// Bond variables drawn during a Swendsen-Wang sweep; u > 1 marks an active
// bond forcing its endpoints into one cluster.
struct BondSet {
  std::vector<double> u;  // per edge
};

// Conditional label probabilities for site j given its neighbors (field +
// coupling + data evidence), normalized.
Eigen::Vector4d potts_conditional_label(int j, const Eigen::VectorXi& gamma,
                                        const PottsState& potts,
                                        const Eigen::Vector4d& data_log_marginals);

// Unnormalized log Potts density (field and coupling sufficient statistics).
double potts_log_unnorm(const Eigen::VectorXi& gamma, const PottsState& potts);

// Single-site Gibbs sweeps under the prior alone (zero data terms), used for
// the double-MH auxiliary simulation and for prior checks.
void sample_gamma_from_prior(const PottsState& potts, int sweeps, Eigen::VectorXi& gamma,
                             RngStream& rng);

enum class PottsParam { Field, Coupling };

// Double Metropolis-Hastings update of one field/coupling component: propose
// from a normal random walk, simulate an auxiliary label field from the
// proposal, accept on the ratio in which the intractable normalizing
// constants cancel. Returns whether the proposal was accepted.
bool dmh_update_theta(PottsParam which, int k, const Eigen::VectorXi& gamma, PottsState& potts,
                      const Hyperparameters& hyper, int inner_sweeps, RngStream& rng);

// Swendsen-Wang sweep: bond draws, union-find clusters, then sequential
// cluster relabeling restricted to labels whose coupling keeps every incident
// bond value legal. `log_marginal` is consulted lazily per cluster so callers
// may recompute evidence as labels (and effect pairs) change; `on_relabel`
// runs after each cluster assignment. `bonds_out`, when given, receives the
// drawn bond values.
void sw_sweep(Eigen::VectorXi& gamma, const PottsState& potts,
              const std::function<Eigen::Vector4d(int)>& log_marginal, RngStream& rng,
              const std::function<void(const std::vector<int>&, int)>& on_relabel = {},
              BondSet* bonds_out = nullptr);

PosteriorTrace potts_fit(const MediationDataset& data, const NeighborGraph& graph,
                         const Hyperparameters& hyper, const FitOptions& options,
                         RngStream& rng);

}  // namespace medgmm
