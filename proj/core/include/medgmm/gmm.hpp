#pragma once

#include "medgmm/analysis.hpp"
#include "medgmm/conditionals.hpp"
#include "medgmm/fitopts.hpp"

namespace medgmm {

// Conjugate Dirichlet(1,1,1,1) update of the shared mixing proportions given
// current label counts.
Eigen::Vector4d sample_mixture_proportions(const Eigen::VectorXi& gamma, RngStream& rng);

// Categorical label draw from data evidence plus per-component log prior.
int sample_label(const Eigen::Vector4d& log_marginal_row, const Eigen::Vector4d& log_prior_row,
                 RngStream& rng);

// One sweep of the baseline sampler: shared proportions, labels with their
// conditional pair redraws, then the shared conditionals.
void baseline_gmm_sweep(GibbsEngine& engine, RngStream& rng);

PosteriorTrace gmm_fit(const MediationDataset& data, const Hyperparameters& hyper,
                       const FitOptions& options, RngStream& rng);

}  // namespace medgmm
