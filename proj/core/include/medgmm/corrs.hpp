#pragma once

#include <array>

#include "medgmm/analysis.hpp"
#include "medgmm/conditionals.hpp"
#include "medgmm/fitopts.hpp"
#include "medgmm/linalg.hpp"

namespace medgmm {

// Fixed correlation-structure input for the CorrS sampler: the positive
// definite matrix D with its inverse cached once for the whole run (the
// per-iteration cost is the p x p solve in the logit-block update).
struct CorrsStructure {
  Eigen::MatrixXd d;
  Eigen::MatrixXd d_inv;
  Eigen::VectorXd d_inv_ones;  // D^{-1} 1, the shared-prior-mean image

  explicit CorrsStructure(const SymmetricMatrix& structure);
  int p() const { return static_cast<int>(d.rows()); }
};

// Stick-breaking / Polya-Gamma latent state: logits b (p x 3), their field
// scales, PG auxiliaries and the derived mixing probabilities (p x 4).
struct CorrSState {
  Eigen::MatrixXd logits;       // b_jk
  Eigen::Vector3d sigma_d2{1.0, 1.0, 1.0};
  Eigen::Vector3d prior_mean;   // a_k, shared across mediators
  Eigen::MatrixXd pg;           // w_jk
  Eigen::MatrixXd pi;           // p x 4
  long clamp_events = 0;

  static CorrSState init(int p, const Hyperparameters& hyper);
};

// Cascade mapping three logits to four multinomial probabilities.
Eigen::Vector4d stick_probs(const Eigen::Vector3d& logits);
// Algebraic inverse of the cascade (probabilities must be strictly positive).
Eigen::Vector3d stick_logits(const Eigen::Vector4d& probs);

// n_j1 = 1, n_jk = 1 - sum_{k'<k} I(gamma_j = k').
std::array<int, 3> stick_counts(int gamma_j);

// w_jk ~ PG(n_jk, b_jk); exactly zero wherever the stick is already consumed.
void update_pg_auxiliaries(const Eigen::VectorXi& gamma, CorrSState& state, RngStream& rng);

// Joint draw of the whole logit block b_k given the PG auxiliaries, with
// precision diag(w_k) + D^{-1}/sigma_d2[k]. Refreshes pi rows afterwards when
// `refresh_pi` is set.
void update_b_block(int k, const Eigen::VectorXi& gamma, CorrSState& state,
                    const CorrsStructure& structure, RngStream& rng, bool refresh_pi = true);

double update_sigma_d2(int k, CorrSState& state, const CorrsStructure& structure,
                       const Hyperparameters& hyper, RngStream& rng);

// Label draw combining the mediator's own mixing probabilities with the data
// evidence.
int corrs_label_update(int j, const CorrSState& state, const Eigen::Vector4d& log_marginals,
                       RngStream& rng);

PosteriorTrace corrs_fit(const MediationDataset& data, const SymmetricMatrix& structure,
                         const Hyperparameters& hyper, const FitOptions& options, RngStream& rng);

}  // namespace medgmm
