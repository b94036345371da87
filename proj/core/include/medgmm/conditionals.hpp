#pragma once

#include <Eigen/Dense>

#include "medgmm/data.hpp"
#include "medgmm/model.hpp"
#include "medgmm/rng.hpp"

namespace medgmm {

// Full parameter state of one chain (prior-specific state lives with the
// sampler that owns it).
struct ChainState {
  OutcomeState outcome;
  MediatorState mediator;
  MixtureState mixture;
};

// Shared mediation-model machinery: sufficient statistics, the running
// outcome residual, the effect-pair and label evidence computations, and
// every conjugate conditional common to the three samplers.
//
// The outcome residual r = Y - A beta_a - C beta_c - M beta_m is maintained
// incrementally (rank-1 column updates), so one full sweep over mediators
// costs O(np) regardless of p.
class GibbsEngine {
 public:
  GibbsEngine(const MediationDataset& data, const Hyperparameters& hyper);

  const MediationDataset& data() const { return *data_; }
  const Hyperparameters& hyper() const { return hyper_; }
  ChainState& state() { return state_; }
  const ChainState& state() const { return state_; }

  // Data evidence for the pair (beta_m[j], alpha_a[j]): precision contribution
  // W_j = diag(sum M_ij^2 / sigma_e2, sum A_i^2 / sigma_g2) and the linear
  // term w_j built from the residuals that exclude mediator j's own effects.
  Eigen::Vector2d pair_precision_diag(int j) const;
  Eigen::Vector2d pair_linear_term(int j) const;

  // log p(data | gamma_j = k) with the pair integrated out, up to a constant
  // shared by all k (component 4 is the reference and returns 0).
  double component_log_marginal(int j, int k) const;
  Eigen::Vector4d log_marginal_row(int j) const;

  // Draws (beta_m[j], alpha_a[j]) from its conditional under the current
  // label and folds the change into the outcome residual.
  void update_effect_pair(int j, RngStream& rng);
  // Label assignment plus the conditional pair redraw that keeps the mixture
  // invariants (zeros matching labels) intact.
  void set_label(int j, int k, RngStream& rng);

  // Mixture covariance updates: V1 from its inverse-Wishart conditional, v2
  // and v3 from the one-dimensional reductions.
  void update_V1(RngStream& rng);
  void update_v2(RngStream& rng);
  void update_v3(RngStream& rng);

  void update_beta_a(RngStream& rng);
  void update_sigma_a2(RngStream& rng);
  void update_sigma_e2(RngStream& rng);
  void update_sigma_g2(RngStream& rng);
  void update_beta_c(RngStream& rng);
  void update_alpha_c(RngStream& rng);

  // All of the above in fit order (V updates, then the regression scalars).
  void update_shared(RngStream& rng);

  double outcome_rss() const { return resid_y_.squaredNorm(); }
  double mediator_rss() const;

  // Recomputes the running residual from scratch; called periodically to
  // stop incremental drift over long chains.
  void refresh_residuals();

  // Aborts the chain on a non-finite residual (divergence guard).
  void check_finite_state(long iteration) const;

 private:
  const MediationDataset* data_;
  Hyperparameters hyper_;
  ChainState state_;

  // fixed data statistics
  Eigen::VectorXd m_sq_norm_;  // ||M_j||^2, p
  double a_sq_norm_ = 0.0;     // ||A||^2
  Eigen::VectorXd m_dot_a_;    // M_j . A, p
  Eigen::MatrixXd c_dot_m_;    // C'M, q x p
  Eigen::VectorXd c_dot_a_;    // C'A, q
  Eigen::MatrixXd c_gram_;     // C'C, q x q

  Eigen::VectorXd resid_y_;    // n, running outcome residual
};

}  // namespace medgmm
