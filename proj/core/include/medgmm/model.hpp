#pragma once

#include <Eigen/Dense>

namespace medgmm {

// Outcome regression Y = M'beta_m + A beta_a + C'beta_c + e, e ~ N(0, sigma_e2).
struct OutcomeState {
  Eigen::VectorXd beta_m;  // p, mediator -> outcome effects
  double beta_a = 0.0;     // direct effect
  Eigen::VectorXd beta_c;  // q
  double sigma_e2 = 1.0;   // residual variance
  double sigma_a2 = 1.0;   // prior variance of beta_a
};

// Mediator regressions M_j = A alpha_a[j] + C'alpha_c[j] + e, e ~ N(0, sigma_g2).
struct MediatorState {
  Eigen::VectorXd alpha_a;  // p, exposure -> mediator effects
  Eigen::MatrixXd alpha_c;  // p x q
  double sigma_g2 = 1.0;    // shared residual variance
};

// Four-component mixture over effect pairs: component 1 both effects free
// (covariance V1), component 2 only beta_m (variance v2), component 3 only
// alpha_a (variance v3), component 4 the point mass at zero.
struct MixtureState {
  Eigen::VectorXi gamma;  // p, labels in {1,2,3,4}
  Eigen::Matrix2d V1 = Eigen::Matrix2d::Identity();
  double v2 = 0.5;
  double v3 = 0.5;
};

struct Hyperparameters {
  Eigen::Matrix2d psi0 = Eigen::Matrix2d::Identity();  // inverse-Wishart scale
  double df = 4.0;                                     // inverse-Wishart dof
  double h_a = 2.0, l_a = 1.0;                         // sigma_a2 ~ IG(h_a, l_a)
  double h1 = 2.0, l1 = 1.0;                           // sigma_e2 ~ IG(h1, l1)
  double h2 = 2.0, l2 = 1.0;                           // sigma_g2 ~ IG(h2, l2)

  // Potts prior: normal priors on the external field and same-label coupling.
  // Field means target 5% / 5% / 10% / 80% prior group proportions.
  Eigen::Vector4d field_prior_mean{-2.772588722239781, -2.772588722239781,
                                   -2.0794415416798357, 0.0};
  Eigen::Vector4d field_prior_sd{1.0, 1.0, 1.0, 1.0};
  Eigen::Vector4d coupling_prior_mean{0.5, 0.5, 0.5, 0.5};
  Eigen::Vector4d coupling_prior_sd{1.0, 1.0, 1.0, 1.0};
  // random-walk sd of the double-MH proposals; 0.4 keeps acceptance rates
  // moderate for both the data-informed field components and the weakly
  // identified couplings
  double dmh_step_sd = 0.4;

  // CorrS prior: shared stick-breaking logit means chosen so the prior group
  // proportions match the same 5/5/10/80 split, and the IG(u, v) hyperprior
  // on the three logit-field scales.
  Eigen::Vector3d stick_prior_mean{-2.9444389791664403, -2.8903717578961645,
                                   -2.0794415416798357};
  double corrs_ig_shape = 2.0;  // u
  double corrs_ig_rate = 2.0;   // v

  void validate() const;
};

// Natural direct/indirect/total effect for an exposure contrast a vs a_star.
struct CausalEffects {
  double nde = 0.0;
  double nie = 0.0;
  double te = 0.0;
  Eigen::VectorXd per_mediator_nie;  // p, (a - a_star) * alpha_a[j] * beta_m[j]
};

CausalEffects causal_effects(const OutcomeState& outcome, const MediatorState& mediator,
                             double a, double a_star);

}  // namespace medgmm
