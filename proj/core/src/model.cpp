#include "medgmm/model.hpp"

#include <stdexcept>

namespace medgmm {

void Hyperparameters::validate() const {
  if (!(df > 1.0)) throw std::invalid_argument("hyperparameters: df must exceed 1");
  if (!(h_a > 0 && l_a > 0 && h1 > 0 && l1 > 0 && h2 > 0 && l2 > 0))
    throw std::invalid_argument("hyperparameters: inverse-gamma shapes/rates must be positive");
  if (psi0.determinant() <= 0 || psi0(0, 0) <= 0)
    throw std::invalid_argument("hyperparameters: psi0 must be positive definite");
  if (!(dmh_step_sd > 0)) throw std::invalid_argument("hyperparameters: dmh_step_sd must be positive");
  if ((field_prior_sd.array() <= 0).any() || (coupling_prior_sd.array() <= 0).any())
    throw std::invalid_argument("hyperparameters: prior sds must be positive");
  if (!(corrs_ig_shape > 0 && corrs_ig_rate > 0))
    throw std::invalid_argument("hyperparameters: corrs IG hyperprior must be positive");
}

CausalEffects causal_effects(const OutcomeState& outcome, const MediatorState& mediator,
                             double a, double a_star) {
  CausalEffects eff;
  const double contrast = a - a_star;
  eff.per_mediator_nie = contrast * (mediator.alpha_a.array() * outcome.beta_m.array());
  eff.nde = outcome.beta_a * contrast;
  eff.nie = eff.per_mediator_nie.sum();
  eff.te = eff.nde + eff.nie;
  return eff;
}

}  // namespace medgmm
