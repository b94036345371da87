#include "medgmm/gmm.hpp"

#include <cmath>
#include <stdexcept>

namespace medgmm {

void FitOptions::validate() const {
  if (burnin >= iterations) throw std::invalid_argument("fit options: burnin must be below iterations");
  if (burnin < 0) throw std::invalid_argument("fit options: burnin must be non-negative");
  if (thin < 1) throw std::invalid_argument("fit options: thin must be at least 1");
  if (dmh_inner_sweeps < 1) throw std::invalid_argument("fit options: dmh_inner_sweeps must be at least 1");
}

Eigen::Vector4d sample_mixture_proportions(const Eigen::VectorXi& gamma, RngStream& rng) {
  double alpha[4] = {1.0, 1.0, 1.0, 1.0};
  for (int j = 0; j < gamma.size(); ++j) alpha[gamma[j] - 1] += 1.0;
  const std::vector<double> draw = rng.dirichlet(std::span<const double>(alpha, 4));
  return {draw[0], draw[1], draw[2], draw[3]};
}

int sample_label(const Eigen::Vector4d& log_marginal_row, const Eigen::Vector4d& log_prior_row,
                 RngStream& rng) {
  const Eigen::Vector4d logw = log_marginal_row + log_prior_row;
  return 1 + rng.categorical_from_log(std::span<const double>(logw.data(), 4));
}

void baseline_gmm_sweep(GibbsEngine& engine, RngStream& rng) {
  const Eigen::Vector4d pi = sample_mixture_proportions(engine.state().mixture.gamma, rng);
  const Eigen::Vector4d log_pi = pi.array().log();
  for (int j : rng.permutation(engine.data().p()))
    engine.set_label(j, sample_label(engine.log_marginal_row(j), log_pi, rng), rng);
  engine.update_shared(rng);
}

PosteriorTrace gmm_fit(const MediationDataset& data, const Hyperparameters& hyper,
                       const FitOptions& options, RngStream& rng) {
  options.validate();
  GibbsEngine engine(data, hyper);
  PosteriorTrace trace;
  trace.reserve(data.p(), options.iterations, options.burnin, options.thin, 0);

  for (long it = 0; it < options.iterations; ++it) {
    baseline_gmm_sweep(engine, rng);
    if (options.refresh_every > 0 && (it + 1) % options.refresh_every == 0) {
      engine.refresh_residuals();
      engine.check_finite_state(it);
    }
    if (it >= options.burnin && (it - options.burnin) % options.thin == 0)
      trace.record(engine.state(), Eigen::VectorXd());
  }
  return trace;
}

}  // namespace medgmm
