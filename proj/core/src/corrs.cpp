#include "medgmm/corrs.hpp"

#include <cmath>
#include <stdexcept>

#include "medgmm/distributions.hpp"
#include "medgmm/gmm.hpp"

namespace medgmm {

namespace {

constexpr double kLogitClamp = 35.0;

double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

CorrsStructure::CorrsStructure(const SymmetricMatrix& structure) {
  if (!structure.factorize())
    throw std::invalid_argument("corrs structure matrix is not positive definite (min eigenvalue " +
                                std::to_string(structure.min_eigenvalue()) + ")");
  d = structure.mat();
  d_inv = structure.cholesky().solve(Eigen::MatrixXd::Identity(d.rows(), d.cols()));
  d_inv = 0.5 * (d_inv + d_inv.transpose().eval());
  d_inv_ones = d_inv.rowwise().sum();
}

CorrSState CorrSState::init(int p, const Hyperparameters& hyper) {
  CorrSState s;
  s.prior_mean = hyper.stick_prior_mean;
  s.logits = s.prior_mean.transpose().replicate(p, 1);
  s.pg = Eigen::MatrixXd::Zero(p, 3);
  s.pi.resize(p, 4);
  for (int j = 0; j < p; ++j) s.pi.row(j) = stick_probs(s.logits.row(j));
  return s;
}

Eigen::Vector4d stick_probs(const Eigen::Vector3d& logits) {
  Eigen::Vector4d pi;
  double remainder = 1.0;
  for (int k = 0; k < 3; ++k) {
    const double e = expit(logits[k]);
    pi[k] = remainder * e;
    remainder *= expit(-logits[k]);  // 1 - e, computed without cancellation
  }
  pi[3] = remainder;
  return pi;
}

Eigen::Vector3d stick_logits(const Eigen::Vector4d& probs) {
  // logit of the conditional break via suffix sums: b_k = log(pi_k) -
  // log(pi_{k+1} + ... + pi_4), which avoids cancellation at extreme breaks
  Eigen::Vector3d b;
  for (int k = 0; k < 3; ++k) {
    double suffix = 0.0;
    for (int j = 3; j > k; --j) suffix += probs[j];
    if (!(probs[k] > 0.0 && suffix > 0.0))
      throw std::invalid_argument("stick_logits: probabilities must be strictly inside the simplex");
    b[k] = std::log(probs[k]) - std::log(suffix);
  }
  return b;
}

std::array<int, 3> stick_counts(int gamma_j) {
  return {1, gamma_j > 1 ? 1 : 0, gamma_j > 2 ? 1 : 0};
}

void update_pg_auxiliaries(const Eigen::VectorXi& gamma, CorrSState& state, RngStream& rng) {
  const int p = static_cast<int>(gamma.size());
  for (int j = 0; j < p; ++j) {
    const auto counts = stick_counts(gamma[j]);
    for (int k = 0; k < 3; ++k)
      state.pg(j, k) = sample_polya_gamma(counts[k], state.logits(j, k), rng);
  }
}

void update_b_block(int k, const Eigen::VectorXi& gamma, CorrSState& state,
                    const CorrsStructure& structure, RngStream& rng, bool refresh_pi) {
  const int p = structure.p();
  const double inv_scale = 1.0 / state.sigma_d2[k];

  Eigen::MatrixXd precision = structure.d_inv * inv_scale;
  Eigen::VectorXd linear = (state.prior_mean[k] * inv_scale) * structure.d_inv_ones;
  for (int j = 0; j < p; ++j) {
    precision(j, j) += state.pg(j, k);
    const auto counts = stick_counts(gamma[j]);
    linear[j] += (gamma[j] == k + 1 ? 1.0 : 0.0) - 0.5 * counts[k];
  }

  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(precision, Eigen::EigenvaluesOnly);
    throw std::runtime_error("update_b_block: logit precision factorization failed (min eigenvalue " +
                             std::to_string(es.eigenvalues().minCoeff()) + ", sigma_d2 " +
                             std::to_string(state.sigma_d2[k]) + ")");
  }
  Eigen::VectorXd draw = llt.solve(linear);
  Eigen::VectorXd z(p);
  for (int j = 0; j < p; ++j) z[j] = rng.normal();
  draw += llt.matrixU().solve(z);

  for (int j = 0; j < p; ++j) {
    if (std::abs(draw[j]) > kLogitClamp) {
      draw[j] = draw[j] > 0 ? kLogitClamp : -kLogitClamp;
      ++state.clamp_events;
    }
  }
  state.logits.col(k) = draw;
  if (refresh_pi)
    for (int j = 0; j < p; ++j) state.pi.row(j) = stick_probs(state.logits.row(j));
}

double update_sigma_d2(int k, CorrSState& state, const CorrsStructure& structure,
                       const Hyperparameters& hyper, RngStream& rng) {
  const int p = structure.p();
  const Eigen::VectorXd centered = state.logits.col(k).array() - state.prior_mean[k];
  const double quad = centered.dot(structure.d_inv * centered);
  state.sigma_d2[k] =
      sample_inverse_gamma(hyper.corrs_ig_shape + 0.5 * p, hyper.corrs_ig_rate + 0.5 * quad, rng);
  return state.sigma_d2[k];
}

int corrs_label_update(int j, const CorrSState& state, const Eigen::Vector4d& log_marginals,
                       RngStream& rng) {
  const Eigen::Vector4d log_prior = state.pi.row(j).array().log();
  return sample_label(log_marginals, log_prior, rng);
}

PosteriorTrace corrs_fit(const MediationDataset& data, const SymmetricMatrix& structure,
                         const Hyperparameters& hyper, const FitOptions& options, RngStream& rng) {
  options.validate();
  if (structure.dim() != data.p())
    throw std::invalid_argument("corrs_fit: structure matrix dimension does not match mediator count");
  const CorrsStructure prep(structure);

  GibbsEngine engine(data, hyper);
  CorrSState corrs = CorrSState::init(data.p(), hyper);

  PosteriorTrace trace;
  trace.reserve(data.p(), options.iterations, options.burnin, options.thin, 3);
  trace.extra_names = {"sigma_d2_1", "sigma_d2_2", "sigma_d2_3"};

  Eigen::VectorXi& gamma = engine.state().mixture.gamma;
  for (long it = 0; it < options.iterations; ++it) {
    update_pg_auxiliaries(gamma, corrs, rng);
    for (int k = 0; k < 3; ++k) update_b_block(k, gamma, corrs, prep, rng, /*refresh_pi=*/k == 2);
    for (int k = 0; k < 3; ++k) update_sigma_d2(k, corrs, prep, hyper, rng);
    for (int j : rng.permutation(data.p()))
      engine.set_label(j, corrs_label_update(j, corrs, engine.log_marginal_row(j), rng), rng);
    engine.update_shared(rng);

    if (options.refresh_every > 0 && (it + 1) % options.refresh_every == 0) {
      engine.refresh_residuals();
      engine.check_finite_state(it);
    }
    if (it >= options.burnin && (it - options.burnin) % options.thin == 0)
      trace.record(engine.state(), corrs.sigma_d2);
  }
  trace.clamp_events = corrs.clamp_events;
  return trace;
}

}  // namespace medgmm
