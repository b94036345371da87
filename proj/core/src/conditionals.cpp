#include "medgmm/conditionals.hpp"

#include <cmath>
#include <stdexcept>

#include "medgmm/distributions.hpp"

namespace medgmm {

GibbsEngine::GibbsEngine(const MediationDataset& data, const Hyperparameters& hyper)
    : data_(&data), hyper_(hyper) {
  hyper_.validate();
  const int n = data.n(), p = data.p(), q = data.q();
  if (n < 2 || p < 1) throw std::invalid_argument("GibbsEngine: dataset too small");

  m_sq_norm_.resize(p);
  m_dot_a_.resize(p);
  for (int j = 0; j < p; ++j) {
    m_sq_norm_[j] = data.mediators.col(j).squaredNorm();
    m_dot_a_[j] = data.mediators.col(j).dot(data.exposure);
  }
  a_sq_norm_ = data.exposure.squaredNorm();
  c_dot_m_ = data.covariates.transpose() * data.mediators;
  c_dot_a_ = data.covariates.transpose() * data.exposure;
  c_gram_ = data.covariates.transpose() * data.covariates;
  for (int w = 0; w < q; ++w)
    if (c_gram_(w, w) == 0.0)
      throw std::invalid_argument("GibbsEngine: covariate column " + std::to_string(w) +
                                  " has zero sum of squares");

  state_.outcome.beta_m = Eigen::VectorXd::Zero(p);
  state_.outcome.beta_c = Eigen::VectorXd::Zero(q);
  state_.mediator.alpha_a = Eigen::VectorXd::Zero(p);
  state_.mediator.alpha_c = Eigen::MatrixXd::Zero(p, q);
  state_.mixture.gamma = Eigen::VectorXi::Constant(p, 4);
  state_.mixture.V1 = 0.5 * Eigen::Matrix2d::Identity();
  state_.mixture.v2 = 0.5;
  state_.mixture.v3 = 0.5;

  resid_y_ = data.outcome;
}

Eigen::Vector2d GibbsEngine::pair_precision_diag(int j) const {
  return {m_sq_norm_[j] / state_.outcome.sigma_e2, a_sq_norm_ / state_.mediator.sigma_g2};
}

Eigen::Vector2d GibbsEngine::pair_linear_term(int j) const {
  // outcome side: residual with mediator j's own contribution added back
  const double w1 = (data_->mediators.col(j).dot(resid_y_) +
                     state_.outcome.beta_m[j] * m_sq_norm_[j]) /
                    state_.outcome.sigma_e2;
  // mediator side: exposure against M_j net of covariates
  double cross = m_dot_a_[j];
  if (data_->q() > 0) cross -= c_dot_a_.dot(state_.mediator.alpha_c.row(j));
  const double w2 = cross / state_.mediator.sigma_g2;
  return {w1, w2};
}

double GibbsEngine::component_log_marginal(int j, int k) const {
  if (k < 1 || k > 4) throw std::invalid_argument("component_log_marginal: label out of range");
  if (k == 4) return 0.0;
  const Eigen::Vector2d wdiag = pair_precision_diag(j);
  const Eigen::Vector2d w = pair_linear_term(j);
  if (k == 2) {
    const double prec = wdiag[0] + 1.0 / state_.mixture.v2;
    return -0.5 * std::log1p(wdiag[0] * state_.mixture.v2) + 0.5 * w[0] * w[0] / prec;
  }
  if (k == 3) {
    const double prec = wdiag[1] + 1.0 / state_.mixture.v3;
    return -0.5 * std::log1p(wdiag[1] * state_.mixture.v3) + 0.5 * w[1] * w[1] / prec;
  }
  const Eigen::Matrix2d& v1 = state_.mixture.V1;
  // |W V1 + I| and w'(W + V1^{-1})^{-1} w, all 2x2 closed form
  const double det = (1.0 + wdiag[0] * v1(0, 0)) * (1.0 + wdiag[1] * v1(1, 1)) -
                     wdiag[0] * wdiag[1] * v1(0, 1) * v1(1, 0);
  Eigen::Matrix2d b = v1.inverse();
  b(0, 0) += wdiag[0];
  b(1, 1) += wdiag[1];
  const Eigen::Vector2d sol = b.inverse() * w;
  return -0.5 * std::log(det) + 0.5 * w.dot(sol);
}

Eigen::Vector4d GibbsEngine::log_marginal_row(int j) const {
  Eigen::Vector4d row;
  const Eigen::Vector2d wdiag = pair_precision_diag(j);
  const Eigen::Vector2d w = pair_linear_term(j);
  {
    const Eigen::Matrix2d& v1 = state_.mixture.V1;
    const double det = (1.0 + wdiag[0] * v1(0, 0)) * (1.0 + wdiag[1] * v1(1, 1)) -
                       wdiag[0] * wdiag[1] * v1(0, 1) * v1(1, 0);
    Eigen::Matrix2d b = v1.inverse();
    b(0, 0) += wdiag[0];
    b(1, 1) += wdiag[1];
    const Eigen::Vector2d sol = b.inverse() * w;
    row[0] = -0.5 * std::log(det) + 0.5 * w.dot(sol);
  }
  {
    const double prec = wdiag[0] + 1.0 / state_.mixture.v2;
    row[1] = -0.5 * std::log1p(wdiag[0] * state_.mixture.v2) + 0.5 * w[0] * w[0] / prec;
  }
  {
    const double prec = wdiag[1] + 1.0 / state_.mixture.v3;
    row[2] = -0.5 * std::log1p(wdiag[1] * state_.mixture.v3) + 0.5 * w[1] * w[1] / prec;
  }
  row[3] = 0.0;
  return row;
}

void GibbsEngine::update_effect_pair(int j, RngStream& rng) {
  const int k = state_.mixture.gamma[j];
  const double old_beta = state_.outcome.beta_m[j];
  double new_beta = 0.0, new_alpha = 0.0;

  if (k == 1) {
    const Eigen::Vector2d wdiag = pair_precision_diag(j);
    const Eigen::Vector2d w = pair_linear_term(j);
    Eigen::Matrix2d prec = state_.mixture.V1.inverse();
    prec(0, 0) += wdiag[0];
    prec(1, 1) += wdiag[1];
    const Eigen::Matrix2d cov = prec.inverse();
    const Eigen::Vector2d draw = sample_mvn2(cov * w, cov, rng);
    new_beta = draw[0];
    new_alpha = draw[1];
  } else if (k == 2) {
    const Eigen::Vector2d wdiag = pair_precision_diag(j);
    const Eigen::Vector2d w = pair_linear_term(j);
    const double var = 1.0 / (wdiag[0] + 1.0 / state_.mixture.v2);
    new_beta = w[0] * var + std::sqrt(var) * rng.normal();
  } else if (k == 3) {
    const Eigen::Vector2d wdiag = pair_precision_diag(j);
    const Eigen::Vector2d w = pair_linear_term(j);
    const double var = 1.0 / (wdiag[1] + 1.0 / state_.mixture.v3);
    new_alpha = w[1] * var + std::sqrt(var) * rng.normal();
  }
  // k == 4 keeps the exact zeros

  state_.outcome.beta_m[j] = new_beta;
  state_.mediator.alpha_a[j] = new_alpha;
  if (new_beta != old_beta) resid_y_ += data_->mediators.col(j) * (old_beta - new_beta);
}

void GibbsEngine::set_label(int j, int k, RngStream& rng) {
  state_.mixture.gamma[j] = k;
  update_effect_pair(j, rng);
}

void GibbsEngine::update_V1(RngStream& rng) {
  Eigen::Matrix2d scatter = Eigen::Matrix2d::Zero();
  int count = 0;
  for (int j = 0; j < data_->p(); ++j) {
    if (state_.mixture.gamma[j] != 1) continue;
    const Eigen::Vector2d pair{state_.outcome.beta_m[j], state_.mediator.alpha_a[j]};
    scatter += pair * pair.transpose();
    ++count;
  }
  const SymmetricMatrix scale(hyper_.psi0 + scatter);
  state_.mixture.V1 = sample_inverse_wishart(scale, hyper_.df + count, rng).mat();
}

void GibbsEngine::update_v2(RngStream& rng) {
  double ss = 0.0;
  int count = 0;
  for (int j = 0; j < data_->p(); ++j) {
    if (state_.mixture.gamma[j] != 2) continue;
    ss += state_.outcome.beta_m[j] * state_.outcome.beta_m[j];
    ++count;
  }
  state_.mixture.v2 = sample_inverse_gamma(0.5 * (count + hyper_.df), 0.5 * (hyper_.psi0(0, 0) + ss), rng);
}

void GibbsEngine::update_v3(RngStream& rng) {
  double ss = 0.0;
  int count = 0;
  for (int j = 0; j < data_->p(); ++j) {
    if (state_.mixture.gamma[j] != 3) continue;
    ss += state_.mediator.alpha_a[j] * state_.mediator.alpha_a[j];
    ++count;
  }
  state_.mixture.v3 = sample_inverse_gamma(0.5 * (count + hyper_.df), 0.5 * (hyper_.psi0(1, 1) + ss), rng);
}

void GibbsEngine::update_beta_a(RngStream& rng) {
  const double old = state_.outcome.beta_a;
  // residual with the exposure term added back
  const double cross = data_->exposure.dot(resid_y_) + old * a_sq_norm_;
  const double mean = cross / (state_.outcome.sigma_e2 / state_.outcome.sigma_a2 + a_sq_norm_);
  const double var = 1.0 / (1.0 / state_.outcome.sigma_a2 + a_sq_norm_ / state_.outcome.sigma_e2);
  state_.outcome.beta_a = mean + std::sqrt(var) * rng.normal();
  resid_y_ += data_->exposure * (old - state_.outcome.beta_a);
}

void GibbsEngine::update_sigma_a2(RngStream& rng) {
  const double b = state_.outcome.beta_a;
  state_.outcome.sigma_a2 = sample_inverse_gamma(0.5 + hyper_.h_a, 0.5 * b * b + hyper_.l_a, rng);
}

void GibbsEngine::update_sigma_e2(RngStream& rng) {
  state_.outcome.sigma_e2 =
      sample_inverse_gamma(0.5 * data_->n() + hyper_.h1, 0.5 * outcome_rss() + hyper_.l1, rng);
}

void GibbsEngine::update_sigma_g2(RngStream& rng) {
  state_.mediator.sigma_g2 = sample_inverse_gamma(
      0.5 * double(data_->p()) * data_->n() + hyper_.h2, 0.5 * mediator_rss() + hyper_.l2, rng);
}

void GibbsEngine::update_beta_c(RngStream& rng) {
  for (int w = 0; w < data_->q(); ++w) {
    const double old = state_.outcome.beta_c[w];
    const double css = c_gram_(w, w);
    const double cross = data_->covariates.col(w).dot(resid_y_) + old * css;
    const double sd = std::sqrt(state_.outcome.sigma_e2 / css);
    state_.outcome.beta_c[w] = cross / css + sd * rng.normal();
    resid_y_ += data_->covariates.col(w) * (old - state_.outcome.beta_c[w]);
  }
}

void GibbsEngine::update_alpha_c(RngStream& rng) {
  const int q = data_->q();
  if (q == 0) return;
  for (int j = 0; j < data_->p(); ++j) {
    for (int w = 0; w < q; ++w) {
      double cross = c_dot_m_(w, j) - state_.mediator.alpha_a[j] * c_dot_a_[w];
      for (int s = 0; s < q; ++s)
        if (s != w) cross -= c_gram_(w, s) * state_.mediator.alpha_c(j, s);
      const double css = c_gram_(w, w);
      const double sd = std::sqrt(state_.mediator.sigma_g2 / css);
      state_.mediator.alpha_c(j, w) = cross / css + sd * rng.normal();
    }
  }
}

void GibbsEngine::update_shared(RngStream& rng) {
  update_V1(rng);
  update_v2(rng);
  update_v3(rng);
  update_beta_a(rng);
  update_sigma_a2(rng);
  update_sigma_e2(rng);
  update_sigma_g2(rng);
  update_beta_c(rng);
  update_alpha_c(rng);
}

double GibbsEngine::mediator_rss() const {
  // per-column residual sum assembled from fixed cross products
  const int q = data_->q();
  double total = 0.0;
  for (int j = 0; j < data_->p(); ++j) {
    const double aj = state_.mediator.alpha_a[j];
    double rss = m_sq_norm_[j] - 2.0 * aj * m_dot_a_[j] + aj * aj * a_sq_norm_;
    if (q > 0) {
      const Eigen::VectorXd acj = state_.mediator.alpha_c.row(j);
      rss += -2.0 * c_dot_m_.col(j).dot(acj) + 2.0 * aj * c_dot_a_.dot(acj) +
             acj.dot(c_gram_ * acj);
    }
    total += rss;
  }
  return total;
}

void GibbsEngine::refresh_residuals() {
  resid_y_ = data_->outcome - data_->mediators * state_.outcome.beta_m -
             data_->exposure * state_.outcome.beta_a;
  if (data_->q() > 0) resid_y_ -= data_->covariates * state_.outcome.beta_c;
}

void GibbsEngine::check_finite_state(long iteration) const {
  if (std::isfinite(outcome_rss()) && std::isfinite(state_.outcome.sigma_e2) &&
      std::isfinite(state_.mediator.sigma_g2))
    return;
  throw std::runtime_error(
      "sampler diverged at iteration " + std::to_string(iteration) +
      ": outcome rss=" + std::to_string(outcome_rss()) +
      " sigma_e2=" + std::to_string(state_.outcome.sigma_e2) +
      " sigma_g2=" + std::to_string(state_.mediator.sigma_g2) +
      " beta_a=" + std::to_string(state_.outcome.beta_a));
}

}  // namespace medgmm
