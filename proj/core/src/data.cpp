#include "medgmm/data.hpp"

#include <cmath>
#include <stdexcept>

namespace medgmm {

namespace {

void check_finite(const Eigen::MatrixXd& m, const std::string& name) {
  if (!m.allFinite()) throw std::invalid_argument("dataset: non-finite entries in " + name);
}

double column_sd(const Eigen::VectorXd& col) {
  const double mean = col.mean();
  const double ss = (col.array() - mean).square().sum();
  return std::sqrt(ss / (col.size() - 1));
}

}  // namespace

void MediationDataset::validate() const {
  const int nn = n();
  if (nn < 2) throw std::invalid_argument("dataset: need at least 2 subjects");
  if (p() < 1) throw std::invalid_argument("dataset: need at least 1 mediator");
  if (exposure.size() != nn || mediators.rows() != nn)
    throw std::invalid_argument("dataset: dimension mismatch between A, M and Y");
  if (covariates.size() > 0 && covariates.rows() != nn)
    throw std::invalid_argument("dataset: covariate rows do not match n");
  check_finite(exposure, "exposure");
  check_finite(mediators, "mediators");
  check_finite(outcome, "outcome");
  if (covariates.size() > 0) check_finite(covariates, "covariates");

  if (column_sd(exposure) == 0.0) throw std::invalid_argument("dataset: exposure column is constant");
  if (column_sd(outcome) == 0.0) throw std::invalid_argument("dataset: outcome column is constant");
  for (int j = 0; j < p(); ++j)
    if (column_sd(mediators.col(j)) == 0.0)
      throw std::invalid_argument("dataset: mediator column " + std::to_string(j) + " is constant");
  for (int w = 0; w < q(); ++w)
    if (column_sd(covariates.col(w)) == 0.0)
      throw std::invalid_argument("dataset: covariate column " + std::to_string(w) + " is constant");
}

Standardizer Standardizer::fit(const MediationDataset& data) {
  Standardizer s;
  s.a_mean = data.exposure.mean();
  s.a_sd = column_sd(data.exposure);
  s.y_mean = data.outcome.mean();
  s.y_sd = column_sd(data.outcome);
  s.m_mean.resize(data.p());
  s.m_sd.resize(data.p());
  for (int j = 0; j < data.p(); ++j) {
    s.m_mean[j] = data.mediators.col(j).mean();
    s.m_sd[j] = column_sd(data.mediators.col(j));
  }
  s.c_mean.resize(data.q());
  s.c_sd.resize(data.q());
  for (int w = 0; w < data.q(); ++w) {
    s.c_mean[w] = data.covariates.col(w).mean();
    s.c_sd[w] = column_sd(data.covariates.col(w));
  }
  return s;
}

MediationDataset Standardizer::apply(const MediationDataset& data) const {
  MediationDataset out;
  out.exposure = (data.exposure.array() - a_mean) / a_sd;
  out.outcome = (data.outcome.array() - y_mean) / y_sd;
  out.mediators = data.mediators;
  for (int j = 0; j < data.p(); ++j)
    out.mediators.col(j) = (data.mediators.col(j).array() - m_mean[j]) / m_sd[j];
  out.covariates = data.covariates;
  for (int w = 0; w < data.q(); ++w)
    out.covariates.col(w) = (data.covariates.col(w).array() - c_mean[w]) / c_sd[w];
  return out;
}

}  // namespace medgmm
