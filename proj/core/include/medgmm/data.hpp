#pragma once

#include <Eigen/Dense>
#include <string>

namespace medgmm {

// Observed data for one analysis: exposure, mediator matrix, outcome and
// optional covariates for n subjects.
struct MediationDataset {
  Eigen::VectorXd exposure;    // A, n
  Eigen::MatrixXd mediators;   // M, n x p
  Eigen::VectorXd outcome;     // Y, n
  Eigen::MatrixXd covariates;  // C, n x q (q may be 0)

  int n() const { return static_cast<int>(outcome.size()); }
  int p() const { return static_cast<int>(mediators.cols()); }
  int q() const { return static_cast<int>(covariates.cols()); }

  // Throws on non-finite entries, dimension disagreement, n < 2, p < 1, or
  // constant columns (which break the covariate/mediator conditionals).
  void validate() const;
};

// Column means and standard deviations used to center/scale a dataset before
// sampling and to map coefficient draws back to the input scale.
struct Standardizer {
  double a_mean = 0.0, a_sd = 1.0;
  double y_mean = 0.0, y_sd = 1.0;
  Eigen::VectorXd m_mean, m_sd;  // p
  Eigen::VectorXd c_mean, c_sd;  // q

  static Standardizer fit(const MediationDataset& data);
  MediationDataset apply(const MediationDataset& data) const;
};

}  // namespace medgmm
