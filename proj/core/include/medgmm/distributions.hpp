#pragma once

#include <Eigen/Dense>

#include "medgmm/linalg.hpp"
#include "medgmm/rng.hpp"

namespace medgmm {

// Multivariate normal draw. Uses the covariance's cached Cholesky factor when
// present; positive semidefinite covariances (including the zero matrix) fall
// back to an eigenvalue square root. Indefinite covariances throw, naming the
// smallest eigenvalue.
Eigen::VectorXd sample_mvn(const Eigen::VectorXd& mean, const SymmetricMatrix& covariance,
                           RngStream& rng);

// Fixed-size variant for the effect-pair conditionals (covariance passed
// directly, assumed positive definite).
Eigen::Vector2d sample_mvn2(const Eigen::Vector2d& mean, const Eigen::Matrix2d& covariance,
                            RngStream& rng);

// Inverse-Wishart with scale matrix `scale` and `dof` degrees of freedom
// (density |X|^{-(dof+d+1)/2} exp(-tr(scale X^{-1})/2)); mean is
// scale/(dof-d-1). Requires dof > d-1 and a positive-definite scale.
SymmetricMatrix sample_inverse_wishart(const SymmetricMatrix& scale, double dof, RngStream& rng);

// Inverse-gamma with mean rate/(shape-1) for shape > 1.
double sample_inverse_gamma(double shape, double rate, RngStream& rng);

// Polya-Gamma PG(count, tilt) for count in {0, 1}. count = 0 is the point
// mass at zero; count = 1 uses the exact alternating-series rejection sampler
// on the tilted Jacobi density. E[PG(1,c)] = tanh(c/2)/(2c).
double sample_polya_gamma(int count, double tilt, RngStream& rng);

}  // namespace medgmm
