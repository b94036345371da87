#include "medgmm/distributions.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace medgmm {

namespace {

constexpr double kPi = std::numbers::pi;

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// --- Polya-Gamma machinery (exact sampler for PG(1, c)) -------------------
//
// PG(1, c) = J*(1, c/2) / 4 where J* is the Jacobi density tilted by
// exp(-z^2 x / 2). The proposal mixes a truncated inverse-Gaussian head with
// an exponential tail split at t = 0.64; acceptance evaluates the alternating
// series of the Jacobi density.

constexpr double kPgTrunc = 0.64;

double jacobi_coef(int n, double x) {
  const double h = n + 0.5;
  if (x > kPgTrunc) return kPi * h * std::exp(-0.5 * h * h * kPi * kPi * x);
  return kPi * h * std::pow(2.0 / (kPi * x), 1.5) * std::exp(-2.0 * h * h / x);
}

// CDF of inverse-Gaussian(mu = 1/z, lambda = 1) at t, parameterized by z so
// that z = 0 (mu = infinity) is handled without division.
double inv_gauss_cdf(double t, double z) {
  const double rt = std::sqrt(t);
  const double a = (t * z - 1.0) / rt;
  const double b = -(t * z + 1.0) / rt;
  return norm_cdf(a) + std::exp(2.0 * z) * norm_cdf(b);
}

// Inverse-Gaussian(mu = 1/z, lambda = 1) truncated to (0, t].
double truncated_inv_gauss(double z, double t, RngStream& rng) {
  if (1.0 / z > t || z == 0.0) {
    // mu above the truncation point: one-sided stable proposal with
    // exp(-z^2 x / 2) thinning
    for (;;) {
      double e1, e2;
      do {
        e1 = rng.exponential();
        e2 = rng.exponential();
      } while (e1 * e1 > 2.0 * e2 / t);
      const double x = t / ((1.0 + t * e1) * (1.0 + t * e1));
      if (std::log(rng.uniform_pos()) <= -0.5 * z * z * x) return x;
    }
  }
  const double mu = 1.0 / z;
  for (;;) {
    // Michael-Schucany-Haas transform, retried until inside the truncation
    const double y = rng.normal();
    const double y2 = y * y;
    const double w = mu + 0.5 * mu * mu * y2 - 0.5 * mu * std::sqrt(4.0 * mu * y2 + mu * mu * y2 * y2);
    const double x = (rng.uniform() <= mu / (mu + w)) ? w : mu * mu / w;
    if (x <= t) return x;
  }
}

double sample_pg1(double tilt, RngStream& rng) {
  const double z = 0.5 * std::abs(tilt);
  const double k = kPi * kPi / 8.0 + 0.5 * z * z;
  const double p_tail = (0.5 * kPi / k) * std::exp(-k * kPgTrunc);
  const double p_head = 2.0 * std::exp(-z) * inv_gauss_cdf(kPgTrunc, z);
  const double tail_prob = p_tail / (p_tail + p_head);

  for (;;) {
    const double x = (rng.uniform() < tail_prob) ? kPgTrunc + rng.exponential() / k
                                                 : truncated_inv_gauss(z, kPgTrunc, rng);
    // alternating-series accept/reject
    double s = jacobi_coef(0, x);
    const double y = rng.uniform() * s;
    for (int n = 1;; ++n) {
      if (n % 2 == 1) {
        s -= jacobi_coef(n, x);
        if (y <= s) return 0.25 * x;
      } else {
        s += jacobi_coef(n, x);
        if (y > s) break;  // reject this x
      }
    }
  }
}

}  // namespace

Eigen::VectorXd sample_mvn(const Eigen::VectorXd& mean, const SymmetricMatrix& covariance,
                           RngStream& rng) {
  const int d = covariance.dim();
  if (mean.size() != d) throw std::invalid_argument("sample_mvn: mean/covariance dimension mismatch");

  Eigen::VectorXd z(d);
  for (int i = 0; i < d; ++i) z[i] = rng.normal();

  if (covariance.has_certificate() || covariance.factorize())
    return mean + covariance.cholesky().matrixL() * z;

  // PSD fallback (degenerate covariances are legal; indefinite ones are not)
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(covariance.mat());
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  if (ev.minCoeff() < -1e-10 * scale)
    throw std::invalid_argument("sample_mvn: covariance is indefinite (smallest eigenvalue " +
                                std::to_string(ev.minCoeff()) + ")");
  Eigen::VectorXd root = ev.cwiseMax(0.0).cwiseSqrt();
  return mean + es.eigenvectors() * root.asDiagonal() * z;
}

Eigen::Vector2d sample_mvn2(const Eigen::Vector2d& mean, const Eigen::Matrix2d& covariance,
                            RngStream& rng) {
  // direct 2x2 Cholesky
  const double a = covariance(0, 0);
  if (a <= 0.0) throw std::invalid_argument("sample_mvn2: covariance not positive definite");
  const double l11 = std::sqrt(a);
  const double l21 = covariance(1, 0) / l11;
  const double rem = covariance(1, 1) - l21 * l21;
  if (rem <= 0.0) throw std::invalid_argument("sample_mvn2: covariance not positive definite");
  const double l22 = std::sqrt(rem);
  const double z1 = rng.normal();
  const double z2 = rng.normal();
  return {mean[0] + l11 * z1, mean[1] + l21 * z1 + l22 * z2};
}

SymmetricMatrix sample_inverse_wishart(const SymmetricMatrix& scale, double dof, RngStream& rng) {
  const int d = scale.dim();
  if (!(dof > d - 1))
    throw std::invalid_argument("sample_inverse_wishart: dof must exceed dim-1 (got " +
                                std::to_string(dof) + " for dim " + std::to_string(d) + ")");
  if (!scale.factorize())
    throw std::invalid_argument("sample_inverse_wishart: scale matrix is not positive definite");

  // X ~ IW(scale, dof)  <=>  X^{-1} ~ Wishart(scale^{-1}, dof), via Bartlett
  Eigen::MatrixXd bartlett = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    bartlett(i, i) = std::sqrt(rng.chi_squared(dof - i));
    for (int j = 0; j < i; ++j) bartlett(i, j) = rng.normal();
  }
  // Wishart(S^{-1}, dof) = (L^{-T} A)(L^{-T} A)^T with S = L L^T
  const Eigen::MatrixXd l = scale.cholesky().matrixL();
  const Eigen::MatrixXd f =
      l.transpose().triangularView<Eigen::Upper>().solve(bartlett);  // L^{-T} A
  const Eigen::MatrixXd w = f * f.transpose();
  Eigen::MatrixXd x = w.llt().solve(Eigen::MatrixXd::Identity(d, d));
  return SymmetricMatrix(x);
}

double sample_inverse_gamma(double shape, double rate, RngStream& rng) {
  if (!(shape > 0.0) || !(rate > 0.0))
    throw std::invalid_argument("sample_inverse_gamma: shape and rate must be positive");
  return rate / rng.gamma(shape);
}

double sample_polya_gamma(int count, double tilt, RngStream& rng) {
  if (count == 0) return 0.0;
  if (count != 1)
    throw std::invalid_argument("sample_polya_gamma: only counts 0 and 1 are supported (got " +
                                std::to_string(count) + ")");
  if (!std::isfinite(tilt)) throw std::invalid_argument("sample_polya_gamma: non-finite tilt");
  return sample_pg1(tilt, rng);
}

}  // namespace medgmm
