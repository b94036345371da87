#pragma once

#include <Eigen/Dense>
#include <memory>

namespace medgmm {

// Dense symmetric matrix with an optional positive-definiteness certificate.
// The certificate is the cached lower Cholesky factor; samplers that reuse a
// fixed covariance (the CorrS structure matrix, inverse-Wishart scales) factor
// once and draw many times.
class SymmetricMatrix {
 public:
  SymmetricMatrix() = default;
  explicit SymmetricMatrix(Eigen::MatrixXd m);
  static SymmetricMatrix identity(int dim);

  int dim() const { return static_cast<int>(mat_.rows()); }
  const Eigen::MatrixXd& mat() const { return mat_; }
  double operator()(int i, int j) const { return mat_(i, j); }
  void set(int i, int j, double v);

  // Attempts a Cholesky factorization and caches it. Returns false on an
  // indefinite matrix; the certificate flag stays unset in that case.
  bool factorize() const;
  bool has_certificate() const { return static_cast<bool>(chol_); }
  const Eigen::LLT<Eigen::MatrixXd>& cholesky() const;

  double min_eigenvalue() const;

 private:
  Eigen::MatrixXd mat_;
  mutable std::shared_ptr<Eigen::LLT<Eigen::MatrixXd>> chol_;
};

// Iterated alternating projection: symmetrize, clamp eigenvalues at
// eigen_floor, restore the unit diagonal when the input had one. Inputs that
// already satisfy the floor are returned unchanged. Idempotent.
SymmetricMatrix nearest_positive_definite(const SymmetricMatrix& input,
                                          double eigen_floor = 1e-6);

}  // namespace medgmm
