#include "medgmm/linalg.hpp"

#include <cmath>
#include <stdexcept>

namespace medgmm {

SymmetricMatrix::SymmetricMatrix(Eigen::MatrixXd m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("SymmetricMatrix: matrix must be square");
  // (a_ij + a_ji)/2 is exactly symmetric in IEEE arithmetic
  mat_ = 0.5 * (m + m.transpose());
}

SymmetricMatrix SymmetricMatrix::identity(int dim) {
  return SymmetricMatrix(Eigen::MatrixXd::Identity(dim, dim));
}

void SymmetricMatrix::set(int i, int j, double v) {
  mat_(i, j) = v;
  mat_(j, i) = v;
  chol_.reset();
}

bool SymmetricMatrix::factorize() const {
  if (chol_) return true;
  auto llt = std::make_shared<Eigen::LLT<Eigen::MatrixXd>>(mat_);
  if (llt->info() != Eigen::Success) return false;
  chol_ = std::move(llt);
  return true;
}

const Eigen::LLT<Eigen::MatrixXd>& SymmetricMatrix::cholesky() const {
  if (!factorize())
    throw std::runtime_error("SymmetricMatrix: Cholesky failed, matrix is not positive definite (min eigenvalue " +
                             std::to_string(min_eigenvalue()) + ")");
  return *chol_;
}

double SymmetricMatrix::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mat_, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

SymmetricMatrix nearest_positive_definite(const SymmetricMatrix& input, double eigen_floor) {
  const bool unit_diag = (input.mat().diagonal().array() - 1.0).abs().maxCoeff() < 1e-12;

  Eigen::MatrixXd cur = input.mat();
  constexpr int kMaxIter = 200;
  for (int it = 0; it < kMaxIter; ++it) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cur);
    if (es.info() != Eigen::Success) throw std::runtime_error("nearest_positive_definite: eigensolver failed");
    const Eigen::VectorXd& ev = es.eigenvalues();
    if (ev.minCoeff() >= eigen_floor) {
      // fixed point reached; first pass returns the input untouched
      return it == 0 ? input : SymmetricMatrix(cur);
    }
    Eigen::VectorXd clamped = ev.cwiseMax(eigen_floor);
    cur = es.eigenvectors() * clamped.asDiagonal() * es.eigenvectors().transpose();
    cur = 0.5 * (cur + cur.transpose());
    if (unit_diag) cur.diagonal().setOnes();
  }
  // clamping without the diagonal constraint always terminates, so only the
  // unit-diagonal alternation can exhaust iterations; accept the last iterate
  // if it is within a hair of the floor
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cur, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() >= 0.5 * eigen_floor) return SymmetricMatrix(cur);
  throw std::runtime_error("nearest_positive_definite: projection did not converge");
}

}  // namespace medgmm
