#pragma once

#include <Eigen/Dense>

namespace pdflow {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct LeastNormSolution {
  Vector z;
  double residual = 0.0;  // ||K z - rhs||
  int rank = 0;
};

// Minimum-norm solution of K z = rhs via SVD. Singular values below
// cutoff_rel * sigma_max are treated as zero, so a consistent rank-deficient
// system yields the least-norm element of its affine solution set.
LeastNormSolution least_norm_solve(const Matrix& K, const Vector& rhs,
                                   double cutoff_rel = 1e-12);

}  // namespace pdflow
