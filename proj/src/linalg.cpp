#include "pdflow/linalg.hpp"

namespace pdflow {

LeastNormSolution least_norm_solve(const Matrix& K, const Vector& rhs,
                                   double cutoff_rel) {
  LeastNormSolution out;
  if (K.rows() == 0 || K.cols() == 0) {
    out.z = Vector::Zero(K.cols());
    out.residual = rhs.norm();
    return out;
  }
  Eigen::JacobiSVD<Matrix> svd(K, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sigma = svd.singularValues();
  const double cutoff = cutoff_rel * (sigma.size() > 0 ? sigma(0) : 0.0);
  Vector coeffs = svd.matrixU().transpose() * rhs;
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    if (sigma(i) > cutoff) {
      coeffs(i) /= sigma(i);
      ++out.rank;
    } else {
      coeffs(i) = 0.0;
    }
  }
  out.z = svd.matrixV() * coeffs;
  out.residual = (K * out.z - rhs).norm();
  return out;
}

}  // namespace pdflow
