#include "srdice/linalg.hpp"

#include <Eigen/SVD>

namespace srdice {

Matrix pseudo_inverse(const Matrix& m, double rel_cutoff) {
    if (m.size() == 0) return Matrix(m.cols(), m.rows());
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& sigma = svd.singularValues();
    const double threshold = rel_cutoff * (sigma.size() > 0 ? sigma(0) : 0.0);
    Vector inv = Vector::Zero(sigma.size());
    for (Eigen::Index i = 0; i < sigma.size(); ++i) {
        if (sigma(i) > threshold && sigma(i) > 0.0) inv(i) = 1.0 / sigma(i);
    }
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Vector least_squares(const Matrix& x, const Vector& y, double rel_cutoff) {
    return pseudo_inverse(x.transpose() * x, rel_cutoff) * (x.transpose() * y);
}

}  // namespace srdice
