#include "oracles.hpp"

#include <cmath>
#include <random>

namespace oracle {

VectorXd ridge(const MatrixXd& X, const VectorXd& y, double lambda) {
  const double k = static_cast<double>(X.rows());
  if (lambda == 0.0) return X.completeOrthogonalDecomposition().solve(y);
  MatrixXd A = X.transpose() * X / k;
  A.diagonal().array() += lambda;
  return A.fullPivLu().solve(X.transpose() * y / k);
}

VectorXd generalized_ridge(const MatrixXd& X, const VectorXd& y, double lambda, const MatrixXd& G) {
  const double k = static_cast<double>(X.rows());
  const MatrixXd A = X.transpose() * X / k + lambda * G;
  return A.fullPivLu().solve(X.transpose() * y / k);
}

double isotropic_v(double lambda, double psi) {
  const double b = lambda + psi - 1.0;
  const double disc = std::sqrt(b * b + 4.0 * lambda);
  return b > 0.0 ? 2.0 / (b + disc) : (disc - b) / (2.0 * lambda);
}

double iterate_v(double lambda, double psi, const ssridge::SpectralDistribution& H) {
  double v = lambda > 0.0 ? 1.0 / lambda : 1.0;
  for (int it = 0; it < 100000; ++it) {
    double s = 0.0;
    for (const auto& a : H.atoms()) s += a.w * a.r / (1.0 + v * a.r);
    const double next = 1.0 / (lambda + psi * s);
    if (std::abs(next - v) <= 1e-15 * v) return next;
    v = next;
  }
  return v;
}

double trace_inverse(const MatrixXd& S) { return S.inverse().trace(); }

double trace_pinv(const MatrixXd& S) {
  return S.completeOrthogonalDecomposition().pseudoInverse().trace();
}

double isotropic_tv(double v, double phi, double c) {
  const double d = (1.0 + v) * (1.0 + v);
  return phi * c / d / (1.0 / (v * v) - phi / d);
}

double isotropic_tc(double v, double tv, double c, double beta_sq) {
  return beta_sq * (tv + c) / ((1.0 + v) * (1.0 + v));
}

MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, unsigned seed) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> n01;
  MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = n01(gen);
  return m;
}

MatrixXd random_orthogonal(Eigen::Index p, unsigned seed) {
  Eigen::HouseholderQR<MatrixXd> qr(gaussian(p, p, seed));
  return qr.householderQ() * MatrixXd::Identity(p, p);
}

MatrixXd random_spd(const VectorXd& eigs, unsigned seed) {
  const MatrixXd U = random_orthogonal(eigs.size(), seed);
  const MatrixXd S = U * eigs.asDiagonal() * U.transpose();
  return (S + S.transpose()) / 2.0;
}

}  // namespace oracle
