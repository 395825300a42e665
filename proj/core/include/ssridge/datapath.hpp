#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "ssridge/datagen.hpp"

namespace ssridge {

/// Empirical transforms at z = -lambda:
///   m_hat = (1/p) tr[(X'X/n + lambda I_p)^{-1}]
///   v_hat = (1/n) tr[(XX'/n + lambda I_n)^{-1}]
struct StieltjesPair {
  double m_hat;
  double v_hat;
  double phi_n;
};

/// Eigenvalues of X'X/n or XX'/n, whichever is smaller; these are the
/// squared singular values of X/sqrt(n). Returned in ascending order, >= 0.
VectorXd gram_spectrum(const MatrixXd& X);

/// (1/n) tr[(XX'/n + lambda I)^{-1}] from the singular values of X.
/// Requires lambda > 0.
double empirical_v_hat(const MatrixXd& X, double lambda);

/// m_hat from the p x p gram and v_hat from the n x n gram, computed
/// independently.
StieltjesPair empirical_stieltjes(const MatrixXd& X, double lambda);

/// |phi_n z m_hat + phi_n - 1 - z v_hat| at z = -lambda.
double check_mv_identity(const MatrixXd& X, double lambda);

struct DataPathOptions {
  double tol = 1e-10;
  int max_iter = 200;
  double lo = 1e-10;
  double hi = 1e6;
  /// Reject |k - p| <= guard * p: the ridgeless pseudo-trace blows up at k = p.
  double guard = 0.02;
  /// Ridge penalty at the subsample end of the path; 0 is the ridgeless anchor.
  double anchor_lambda = 0.0;
  unsigned threads = 1;
};

/// Data-dependent lambda_bar_n solving
///   (1/M) sum_l (1/k) tr[(X_l X_l'/k + anchor)^+] = (1/n) tr[(XX'/n + lambda_bar_n I)^{-1}]
/// where X_l are the rows of subset l. Traces come from singular values; the
/// right side is strictly decreasing, so lambda_bar_n is found by bisection in
/// log lambda. Returns 0 when the left side matches the right side at 0+.
/// Throws ParameterError for k outside [1, n] or k too close to p, and
/// NoSolutionError when the left side exceeds the right side's range.
double lambda_bar_data(const MatrixXd& X, Index k, Index M, std::uint64_t seed,
                       const DataPathOptions& options = {});

/// Same equation on an already transformed feature matrix phi(X F').
double lambda_bar_data_features(const MatrixXd& features, Index k, Index M, std::uint64_t seed,
                                const DataPathOptions& options = {});

/// Kernel version: (1/M) sum_l tr[K_l^+] = tr[(K + (n/p_nominal) lambda_bar_n I)^{-1}]
/// with K_l the k x k principal block of subset l.
double lambda_bar_data_kernel(const MatrixXd& K, double p_nominal, Index k, Index M,
                              std::uint64_t seed, const DataPathOptions& options = {});

}  // namespace ssridge
