#include "ssridge/datapath.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "ssridge/errors.hpp"
#include "ssridge/estimators.hpp"
#include "ssridge/parallel.hpp"

namespace ssridge {

namespace {

VectorXd symmetric_eigenvalues(const MatrixXd& S) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseMax(0.0);
}

MatrixXd scaled_gram(const MatrixXd& X, double scale, bool rows) {
  const Index d = rows ? X.rows() : X.cols();
  MatrixXd G = MatrixXd::Zero(d, d);
  if (rows)
    G.selfadjointView<Eigen::Lower>().rankUpdate(X, scale);
  else
    G.selfadjointView<Eigen::Lower>().rankUpdate(X.transpose(), scale);
  return G.selfadjointView<Eigen::Lower>();
}

// sum over retained eigenvalues of 1/(e + shift), plus `zeros` copies of
// 1/shift. With shift == 0 this is the pseudo-trace and eigenvalues below the
// rank cutoff are dropped.
double resolvent_trace(const VectorXd& eig, Index zeros, double shift, double cutoff) {
  double s = 0.0;
  for (Index i = 0; i < eig.size(); ++i) {
    if (shift == 0.0) {
      if (eig(i) > cutoff) s += 1.0 / eig(i);
    } else {
      s += 1.0 / (eig(i) + shift);
    }
  }
  if (shift > 0.0) s += static_cast<double>(zeros) / shift;
  return s;
}

// R(lambda) = norm * [sum_i 1/(s_i + c lambda) + zeros/(c lambda)], strictly
// decreasing in lambda. Solves R(lambda) = target.
double solve_decreasing_trace(const VectorXd& s, Index zeros, double c, double norm,
                              double target, const DataPathOptions& opt) {
  auto R = [&](double lambda) { return norm * resolvent_trace(s, zeros, c * lambda, 0.0); };
  const double smax = s.size() ? s.maxCoeff() : 0.0;
  const double cutoff = pinv_tolerance(s.size() + zeros, s.size() + zeros) * smax;
  bool singular_at_zero = zeros > 0;
  for (Index i = 0; i < s.size(); ++i) singular_at_zero = singular_at_zero || s(i) <= cutoff;
  const double at_zero = singular_at_zero ? std::numeric_limits<double>::infinity()
                                          : norm * resolvent_trace(s, 0, 0.0, cutoff);

  if (!(target > 0.0) || !std::isfinite(target))
    throw NoSolutionError("lambda_bar_data: left-hand trace is not a positive finite number");
  if (target > at_zero * (1.0 + 1e-9))
    throw NoSolutionError(
        "lambda_bar_data: subsample pseudo-trace exceeds the full-data resolvent trace at 0 "
        "(subsample size too close to the feature dimension?)");

  double lo = opt.lo;
  double hi = opt.hi;
  while (R(hi) > target && hi < 1e300) hi *= 10.0;
  while (R(lo) < target && lo > 1e-300) lo *= 0.1;
  if (R(lo) < target) return 0.0;  // matches the 0+ limit within roundoff

  int it = 0;
  double mid = std::sqrt(lo * hi);
  for (; it < opt.max_iter; ++it) {
    mid = std::sqrt(lo * hi);
    const double r = R(mid);
    if (std::abs(r - target) <= opt.tol * target) return mid;
    if (r > target)
      lo = mid;
    else
      hi = mid;
    if (hi / lo - 1.0 < 4.0 * std::numeric_limits<double>::epsilon()) return mid;
  }
  throw ConvergenceError("lambda_bar_data: bisection did not converge",
                         std::abs(R(mid) - target) / target, it);
}

void check_subsample_args(Index n, Index k, Index M) {
  if (k < 1 || k > n) throw ParameterError("lambda_bar_data: need 1 <= k <= n");
  if (M < 1) throw ParameterError("lambda_bar_data: M must be >= 1");
}

}  // namespace

VectorXd gram_spectrum(const MatrixXd& X) {
  if (X.rows() < 1 || X.cols() < 1) throw InputError("empty matrix");
  const double inv_n = 1.0 / static_cast<double>(X.rows());
  return symmetric_eigenvalues(scaled_gram(X, inv_n, X.rows() < X.cols()));
}

double empirical_v_hat(const MatrixXd& X, double lambda) {
  if (!(lambda > 0.0)) throw ParameterError("empirical_v_hat: lambda must be > 0");
  const VectorXd s = gram_spectrum(X);
  const Index n = X.rows();
  return resolvent_trace(s, n - s.size(), lambda, 0.0) / static_cast<double>(n);
}

StieltjesPair empirical_stieltjes(const MatrixXd& X, double lambda) {
  if (!(lambda > 0.0)) throw ParameterError("empirical_stieltjes: lambda must be > 0");
  const Index n = X.rows();
  const Index p = X.cols();
  const double inv_n = 1.0 / static_cast<double>(n);
  const VectorXd cov = symmetric_eigenvalues(scaled_gram(X, inv_n, false));   // p x p
  const VectorXd gram = symmetric_eigenvalues(scaled_gram(X, inv_n, true));   // n x n
  StieltjesPair out;
  out.m_hat = resolvent_trace(cov, 0, lambda, 0.0) / static_cast<double>(p);
  out.v_hat = resolvent_trace(gram, 0, lambda, 0.0) / static_cast<double>(n);
  out.phi_n = static_cast<double>(p) / static_cast<double>(n);
  return out;
}

double check_mv_identity(const MatrixXd& X, double lambda) {
  const StieltjesPair s = empirical_stieltjes(X, lambda);
  const double z = -lambda;
  return std::abs(s.phi_n * z * s.m_hat + s.phi_n - 1.0 - z * s.v_hat);
}

double lambda_bar_data(const MatrixXd& X, Index k, Index M, std::uint64_t seed,
                       const DataPathOptions& options) {
  const Index n = X.rows();
  const Index p = X.cols();
  check_subsample_args(n, k, M);
  if (!X.allFinite()) throw InputError("lambda_bar_data: non-finite design");
  if (options.anchor_lambda < 0.0) throw ParameterError("anchor lambda must be >= 0");
  if (options.anchor_lambda == 0.0 &&
      std::abs(static_cast<double>(k - p)) <= options.guard * static_cast<double>(p))
    throw ParameterError("lambda_bar_data: k is within the guard band around p, where the "
                         "ridgeless pseudo-trace is unstable");

  const auto subsets = sample_subsets(n, k, M, seed);
  const double inv_k = 1.0 / static_cast<double>(k);
  const std::size_t distinct = (k == n) ? 1 : subsets.size();
  std::vector<double> traces(distinct);
  parallel_for(distinct, options.threads, [&](std::size_t l) {
    const MatrixXd Xi = X(subsets[l], Eigen::all);
    const VectorXd e = symmetric_eigenvalues(scaled_gram(Xi, inv_k, k < p));
    const double cutoff = pinv_tolerance(k, p) * (e.size() ? e.maxCoeff() : 0.0);
    traces[l] = resolvent_trace(e, k - e.size(), options.anchor_lambda, cutoff) * inv_k;
  });
  double lhs = 0.0;
  for (std::size_t l = 0; l < subsets.size(); ++l) lhs += traces[distinct == 1 ? 0 : l];
  lhs /= static_cast<double>(M);

  const VectorXd s = gram_spectrum(X);
  return solve_decreasing_trace(s, n - s.size(), 1.0, 1.0 / static_cast<double>(n), lhs, options);
}

double lambda_bar_data_features(const MatrixXd& features, Index k, Index M, std::uint64_t seed,
                                const DataPathOptions& options) {
  return lambda_bar_data(features, k, M, seed, options);
}

double lambda_bar_data_kernel(const MatrixXd& K, double p_nominal, Index k, Index M,
                              std::uint64_t seed, const DataPathOptions& options) {
  const Index n = K.rows();
  if (n < 1 || K.cols() != n) throw InputError("kernel matrix must be square");
  if (!(p_nominal > 0.0)) throw ParameterError("p_nominal must be > 0");
  check_subsample_args(n, k, M);
  const double scale = std::max(1.0, K.cwiseAbs().maxCoeff());
  if ((K - K.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw InputError("kernel matrix is not symmetric");

  const auto subsets = sample_subsets(n, k, M, seed);
  const std::size_t distinct = (k == n) ? 1 : subsets.size();
  std::vector<double> traces(distinct);
  parallel_for(distinct, options.threads, [&](std::size_t l) {
    const MatrixXd Ki = K(subsets[l], subsets[l]);
    const VectorXd e = symmetric_eigenvalues(Ki);
    const double cutoff = pinv_tolerance(k, k) * (e.size() ? e.maxCoeff() : 0.0);
    traces[l] = resolvent_trace(e, 0, options.anchor_lambda, cutoff);
  });
  double lhs = 0.0;
  for (std::size_t l = 0; l < subsets.size(); ++l) lhs += traces[distinct == 1 ? 0 : l];
  lhs /= static_cast<double>(M);

  const VectorXd s = symmetric_eigenvalues(K);
  return solve_decreasing_trace(s, 0, static_cast<double>(n) / p_nominal, 1.0, lhs, options);
}

}  // namespace ssridge
