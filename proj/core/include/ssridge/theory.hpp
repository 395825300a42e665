#pragma once

#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "ssridge/extended.hpp"
#include "ssridge/spectral.hpp"

namespace ssridge {

/// Eigen-decomposition of a covariance, reused across many (lambda, psi).
struct CovarianceEigen {
  VectorXd r;  // eigenvalues, ascending, clamped at 0
  MatrixXd U;  // orthonormal eigenvectors as columns

  /// Throws InputError unless sigma is symmetric positive definite.
  static CovarianceEigen of(const MatrixXd& sigma);
  SpectralDistribution spectrum() const;
};

/// Finite-p deterministic equivalents for the full ensemble at (lambda, phi,
/// psi) with weight matrix C = A'A / nrow(A):
///   tv = [phi tr(C Sigma (v Sigma + I)^-2) / p] / [v^-2 - phi int r^2/(1+vr)^2 dH]
///   tc = beta0' (v Sigma + I)^-1 (tv Sigma + C) (v Sigma + I)^-1 beta0
/// with v = solve_v(lambda, psi, H). When lambda = 0 and v = inf the v -> inf
/// limits are used. Throws DomainError if the denominator is not positive.
struct RiskTerms {
  ExtReal v;
  double tv = 0.0;
  double tc = 0.0;
  double value = 0.0;  // tc + sigma_nl_sq * tv
};

double tv_general(double lambda, double phi, double psi, const CovarianceEigen& sigma,
                  const MatrixXd& C);
double tc_general(double lambda, double phi, double psi, const CovarianceEigen& sigma,
                  const MatrixXd& C, const VectorXd& beta0);
double tv_general(double lambda, double phi, double psi, const MatrixXd& sigma, const MatrixXd& C);
double tc_general(double lambda, double phi, double psi, const MatrixXd& sigma, const MatrixXd& C,
                  const VectorXd& beta0);

/// R_p = tc + |f_NL|^2 tv, all terms returned.
RiskTerms risk_profile_Rp(double lambda, double phi, double psi, const CovarianceEigen& sigma,
                          const VectorXd& beta0, double sigma_nl_sq, const MatrixXd& C);
RiskTerms risk_profile_Rp(double lambda, double phi, double psi, const MatrixXd& sigma,
                          const VectorXd& beta0, double sigma_nl_sq, const MatrixXd& C);

/// Limiting spectrum H, signal distribution G (weights of |beta0|^2 across
/// eigenvalues), signal energy rho_sq and nonlinear energy sigma_sq.
struct LimitSpec {
  SpectralDistribution H;
  SpectralDistribution G;
  double rho_sq = 1.0;
  double sigma_sq = 1.0;

  void validate() const;
};

/// rho^2 tc + sigma^2 tv with
///   tv = phi int r^2/(1+vr)^2 dH / (v^-2 - phi int r^2/(1+vr)^2 dH)
///   tc = (tv + 1) int r/(1+vr)^2 dG.
/// psi may be infinite (v = 0, the null risk rho^2 int r dG); lambda = inf is
/// accepted the same way. Requires psi >= phi.
RiskTerms risk_profile_limit(ExtReal lambda, double phi, ExtReal psi, const LimitSpec& lim);

struct GridMinimum {
  ExtReal arg;          // minimizing psi or lambda
  double value = 0.0;
  bool flagged = false; // minimum attained on the v = inf ridgeless branch (phi < psi < 1)
};

struct OptimizeOptions {
  int grid_points = 200;
  double psi_max = 100.0;
  double psi_guard = 0.05;  // psi grid starts at max(phi, 1 + guard)
  double lambda_min = 1e-4;
  double lambda_max = 1e3;
  bool refine = true;       // golden-section search around the best grid cell
};

/// min over psi >= phi of R(0; phi, psi): log grid on [max(phi, 1 + guard),
/// psi_max], the v = inf branch when phi < 1, and psi = inf.
GridMinimum optimal_ridgeless_risk(double phi, const LimitSpec& lim,
                                   const OptimizeOptions& options = {});
/// Same with an explicit psi grid (sorted, finite, >= phi); no refinement.
GridMinimum optimal_ridgeless_risk(double phi, const LimitSpec& lim,
                                   const std::vector<double>& psi_grid);

/// min over lambda >= 0 of R(lambda; phi, phi): lambda = 0, a log grid on
/// [lambda_min, lambda_max], and lambda = inf.
GridMinimum optimal_ridge_risk(double phi, const LimitSpec& lim, const OptimizeOptions& options = {});

struct MonotonicityRow {
  double phi = 0.0;
  ExtReal psi_star;
  ExtReal lambda_star;
  double min_risk = 0.0;        // ridgeless optimum over psi
  double min_ridge_risk = 0.0;  // ridge optimum over lambda at psi = phi
  bool flagged = false;
};

struct MonotonicityScan {
  std::vector<MonotonicityRow> rows;
  bool nondecreasing = true;
  double max_gap = 0.0;  // max |min_risk - min_ridge_risk|
};

/// Throws ParameterError for an empty or unsorted phi grid.
MonotonicityScan monotonicity_scan(const std::vector<double>& phi_grid, const LimitSpec& lim,
                                   const OptimizeOptions& options = {});

/// phi,psi_star,lambda_star,min_risk,min_ridge_risk,flagged with a header.
void write_monotonicity_csv(const MonotonicityScan& scan, std::ostream& out);

/// n log-spaced values covering [lo, hi].
std::vector<double> log_grid(double lo, double hi, int n);

}  // namespace ssridge
