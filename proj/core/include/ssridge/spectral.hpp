#pragma once

#include <vector>

#include <Eigen/Dense>

#include "ssridge/datagen.hpp"
#include "ssridge/extended.hpp"

namespace ssridge {

struct Atom {
  double r;  // eigenvalue, >= 0
  double w;  // weight, >= 0
};

/// Discrete spectral distribution H = sum_i w_i delta_{r_i}, weights summing
/// to one. All integrals against H used by the fixed-point equations live
/// here.
class SpectralDistribution {
 public:
  /// Validates r >= 0, w >= 0 and sum w = 1 within 1e-12.
  explicit SpectralDistribution(std::vector<Atom> atoms);

  static SpectralDistribution point_mass(double r);
  /// Equal weights 1/p on the given eigenvalues; equal values are merged.
  static SpectralDistribution from_eigenvalues(const VectorXd& eigenvalues);

  const std::vector<Atom>& atoms() const { return atoms_; }

  /// int r^a / (1 + v r)^b dH for finite v >= 0.
  double integral(int a, int b, double v) const;
  /// int r^a dH.
  double moment(int a) const;
  /// H((0, inf)): mass of strictly positive atoms.
  double positive_mass() const;

  /// int r / (1 + v r) dH, with the v = inf limit 0.
  double stieltjes_term(ExtReal v) const;
  /// v * int r / (1 + v r) dH, with the v = inf limit positive_mass().
  double scaled_stieltjes_term(ExtReal v) const;

 private:
  std::vector<Atom> atoms_;
};

/// Spectrum of a symmetric matrix, weight 1/p per eigenvalue. Throws
/// InputError if the matrix is not symmetric or has a negative eigenvalue.
SpectralDistribution spectrum_of(const MatrixXd& sigma);
/// Spectrum of the sample covariance X'X/n.
SpectralDistribution spectrum_of(const Dataset& data);

struct SolverOptions {
  double tol = 1e-10;
  int max_iter = 200;
  double lo = 1e-12;
  double hi = 1e12;
};

struct FixedPointSolution {
  ExtReal v;
  double residual = 0.0;  // |1 - lambda v - psi v int r/(1+vr) dH|, relative form
  int iterations = 0;
};

/// Solves 1/v = lambda + psi int r / (1 + v r) dH(r) for v > 0.
///
/// Multiplying through by v gives h(v) = 1 - lambda v - psi v int r/(1+vr) dH,
/// strictly decreasing from h(0) = 1, so bisection in log v is safe. When
/// lambda = 0 and psi * H((0,inf)) <= 1 there is no finite root and v = +inf.
/// psi = +inf yields v = 0. Throws ParameterError for negative arguments or
/// lambda = psi = 0, and ConvergenceError if tol is not met in max_iter.
FixedPointSolution solve_v(double lambda, ExtReal psi, const SpectralDistribution& H,
                           const SolverOptions& options = {});

struct LambdaBar {
  ExtReal lambda_bar;
  ExtReal v;
};

/// Ridge penalty lambda_bar at aspect ratio phi sharing v with the ridgeless
/// fit at psi_bar: v = v(0; psi_bar), lambda_bar = (1 - phi/psi_bar) / v.
LambdaBar lambda_bar(double phi, ExtReal psi_bar, const SpectralDistribution& H,
                     const SolverOptions& options = {});

/// Inverse of lambda_bar: the unique psi_bar in [max(phi, 1), inf] with
/// v(0; psi_bar) = v(-lambda_bar; phi).
ExtReal psi_bar_from_lambda(double phi, ExtReal lambda_bar, const SpectralDistribution& H,
                            const SolverOptions& options = {});

struct PathPoint {
  double theta;
  ExtReal lambda;
  ExtReal psi;
};

/// Segment from (lambda_bar, phi) at theta = 0 to (0, psi_bar) at theta = 1.
struct EquivalencePath {
  ExtReal lambda_bar;
  double phi = 0.0;
  ExtReal psi_bar;
  ExtReal v_shared;

  bool degenerate() const { return psi_bar == ExtReal(phi); }
};

EquivalencePath make_path(double phi, ExtReal psi_bar, const SpectralDistribution& H,
                          const SolverOptions& options = {});

/// Convex combinations along the path. An infinite psi_bar is interpolated
/// in 1/psi. Throws ParameterError for theta outside [0, 1].
std::vector<PathPoint> path_points(const EquivalencePath& path, const std::vector<double>& thetas);

/// n evenly spaced thetas covering [0, 1]; {0} when n == 1.
std::vector<double> uniform_thetas(int n);

}  // namespace ssridge
