#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "ssridge/datagen.hpp"

namespace ssridge {

using IndexSet = std::vector<Index>;

/// Relative cutoff for treating a singular value as zero:
/// sigma_i < max(rows, cols) * eps * sigma_max.
double pinv_tolerance(Index rows, Index cols);

/// Ridge on one (sub)sample with the 1/k loss scaling:
///   beta = (X'X/k + lambda I)^{-1} X'y/k,   k = X.rows().
/// lambda == 0 gives the minimum-norm least-squares solution X^+ y.
/// Throws InputError on non-finite input and ParameterError for lambda < 0.
VectorXd fit_ridge(const MatrixXd& X, const VectorXd& y, double lambda);

/// Solves (X'X/k + lambda G) beta = X'y/k through the change of variables
/// beta = G^{-1/2} ridge(X G^{-1/2}). Throws ParameterError unless G is SPD.
VectorXd fit_generalized_ridge(const MatrixXd& X, const VectorXd& y, double lambda,
                               const MatrixXd& G);

/// G^{-1/2} for SPD G; ParameterError otherwise.
MatrixXd inverse_sqrt_spd(const MatrixXd& G);

/// M index sets, each k distinct indices drawn uniformly from [0, n), sorted
/// ascending. Member l uses the stream (seed, l), so sets are independent and
/// identical sets may repeat across members.
std::vector<IndexSet> sample_subsets(Index n, Index k, Index M, std::uint64_t seed);

enum class Activation { identity, sigmoid, relu, tanh };

/// phi(X F') applied entrywise; X is n x p, F is d x p.
MatrixXd apply_random_features(const MatrixXd& X, const MatrixXd& F, Activation activation);

/// d x p matrix with N(0, 1/p) entries.
MatrixXd gaussian_feature_weights(Index d, Index p, std::uint64_t seed);

struct KernelSpec {
  enum class Kind { linear, polynomial, gaussian, laplacian };

  Kind kind = Kind::linear;
  int degree = 3;
  double gamma = 1.0;
  double coef0 = 1.0;

  static KernelSpec linear() { return {}; }
  static KernelSpec polynomial(int degree, double gamma, double coef0) {
    return {Kind::polynomial, degree, gamma, coef0};
  }
  static KernelSpec gaussian(double gamma) { return {Kind::gaussian, 3, gamma, 1.0}; }
  static KernelSpec laplacian(double gamma) { return {Kind::laplacian, 3, gamma, 1.0}; }

  void validate() const;
};

/// K(A, B) with rows of A and B as points:
///   linear      <a, b>
///   polynomial  (gamma <a, b> + coef0)^degree
///   gaussian    exp(-gamma |a - b|^2)
///   laplacian   exp(-gamma |a - b|_1)
MatrixXd kernel_matrix(const KernelSpec& spec, const MatrixXd& A, const MatrixXd& B);

/// alpha = (K + k * lambda_scaled * I)^{-1} y with k = K.rows(); the
/// pseudoinverse when lambda_scaled == 0. Throws InputError if K is not
/// symmetric.
VectorXd fit_kernel_ridge(const MatrixXd& K, const VectorXd& y, double lambda_scaled);

/// K_{*I} alpha.
VectorXd predict_kernel(const VectorXd& alpha, const MatrixXd& K_star);

/// Penalty passed to fit_kernel_ridge so that the total diagonal shift is
/// (k / p) * lambda, which keeps polynomial kernels away from the null fit.
inline double kernel_lambda_scaled(double lambda, double p_nominal) { return lambda / p_nominal; }

struct FeatureMapSpec {
  enum class Kind { linear, random_features, kernel };

  Kind kind = Kind::linear;
  MatrixXd F;  // d x p, random features only
  Activation activation = Activation::identity;
  KernelSpec kernel;
  double p_nominal = 0.0;  // kernel only: ambient dimension in the (k/p) scaling

  static FeatureMapSpec linear() { return {}; }
  static FeatureMapSpec random(MatrixXd F, Activation activation);
  static FeatureMapSpec kernel_map(KernelSpec kernel, double p_nominal);

  void validate(Index p) const;
  /// Features seen by the ridge solver; X itself for linear and kernel maps.
  MatrixXd transform(const MatrixXd& X) const;
};

struct EnsembleOptions {
  bool keep_members = false;
  unsigned threads = 1;
};

/// Average of M ridge fits on subsamples of size k.
struct EnsembleFit {
  VectorXd beta_bar;  // primal coefficients (in feature space for random features)
  std::optional<std::vector<VectorXd>> members;  // primal, or per-member duals for kernels
  Index k = 0;
  Index M = 0;
  double lambda = 0.0;
  std::uint64_t seed = 0;
  std::vector<IndexSet> subsets;
  FeatureMapSpec feature_map;

  // Kernel ensembles: averaged dual weights scattered over the n training
  // points, and those points.
  VectorXd dual_weights;
  std::shared_ptr<const MatrixXd> support;

  VectorXd predict(const MatrixXd& X) const;
};

/// Fits the M-ensemble. Members run concurrently when options.threads > 1;
/// each member draws from its own (seed, member) stream and the average is
/// accumulated in member order, so results do not depend on the thread count.
/// For k == n every subset is the full sample and a single fit is reused.
EnsembleFit fit_ensemble(const Dataset& data, Index k, Index M, double lambda, std::uint64_t seed,
                         const FeatureMapSpec& feature_map = FeatureMapSpec::linear(),
                         const EnsembleOptions& options = {});

/// Ensemble of generalized ridge fits with penalty lambda |G^{1/2} beta|^2.
EnsembleFit fit_generalized_ensemble(const Dataset& data, Index k, Index M, double lambda,
                                     std::uint64_t seed, const MatrixXd& G,
                                     const EnsembleOptions& options = {});

/// Flat dump of beta_bar: one value per line, 17 significant digits.
void write_coefficients_csv(const EnsembleFit& fit, const std::string& path);

}  // namespace ssridge
