#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ssridge {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Design matrix and response, plus ground truth when the data is synthetic.
///
/// For generated data `y == X * beta0 + f_nl` up to roundoff; `f_nl` folds in
/// the additive noise. `sigma_nl_sq` is the population energy E[f_NL(x)^2].
struct Dataset {
  MatrixXd X;
  VectorXd y;
  std::optional<VectorXd> beta0;
  std::optional<VectorXd> f_nl;
  std::optional<double> sigma_nl_sq;

  Index n() const { return X.rows(); }
  Index p() const { return X.cols(); }

  /// Throws InputError on shape mismatch, empty data, or non-finite entries.
  void validate() const;
};

struct CovarianceSpec {
  enum class Kind { identity, ar1, explicit_matrix };

  Kind kind = Kind::identity;
  double rho = 0.0;
  MatrixXd matrix;

  static CovarianceSpec identity() { return {}; }
  static CovarianceSpec ar1(double rho);
  static CovarianceSpec explicit_matrix(MatrixXd m);

  /// Dense p x p covariance. Explicit matrices must be p x p and SPD.
  MatrixXd materialize(Index p) const;
};

/// (Sigma)_ij = rho^|i-j|. Throws ParameterError unless 0 < rho < 1 and p >= 1.
MatrixXd ar1_covariance(Index p, double rho);

/// Symmetric square root of an SPD matrix. Throws InputError if any
/// eigenvalue is not strictly positive.
MatrixXd spd_sqrt(const MatrixXd& sigma);

enum class FeatureLaw {
  gaussian,
  student_t5,  // t with 5 d.o.f. divided by its standard deviation sqrt(5/3)
};

/// y = x'beta0 + (|x|^2 - tr Sigma) / p + eps, x = Sigma^{1/2} z.
///
/// z and eps have i.i.d. entries from `law` (mean 0, variance 1). Because
/// the law is symmetric, beta0 is the best linear predictor and f_NL is
/// uncorrelated with x, so population risks have closed forms.
class NonlinearModel {
 public:
  NonlinearModel(MatrixXd sigma, VectorXd beta0, FeatureLaw law);

  /// The anisotropic model: AR(1) covariance, t5 entries, beta0 the average
  /// of the top five eigenvectors of Sigma.
  static NonlinearModel m_ar1(Index p, double rho);

  /// The isotropic Gaussian model. beta0 defaults to e_1.
  static NonlinearModel isotropic_gaussian(Index p, std::optional<VectorXd> beta0 = std::nullopt);

  Dataset sample(Index n, std::uint64_t seed) const;

  /// Covariate-shifted draw: x0 = Sigma0^{1/2} z while beta0 and the tr Sigma
  /// centering stay those of the training model, so eps0 = f_NL(x0).
  Dataset sample_shifted(Index n, std::uint64_t seed, const MatrixXd& sigma0) const;

  /// E[f_NL(x)^2] under the training distribution.
  double nonlinear_energy() const { return nonlinear_energy(sigma_); }
  /// E[f_NL(x0)^2] when x0 has covariance sigma0.
  double nonlinear_energy(const MatrixXd& sigma0) const;

  Index p() const { return sigma_.rows(); }
  const MatrixXd& sigma() const { return sigma_; }
  const VectorXd& beta0() const { return beta0_; }
  FeatureLaw law() const { return law_; }

 private:
  Dataset draw(Index n, std::uint64_t seed, const MatrixXd* shifted_sqrt) const;

  MatrixXd sigma_;
  MatrixXd sigma_sqrt_;
  VectorXd beta0_;
  FeatureLaw law_;
  bool isotropic_ = false;
  double trace_ = 0.0;
};

/// i.i.d. draws from `law` with mean 0 and variance 1.
MatrixXd sample_standardized(Index rows, Index cols, FeatureLaw law, std::uint64_t seed);

Dataset gen_m_ar1(Index n, Index p, double rho, std::uint64_t seed);
Dataset gen_rf_model(Index n, Index p, std::uint64_t seed,
                     std::optional<VectorXd> beta0 = std::nullopt);

struct CsvOptions {
  /// Header name of the response. A bare integer is accepted as a 0-based
  /// column index when no header matches.
  std::string response_column;
  bool center = true;
  bool center_features = false;
};

/// Reads a comma-separated numeric table with a header row. Parse failures
/// throw IoError naming the row and column. Non-fatal issues (a constant
/// response) are appended to `warnings`, or printed to stderr when null.
Dataset load_csv(const std::string& path, const CsvOptions& options,
                 std::vector<std::string>* warnings = nullptr);

}  // namespace ssridge
