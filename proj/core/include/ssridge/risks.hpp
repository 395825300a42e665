#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ssridge/datagen.hpp"
#include "ssridge/estimators.hpp"
#include "ssridge/spectral.hpp"

namespace ssridge {

/// Label shift for out-of-sample risks: eps0 gets an extra constant `mean`
/// and independent noise of variance `noise_var` on top of the model's own
/// residual.
struct LabelShift {
  double mean = 0.0;
  double noise_var = 0.0;
};

/// A generalized risk (1/nrow(A)) |A (beta_hat - beta0) + b|^2.
struct RiskSpec {
  enum class Kind {
    coefficient_estimation,  // A = I_p, b = 0
    coefficient_coordinate,  // A = e_j', b = 0
    training_error,          // A = X, b = -f_NL
    in_sample_prediction,    // A = X, b = 0
    out_of_sample,           // A = x0', b = -eps0
    custom,
  };

  Kind kind = Kind::coefficient_estimation;
  Index coordinate = 0;

  // out_of_sample, population form: x0 ~ (0, sigma0), E[eps0^2] = eps0_energy,
  // eps0 uncorrelated with x0.
  std::optional<MatrixXd> sigma0;
  double eps0_energy = 0.0;
  // out_of_sample, sampled form: rows of test_X with residuals test_eps.
  std::optional<MatrixXd> test_X;
  std::optional<VectorXd> test_eps;
  LabelShift label_shift;

  // custom
  MatrixXd A;
  VectorXd b;

  /// Tag used in CSV output ("estimation", "coordinate_3", "training", ...).
  std::string label;

  static RiskSpec estimation();
  static RiskSpec coordinate_of(Index j);
  static RiskSpec training();
  static RiskSpec in_sample();
  static RiskSpec out_of_sample_population(MatrixXd sigma0, double eps0_energy,
                                           LabelShift shift = {}, std::string label = "prediction");
  static RiskSpec out_of_sample_test(MatrixXd test_X, VectorXd test_eps,
                                     std::string label = "prediction");
  static RiskSpec custom(MatrixXd A, VectorXd b, std::string label = "custom");

  /// Dimension checks against p. Throws ParameterError or InputError.
  void validate(Index p) const;
};

struct RiskValue {
  double value = 0.0;
  Index nrow = 0;
  std::optional<double> mc_se;
};

/// Evaluates the risk of beta_hat against the ground truth carried by D.
/// Throws PreconditionError naming the missing field when D lacks beta0 (or
/// f_nl for training error).
RiskValue generalized_risk(const VectorXd& beta_hat, const RiskSpec& spec, const Dataset& D);

/// Mean of (f(x0) - y0)^2 over the test rows, with its standard error. Works
/// for every feature map since it only uses fit.predict.
RiskValue mc_prediction_risk(const EnsembleFit& fit, const MatrixXd& test_X, const VectorXd& test_y);

/// k = floor(p / psi); the default subsample rule on paths and grids.
Index k_from_psi(Index p, double psi);

struct PathOptions {
  unsigned threads = 1;
  bool keep_members = false;
};

struct PathFit {
  PathPoint point;
  Index k = 0;
  std::uint64_t seed = 0;  // seed passed to fit_ensemble
  EnsembleFit fit;
};

using KOfPsi = std::function<Index(Index p, double psi)>;

/// Fits an M-ensemble at every path point. Point i uses the derived seed
/// (seed, kCell, i). Throws ParameterError when a point has infinite lambda
/// or k < 1.
std::vector<PathFit> fit_path(const Dataset& D, const EquivalencePath& path,
                              const std::vector<double>& thetas, Index M, std::uint64_t seed,
                              const KOfPsi& k_of_psi = k_from_psi, const PathOptions& options = {});

struct PathRiskRow {
  double theta = 0.0;
  double lambda = 0.0;
  double psi = 0.0;
  Index k = 0;
  Index M = 0;
  std::string risk_kind;
  RiskValue risk;
  std::uint64_t seed = 0;
};

struct RangeStat {
  std::string risk_kind;
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double range() const { return max - min; }
};

struct PathRiskTable {
  std::vector<PathRiskRow> rows;   // theta-major, spec order within theta
  std::vector<RangeStat> ranges;   // one per spec
};

/// Fits along the path and evaluates every spec at every point.
PathRiskTable path_risk_profile(const Dataset& D, const EquivalencePath& path,
                                const std::vector<double>& thetas,
                                const std::vector<RiskSpec>& specs, Index M, std::uint64_t seed,
                                const KOfPsi& k_of_psi = k_from_psi,
                                const PathOptions& options = {});

/// min / max / mean of a sequence of values.
RangeStat range_of(const std::vector<double>& values, std::string kind = {});

/// OLS estimate of beta0 on (X, y). A stand-in for ground truth on real data.
/// Throws PreconditionError when n <= p or X has deficient column rank.
VectorXd estimate_beta0_empirical(const Dataset& D);

enum class Projection { uniform, gaussian, student_t };

/// Fixed direction a for the linear functional a'beta_hat, |a| about 1:
/// uniform weights 1/sqrt(p), or i.i.d. N(0, 1/p) or standardized t5 / sqrt(p)
/// entries drawn from the (seed, kProjection, kind) stream.
VectorXd projection_vector(Projection kind, Index p, std::uint64_t seed);
Projection parse_projection(const std::string& name);
std::string projection_name(Projection kind);

/// theta,lambda,psi,k,M,risk_kind,value,mc_se,seed with a header line.
void write_risk_csv(const PathRiskTable& table, std::ostream& out);

}  // namespace ssridge
