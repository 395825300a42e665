#include "ssridge/risks.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

#include "ssridge/errors.hpp"
#include "ssridge/parallel.hpp"
#include "ssridge/rng.hpp"

namespace ssridge {

RiskSpec RiskSpec::estimation() {
  RiskSpec s;
  s.kind = Kind::coefficient_estimation;
  s.label = "estimation";
  return s;
}

RiskSpec RiskSpec::coordinate_of(Index j) {
  RiskSpec s;
  s.kind = Kind::coefficient_coordinate;
  s.coordinate = j;
  s.label = "coordinate_" + std::to_string(j);
  return s;
}

RiskSpec RiskSpec::training() {
  RiskSpec s;
  s.kind = Kind::training_error;
  s.label = "training";
  return s;
}

RiskSpec RiskSpec::in_sample() {
  RiskSpec s;
  s.kind = Kind::in_sample_prediction;
  s.label = "in_sample";
  return s;
}

RiskSpec RiskSpec::out_of_sample_population(MatrixXd sigma0, double eps0_energy, LabelShift shift,
                                            std::string label) {
  RiskSpec s;
  s.kind = Kind::out_of_sample;
  s.sigma0 = std::move(sigma0);
  s.eps0_energy = eps0_energy;
  s.label_shift = shift;
  s.label = std::move(label);
  return s;
}

RiskSpec RiskSpec::out_of_sample_test(MatrixXd test_X, VectorXd test_eps, std::string label) {
  RiskSpec s;
  s.kind = Kind::out_of_sample;
  s.test_X = std::move(test_X);
  s.test_eps = std::move(test_eps);
  s.label = std::move(label);
  return s;
}

RiskSpec RiskSpec::custom(MatrixXd A, VectorXd b, std::string label) {
  RiskSpec s;
  s.kind = Kind::custom;
  s.A = std::move(A);
  s.b = std::move(b);
  s.label = std::move(label);
  return s;
}

void RiskSpec::validate(Index p) const {
  switch (kind) {
    case Kind::coefficient_estimation:
    case Kind::training_error:
    case Kind::in_sample_prediction:
      return;
    case Kind::coefficient_coordinate:
      if (coordinate < 0 || coordinate >= p)
        throw ParameterError("coordinate risk: index " + std::to_string(coordinate) +
                             " outside [0, " + std::to_string(p) + ")");
      return;
    case Kind::out_of_sample:
      if (sigma0.has_value() == test_X.has_value())
        throw ParameterError("out-of-sample risk needs exactly one of sigma0 or test_X");
      if (sigma0) {
        if (sigma0->rows() != p || sigma0->cols() != p)
          throw InputError("out-of-sample risk: sigma0 must be p x p");
        if (!(eps0_energy >= 0.0) || !(label_shift.noise_var >= 0.0))
          throw ParameterError("out-of-sample risk: noise energies must be >= 0");
      } else {
        if (test_X->rows() < 1 || test_X->cols() != p)
          throw InputError("out-of-sample risk: test_X must have p columns and >= 1 row");
        if (!test_eps || test_eps->size() != test_X->rows())
          throw InputError("out-of-sample risk: test_eps must have one entry per test row");
        if (!test_X->allFinite() || !test_eps->allFinite())
          throw InputError("out-of-sample risk: non-finite test data");
      }
      return;
    case Kind::custom:
      if (A.rows() < 1) throw InputError("custom risk: A needs at least one row");
      if (A.cols() != p) throw InputError("custom risk: A must have p columns");
      if (b.size() != A.rows()) throw InputError("custom risk: b must have nrow(A) entries");
      if (!A.allFinite() || !b.allFinite()) throw InputError("custom risk: non-finite A or b");
      return;
  }
}

namespace {

// Mean of squared entries and the standard error of that mean.
RiskValue mean_square(const VectorXd& r) {
  const Index m = r.size();
  const VectorXd sq = r.array().square();
  RiskValue out;
  out.nrow = m;
  out.value = sq.mean();
  if (m > 1) {
    const double var = (sq.array() - out.value).square().sum() / static_cast<double>(m - 1);
    out.mc_se = std::sqrt(var / static_cast<double>(m));
  }
  return out;
}

}  // namespace

RiskValue generalized_risk(const VectorXd& beta_hat, const RiskSpec& spec, const Dataset& D) {
  const Index p = D.p();
  spec.validate(p);
  if (beta_hat.size() != p) throw InputError("generalized_risk: beta_hat must have p entries");
  if (!D.beta0) throw PreconditionError("generalized_risk: dataset has no beta0 (ground truth)");
  const VectorXd delta = beta_hat - *D.beta0;

  RiskValue out;
  switch (spec.kind) {
    case RiskSpec::Kind::coefficient_estimation:
      out.nrow = p;
      out.value = delta.squaredNorm() / static_cast<double>(p);
      return out;
    case RiskSpec::Kind::coefficient_coordinate:
      out.nrow = 1;
      out.value = delta(spec.coordinate) * delta(spec.coordinate);
      return out;
    case RiskSpec::Kind::training_error: {
      if (!D.f_nl) throw PreconditionError("generalized_risk: training error needs f_nl");
      out.nrow = D.n();
      out.value = (D.X * delta - *D.f_nl).squaredNorm() / static_cast<double>(D.n());
      return out;
    }
    case RiskSpec::Kind::in_sample_prediction:
      out.nrow = D.n();
      out.value = (D.X * delta).squaredNorm() / static_cast<double>(D.n());
      return out;
    case RiskSpec::Kind::out_of_sample:
      if (spec.sigma0) {
        const double shift = spec.label_shift.mean * spec.label_shift.mean + spec.label_shift.noise_var;
        out.nrow = 1;
        out.value = delta.dot(*spec.sigma0 * delta) + spec.eps0_energy + shift;
        return out;
      }
      return mean_square(*spec.test_X * delta - *spec.test_eps);
    case RiskSpec::Kind::custom:
      out.nrow = spec.A.rows();
      out.value = (spec.A * delta + spec.b).squaredNorm() / static_cast<double>(spec.A.rows());
      return out;
  }
  return out;
}

RiskValue mc_prediction_risk(const EnsembleFit& fit, const MatrixXd& test_X, const VectorXd& test_y) {
  if (test_X.rows() < 1) throw InputError("mc_prediction_risk: empty test set");
  if (test_y.size() != test_X.rows())
    throw InputError("mc_prediction_risk: test_y must have one entry per test row");
  return mean_square(fit.predict(test_X) - test_y);
}

Index k_from_psi(Index p, double psi) {
  if (!(psi > 0.0)) throw ParameterError("psi must be > 0");
  return static_cast<Index>(std::floor(static_cast<double>(p) / psi * (1.0 + 1e-12)));
}

std::vector<PathFit> fit_path(const Dataset& D, const EquivalencePath& path,
                              const std::vector<double>& thetas, Index M, std::uint64_t seed,
                              const KOfPsi& k_of_psi, const PathOptions& options) {
  D.validate();
  const std::vector<PathPoint> points = path_points(path, thetas);
  std::vector<PathFit> fits(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const PathPoint& pt = points[i];
    if (pt.lambda.is_inf() || pt.psi.is_inf())
      throw ParameterError("path point " + std::to_string(i) + " has an infinite coordinate");
    const Index k = k_of_psi(D.p(), pt.psi.value());
    if (k < 1 || k > D.n())
      throw ParameterError("path point " + std::to_string(i) + ": subsample size k = " +
                           std::to_string(k) + " is infeasible");
    fits[i].point = pt;
    fits[i].k = k;
    fits[i].seed = derive_seed(seed, {tag::kCell, static_cast<std::uint64_t>(i)});
  }
  // Points run concurrently; members inside a point stay serial so the
  // thread budget is not oversubscribed.
  EnsembleOptions eo;
  eo.keep_members = options.keep_members;
  eo.threads = 1;
  parallel_for(fits.size(), options.threads, [&](std::size_t i) {
    fits[i].fit = fit_ensemble(D, fits[i].k, M, fits[i].point.lambda.value(), fits[i].seed,
                               FeatureMapSpec::linear(), eo);
  });
  return fits;
}

RangeStat range_of(const std::vector<double>& values, std::string kind) {
  if (values.empty()) throw ParameterError("range_of: no values");
  RangeStat s;
  s.risk_kind = std::move(kind);
  s.min = *std::min_element(values.begin(), values.end());
  s.max = *std::max_element(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  return s;
}

PathRiskTable path_risk_profile(const Dataset& D, const EquivalencePath& path,
                                const std::vector<double>& thetas,
                                const std::vector<RiskSpec>& specs, Index M, std::uint64_t seed,
                                const KOfPsi& k_of_psi, const PathOptions& options) {
  if (specs.empty()) throw ParameterError("path_risk_profile: no risk specs");
  for (const RiskSpec& s : specs) s.validate(D.p());

  // A degenerate path is one point no matter how many thetas were asked for.
  const std::vector<double> ts = path.degenerate() ? std::vector<double>{0.0} : thetas;
  const std::vector<PathFit> fits = fit_path(D, path, ts, M, seed, k_of_psi, options);

  PathRiskTable table;
  std::vector<std::vector<double>> per_spec(specs.size());
  for (const PathFit& f : fits) {
    for (std::size_t j = 0; j < specs.size(); ++j) {
      PathRiskRow row;
      row.theta = f.point.theta;
      row.lambda = f.point.lambda.value();
      row.psi = f.point.psi.value();
      row.k = f.k;
      row.M = M;
      row.risk_kind = specs[j].label;
      row.risk = generalized_risk(f.fit.beta_bar, specs[j], D);
      row.seed = f.seed;
      per_spec[j].push_back(row.risk.value);
      table.rows.push_back(std::move(row));
    }
  }
  for (std::size_t j = 0; j < specs.size(); ++j)
    table.ranges.push_back(range_of(per_spec[j], specs[j].label));
  return table;
}

VectorXd estimate_beta0_empirical(const Dataset& D) {
  D.validate();
  if (D.n() <= D.p())
    throw PreconditionError("estimate_beta0_empirical: need n > p on the estimation split");
  Eigen::ColPivHouseholderQR<MatrixXd> qr(D.X);
  if (qr.rank() < D.p())
    throw PreconditionError("estimate_beta0_empirical: design has deficient column rank");
  return qr.solve(D.y);
}

VectorXd projection_vector(Projection kind, Index p, std::uint64_t seed) {
  if (p < 1) throw ParameterError("projection_vector: p must be >= 1");
  const double scale = 1.0 / std::sqrt(static_cast<double>(p));
  const std::uint64_t stream = derive_seed(seed, {tag::kProjection, static_cast<std::uint64_t>(kind)});
  switch (kind) {
    case Projection::uniform:
      return VectorXd::Constant(p, scale);
    case Projection::gaussian:
      return sample_standardized(p, 1, FeatureLaw::gaussian, stream).col(0) * scale;
    case Projection::student_t:
      return sample_standardized(p, 1, FeatureLaw::student_t5, stream).col(0) * scale;
  }
  throw ParameterError("projection_vector: unknown kind");
}

Projection parse_projection(const std::string& name) {
  if (name == "uniform") return Projection::uniform;
  if (name == "gaussian") return Projection::gaussian;
  if (name == "t") return Projection::student_t;
  throw ParameterError("unknown projection '" + name + "' (expected uniform, gaussian or t)");
}

std::string projection_name(Projection kind) {
  switch (kind) {
    case Projection::uniform:
      return "uniform";
    case Projection::gaussian:
      return "gaussian";
    case Projection::student_t:
      return "t";
  }
  return "?";
}

void write_risk_csv(const PathRiskTable& table, std::ostream& out) {
  out << "theta,lambda,psi,k,M,risk_kind,value,mc_se,seed\n";
  out << std::setprecision(17);
  for (const PathRiskRow& r : table.rows) {
    out << r.theta << ',' << r.lambda << ',' << r.psi << ',' << r.k << ',' << r.M << ','
        << r.risk_kind << ',' << r.risk.value << ',';
    if (r.risk.mc_se) out << *r.risk.mc_se;
    out << ',' << r.seed << '\n';
  }
}

}  // namespace ssridge
