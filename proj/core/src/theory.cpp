#include "ssridge/theory.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <ostream>

#include "ssridge/errors.hpp"

namespace ssridge {

namespace {

// v^2 r / (1 + v r)^2 and (v r)^2 / (1 + v r)^2, with their v -> inf limits.
double scaled_variance_weight(ExtReal v, double r) {
  if (r <= 0.0) return 0.0;
  if (v.is_inf()) return 1.0 / r;
  const double d = 1.0 + v.value() * r;
  return v.value() * v.value() * r / (d * d);
}

double scaled_energy(ExtReal v, double r) {
  if (r <= 0.0) return 0.0;
  if (v.is_inf()) return 1.0;
  const double x = v.value() * r;
  return (x * x) / ((1.0 + x) * (1.0 + x));
}

// 1 / (1 + v r).
double resolvent_factor(ExtReal v, double r) {
  if (v.is_inf()) return r > 0.0 ? 0.0 : 1.0;
  return 1.0 / (1.0 + v.value() * r);
}

void check_lambda_phi_psi(double lambda, double phi, double psi) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ParameterError("lambda must be finite and >= 0");
  if (!(phi > 0.0) || !std::isfinite(phi)) throw ParameterError("phi must be > 0");
  if (!(psi >= phi) || !std::isfinite(psi)) throw ParameterError("psi must be finite and >= phi");
}

// 1 - phi int (vr)^2/(1+vr)^2 dH, i.e. v^2 times the tv denominator.
double scaled_denominator(ExtReal v, double phi, const SpectralDistribution& H) {
  double s = 0.0;
  for (const Atom& a : H.atoms()) s += a.w * scaled_energy(v, a.r);
  const double den = 1.0 - phi * s;
  if (!(den > 0.0))
    throw DomainError("tv denominator is not positive (phi = " + std::to_string(phi) +
                      "); the ensemble variance diverges here");
  return den;
}

struct GeneralTerms {
  ExtReal v;
  double tv;
  double tc;
};

GeneralTerms general_terms(double lambda, double phi, double psi, const CovarianceEigen& sigma,
                           const MatrixXd& C, const VectorXd* beta0) {
  check_lambda_phi_psi(lambda, phi, psi);
  const Index p = sigma.r.size();
  if (C.rows() != p || C.cols() != p) throw InputError("C must be p x p");
  if (beta0 && beta0->size() != p) throw InputError("beta0 must have p entries");

  const SpectralDistribution H = sigma.spectrum();
  const ExtReal v = solve_v(lambda, ExtReal(psi), H).v;

  // diag(U' C U)
  const VectorXd w = (sigma.U.cwiseProduct(C * sigma.U)).colwise().sum().transpose();
  double num = 0.0;
  for (Index i = 0; i < p; ++i) num += w(i) * scaled_variance_weight(v, sigma.r(i));
  num *= phi / static_cast<double>(p);
  const double tv = num / scaled_denominator(v, phi, H);

  double tc = 0.0;
  if (beta0) {
    const VectorXd b = sigma.U.transpose() * *beta0;
    VectorXd db(p);
    for (Index i = 0; i < p; ++i) {
      db(i) = resolvent_factor(v, sigma.r(i)) * b(i);
      tc += tv * sigma.r(i) * db(i) * db(i);
    }
    const VectorXd q = sigma.U * db;
    tc += q.dot(C * q);
  }
  return {v, tv, tc};
}

}  // namespace

CovarianceEigen CovarianceEigen::of(const MatrixXd& sigma) {
  if (sigma.rows() < 1 || sigma.rows() != sigma.cols()) throw InputError("sigma must be square");
  const double scale = std::max(1.0, sigma.cwiseAbs().maxCoeff());
  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw InputError("sigma is not symmetric");
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sigma);
  if (es.info() != Eigen::Success) throw InputError("eigendecomposition of sigma failed");
  if (!(es.eigenvalues().minCoeff() > 0.0)) throw InputError("sigma is not positive definite");
  return {es.eigenvalues(), es.eigenvectors()};
}

SpectralDistribution CovarianceEigen::spectrum() const {
  return SpectralDistribution::from_eigenvalues(r);
}

double tv_general(double lambda, double phi, double psi, const CovarianceEigen& sigma,
                  const MatrixXd& C) {
  return general_terms(lambda, phi, psi, sigma, C, nullptr).tv;
}

double tc_general(double lambda, double phi, double psi, const CovarianceEigen& sigma,
                  const MatrixXd& C, const VectorXd& beta0) {
  return general_terms(lambda, phi, psi, sigma, C, &beta0).tc;
}

double tv_general(double lambda, double phi, double psi, const MatrixXd& sigma, const MatrixXd& C) {
  return tv_general(lambda, phi, psi, CovarianceEigen::of(sigma), C);
}

double tc_general(double lambda, double phi, double psi, const MatrixXd& sigma, const MatrixXd& C,
                  const VectorXd& beta0) {
  return tc_general(lambda, phi, psi, CovarianceEigen::of(sigma), C, beta0);
}

RiskTerms risk_profile_Rp(double lambda, double phi, double psi, const CovarianceEigen& sigma,
                          const VectorXd& beta0, double sigma_nl_sq, const MatrixXd& C) {
  if (!(sigma_nl_sq >= 0.0) || !std::isfinite(sigma_nl_sq))
    throw ParameterError("sigma_nl_sq must be finite and >= 0");
  const GeneralTerms t = general_terms(lambda, phi, psi, sigma, C, &beta0);
  return {t.v, t.tv, t.tc, t.tc + sigma_nl_sq * t.tv};
}

RiskTerms risk_profile_Rp(double lambda, double phi, double psi, const MatrixXd& sigma,
                          const VectorXd& beta0, double sigma_nl_sq, const MatrixXd& C) {
  return risk_profile_Rp(lambda, phi, psi, CovarianceEigen::of(sigma), beta0, sigma_nl_sq, C);
}

void LimitSpec::validate() const {
  if (!(rho_sq >= 0.0) || !std::isfinite(rho_sq)) throw ParameterError("rho_sq must be finite and >= 0");
  if (!(sigma_sq >= 0.0) || !std::isfinite(sigma_sq))
    throw ParameterError("sigma_sq must be finite and >= 0");
}

RiskTerms risk_profile_limit(ExtReal lambda, double phi, ExtReal psi, const LimitSpec& lim) {
  lim.validate();
  if (!(phi > 0.0) || !std::isfinite(phi)) throw ParameterError("phi must be > 0");
  if (psi < ExtReal(phi)) throw ParameterError("psi must be >= phi");
  if (lambda.is_finite() && !(lambda.value() >= 0.0)) throw ParameterError("lambda must be >= 0");

  RiskTerms out;
  if (lambda.is_inf() || psi.is_inf()) {
    // v = 0: no fit at all, only the signal is left.
    out.v = ExtReal(0.0);
    out.tv = 0.0;
    out.tc = lim.G.moment(1);
  } else {
    out.v = solve_v(lambda.value(), psi, lim.H).v;
    double energy = 0.0;
    for (const Atom& a : lim.H.atoms()) energy += a.w * scaled_energy(out.v, a.r);
    out.tv = phi * energy / scaled_denominator(out.v, phi, lim.H);
    double g = 0.0;
    for (const Atom& a : lim.G.atoms()) {
      const double d = resolvent_factor(out.v, a.r);
      g += a.w * a.r * d * d;
    }
    out.tc = (out.tv + 1.0) * g;
  }
  out.value = lim.rho_sq * out.tc + lim.sigma_sq * out.tv;
  return out;
}

std::vector<double> log_grid(double lo, double hi, int n) {
  if (!(lo > 0.0) || !(hi >= lo) || n < 1) throw ParameterError("log_grid: need 0 < lo <= hi, n >= 1");
  if (n == 1) return {lo};
  std::vector<double> g(static_cast<std::size_t>(n));
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / (n - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Objective value, or +inf where the profile is undefined (interpolation peak).
double safe_eval(const std::function<double(double)>& f, double x) {
  try {
    return f(x);
  } catch (const DomainError&) {
    return kInf;
  } catch (const ConvergenceError&) {
    return kInf;
  }
}

// Golden-section search in log x on [lo, hi].
std::pair<double, double> golden_log(const std::function<double(double)>& f, double lo, double hi) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = std::log(lo), b = std::log(hi);
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = safe_eval(f, std::exp(c)), fd = safe_eval(f, std::exp(d));
  for (int it = 0; it < 100 && b - a > 1e-10; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = safe_eval(f, std::exp(c));
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = safe_eval(f, std::exp(d));
    }
  }
  return fc < fd ? std::make_pair(std::exp(c), fc) : std::make_pair(std::exp(d), fd);
}

// Grid minimum plus optional refinement on the cell pair around it.
GridMinimum minimize_on_grid(const std::function<double(double)>& f, const std::vector<double>& grid,
                             bool refine) {
  std::vector<double> vals(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) vals[i] = safe_eval(f, grid[i]);
  const auto best = std::min_element(vals.begin(), vals.end());
  const std::size_t i = static_cast<std::size_t>(best - vals.begin());
  GridMinimum out{ExtReal(grid[i]), *best, false};
  if (refine && grid.size() >= 3 && std::isfinite(*best)) {
    const double lo = grid[i == 0 ? 0 : i - 1];
    const double hi = grid[std::min(i + 1, grid.size() - 1)];
    const auto [x, fx] = golden_log(f, lo, hi);
    if (fx < out.value) out = {ExtReal(x), fx, false};
  }
  return out;
}

void keep_better(GridMinimum& current, const GridMinimum& candidate) {
  if (candidate.value < current.value) current = candidate;
}

}  // namespace

GridMinimum optimal_ridgeless_risk(double phi, const LimitSpec& lim, const std::vector<double>& psi_grid) {
  if (psi_grid.empty()) throw ParameterError("optimal_ridgeless_risk: empty psi grid");
  for (std::size_t i = 0; i < psi_grid.size(); ++i) {
    if (!(psi_grid[i] >= phi) || !std::isfinite(psi_grid[i]))
      throw ParameterError("optimal_ridgeless_risk: psi grid must be finite and >= phi");
    if (i > 0 && !(psi_grid[i] > psi_grid[i - 1]))
      throw ParameterError("optimal_ridgeless_risk: psi grid must be strictly increasing");
  }
  auto f = [&](double psi) { return risk_profile_limit(ExtReal(0.0), phi, ExtReal(psi), lim).value; };
  GridMinimum out = minimize_on_grid(f, psi_grid, false);
  if (!std::isfinite(out.value)) throw DomainError("ridgeless risk is undefined on the whole psi grid");
  out.flagged = solve_v(0.0, out.arg, lim.H).v.is_inf();
  return out;
}

GridMinimum optimal_ridgeless_risk(double phi, const LimitSpec& lim, const OptimizeOptions& options) {
  if (!(phi > 0.0) || !std::isfinite(phi)) throw ParameterError("phi must be > 0");
  const double lo = std::max(phi, 1.0 + options.psi_guard);
  if (!(options.psi_max > lo)) throw ParameterError("psi_max must exceed the lower end of the psi grid");
  const std::vector<double> grid = log_grid(lo, options.psi_max, options.grid_points);
  auto f = [&](double psi) { return risk_profile_limit(ExtReal(0.0), phi, ExtReal(psi), lim).value; };

  GridMinimum out = minimize_on_grid(f, grid, options.refine);
  // Below the interpolation threshold every psi in [phi, 1 / H(r > 0)] has
  // v = inf and the same risk.
  if (phi * lim.H.positive_mass() < 1.0) {
    const double value = safe_eval(f, phi);
    keep_better(out, {ExtReal(phi), value, true});
  }
  keep_better(out, {ExtReal::inf(), risk_profile_limit(ExtReal(0.0), phi, ExtReal::inf(), lim).value, false});
  if (!std::isfinite(out.value)) throw DomainError("ridgeless risk is undefined on the whole psi grid");
  return out;
}

GridMinimum optimal_ridge_risk(double phi, const LimitSpec& lim, const OptimizeOptions& options) {
  if (!(phi > 0.0) || !std::isfinite(phi)) throw ParameterError("phi must be > 0");
  const std::vector<double> grid = log_grid(options.lambda_min, options.lambda_max, options.grid_points);
  auto f = [&](double lambda) {
    return risk_profile_limit(ExtReal(lambda), phi, ExtReal(phi), lim).value;
  };
  GridMinimum out = minimize_on_grid(f, grid, options.refine);
  keep_better(out, {ExtReal(0.0), safe_eval(f, 0.0), false});
  keep_better(out, {ExtReal::inf(), risk_profile_limit(ExtReal::inf(), phi, ExtReal(phi), lim).value, false});
  return out;
}

MonotonicityScan monotonicity_scan(const std::vector<double>& phi_grid, const LimitSpec& lim,
                                   const OptimizeOptions& options) {
  if (phi_grid.empty()) throw ParameterError("monotonicity_scan: empty phi grid");
  for (std::size_t i = 1; i < phi_grid.size(); ++i)
    if (!(phi_grid[i] > phi_grid[i - 1]))
      throw ParameterError("monotonicity_scan: phi grid must be strictly increasing");

  MonotonicityScan scan;
  for (double phi : phi_grid) {
    const GridMinimum ridgeless = optimal_ridgeless_risk(phi, lim, options);
    const GridMinimum ridge = optimal_ridge_risk(phi, lim, options);
    MonotonicityRow row;
    row.phi = phi;
    row.psi_star = ridgeless.arg;
    row.lambda_star = ridge.arg;
    row.min_risk = ridgeless.value;
    row.min_ridge_risk = ridge.value;
    row.flagged = ridgeless.flagged;
    scan.max_gap = std::max(scan.max_gap, std::abs(row.min_risk - row.min_ridge_risk));
    if (!scan.rows.empty()) {
      const double prev = scan.rows.back().min_risk;
      // Roundoff slack only; the refined minima are accurate to ~1e-12.
      if (row.min_risk < prev - 1e-9 * std::max(1.0, std::abs(prev))) scan.nondecreasing = false;
    }
    scan.rows.push_back(row);
  }
  return scan;
}

void write_monotonicity_csv(const MonotonicityScan& scan, std::ostream& out) {
  out << "phi,psi_star,lambda_star,min_risk,min_ridge_risk,flagged\n";
  out << std::setprecision(17);
  for (const MonotonicityRow& r : scan.rows)
    out << r.phi << ',' << r.psi_star.to_double() << ',' << r.lambda_star.to_double() << ','
        << r.min_risk << ',' << r.min_ridge_risk << ',' << (r.flagged ? 1 : 0) << '\n';
}

}  // namespace ssridge
