#include "ssridge/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ssridge/errors.hpp"

namespace ssridge {

SpectralDistribution::SpectralDistribution(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
  if (atoms_.empty()) throw InputError("spectral distribution needs at least one atom");
  double total = 0.0;
  for (const Atom& a : atoms_) {
    if (!(a.r >= 0.0) || !std::isfinite(a.r)) throw InputError("spectral atoms must be >= 0");
    if (!(a.w >= 0.0) || !std::isfinite(a.w)) throw InputError("spectral weights must be >= 0");
    total += a.w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw InputError("spectral weights must sum to 1");
}

SpectralDistribution SpectralDistribution::point_mass(double r) {
  return SpectralDistribution({{r, 1.0}});
}

SpectralDistribution SpectralDistribution::from_eigenvalues(const VectorXd& eigenvalues) {
  if (eigenvalues.size() == 0) throw InputError("no eigenvalues");
  std::vector<double> r(eigenvalues.data(), eigenvalues.data() + eigenvalues.size());
  std::sort(r.begin(), r.end());
  const double w = 1.0 / static_cast<double>(r.size());
  std::vector<Atom> atoms;
  for (double value : r) {
    if (!atoms.empty() && atoms.back().r == value)
      atoms.back().w += w;
    else
      atoms.push_back({value, w});
  }
  return SpectralDistribution(std::move(atoms));
}

double SpectralDistribution::integral(int a, int b, double v) const {
  double s = 0.0;
  for (const Atom& at : atoms_) s += at.w * std::pow(at.r, a) / std::pow(1.0 + v * at.r, b);
  return s;
}

double SpectralDistribution::moment(int a) const {
  double s = 0.0;
  for (const Atom& at : atoms_) s += at.w * std::pow(at.r, a);
  return s;
}

double SpectralDistribution::positive_mass() const {
  double s = 0.0;
  for (const Atom& at : atoms_)
    if (at.r > 0.0) s += at.w;
  return s;
}

double SpectralDistribution::stieltjes_term(ExtReal v) const {
  if (v.is_inf()) return 0.0;
  double s = 0.0;
  for (const Atom& at : atoms_) s += at.w * at.r / (1.0 + v.value() * at.r);
  return s;
}

double SpectralDistribution::scaled_stieltjes_term(ExtReal v) const {
  if (v.is_inf()) return positive_mass();
  double s = 0.0;
  const double x = v.value();
  for (const Atom& at : atoms_) s += at.w * (x * at.r) / (1.0 + x * at.r);
  return s;
}

SpectralDistribution spectrum_of(const MatrixXd& sigma) {
  if (sigma.rows() < 1 || sigma.rows() != sigma.cols()) throw InputError("matrix must be square");
  const double scale = std::max(1.0, sigma.cwiseAbs().maxCoeff());
  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw InputError("spectrum_of: matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sigma, Eigen::EigenvaluesOnly);
  VectorXd r = es.eigenvalues();
  const double rmax = std::max(0.0, r.maxCoeff());
  if (r.minCoeff() < -1e-10 * std::max(1.0, rmax))
    throw InputError("spectrum_of: matrix has a negative eigenvalue");
  return SpectralDistribution::from_eigenvalues(r.cwiseMax(0.0));
}

SpectralDistribution spectrum_of(const Dataset& data) {
  data.validate();
  MatrixXd S = MatrixXd::Zero(data.p(), data.p());
  S.selfadjointView<Eigen::Lower>().rankUpdate(data.X.transpose(), 1.0 / static_cast<double>(data.n()));
  S = S.selfadjointView<Eigen::Lower>();
  return spectrum_of(S);
}

FixedPointSolution solve_v(double lambda, ExtReal psi, const SpectralDistribution& H,
                           const SolverOptions& options) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw ParameterError("solve_v: lambda must be finite and >= 0");
  if (psi.is_finite() && !(psi.value() >= 0.0)) throw ParameterError("solve_v: psi must be >= 0");
  if (lambda == 0.0 && psi == ExtReal(0.0)) throw ParameterError("solve_v: lambda = psi = 0");

  if (psi.is_inf()) return {ExtReal(0.0), 0.0, 0};
  const double ps = psi.value();
  if (ps == 0.0) return {ExtReal(1.0 / lambda), 0.0, 0};
  if (lambda == 0.0 && ps * H.positive_mass() <= 1.0) return {ExtReal::inf(), 0.0, 0};

  auto h = [&](double v) { return 1.0 - lambda * v - ps * H.scaled_stieltjes_term(v); };
  auto relative = [&](double v, double hv) { return std::abs(hv) / (1.0 + lambda * v); };

  double lo = options.lo;
  double hi = options.hi;
  int iterations = 0;
  while (h(lo) < 0.0 && lo > 1e-300) {
    lo *= 1e-3;
    ++iterations;
  }
  while (h(hi) > 0.0 && hi < 1e300) {
    hi *= 1e3;
    ++iterations;
  }
  if (h(lo) < 0.0 || h(hi) > 0.0)
    throw ConvergenceError("solve_v: could not bracket the fixed point", h(hi), iterations);

  // Newton steps inside the bracket once the residual is small; a flat h
  // otherwise leaves v itself less accurate than the residual suggests.
  auto polish = [&](double v, double hv) {
    for (int step = 0; step < 8; ++step) {
      if (hv > 0.0)
        lo = v;
      else if (hv < 0.0)
        hi = v;
      else
        break;
      const double slope = -lambda - ps * H.integral(1, 2, v);
      const double next = v - hv / slope;
      if (!(next > lo && next < hi)) break;
      const bool done = std::abs(next - v) <= 4.0 * std::numeric_limits<double>::epsilon() * v;
      v = next;
      hv = h(v);
      ++iterations;
      if (done) break;
    }
    return FixedPointSolution{ExtReal(v), relative(v, hv), iterations};
  };

  double v = std::sqrt(lo * hi);
  double hv = h(v);
  for (; iterations < options.max_iter; ++iterations) {
    if (relative(v, hv) <= options.tol) return polish(v, hv);
    if (hv > 0.0)
      lo = v;
    else
      hi = v;
    const double next = std::sqrt(lo * hi);
    if (next == v || next == lo || next == hi) break;  // interval at one ulp
    v = next;
    hv = h(v);
  }
  if (relative(v, hv) <= options.tol) return polish(v, hv);
  throw ConvergenceError("solve_v: tolerance not reached", relative(v, hv), iterations);
}

LambdaBar lambda_bar(double phi, ExtReal psi_bar, const SpectralDistribution& H,
                     const SolverOptions& options) {
  if (!(phi > 0.0) || !std::isfinite(phi)) throw ParameterError("lambda_bar: phi must be > 0");
  if (psi_bar < ExtReal(phi)) throw ParameterError("lambda_bar: psi_bar must be >= phi");
  if (psi_bar.is_inf()) return {ExtReal::inf(), ExtReal(0.0)};

  const FixedPointSolution sol = solve_v(0.0, psi_bar, H, options);
  if (sol.v.is_inf()) return {ExtReal(0.0), ExtReal::inf()};
  const double lb = (1.0 - phi / psi_bar.value()) / sol.v.value();
  return {ExtReal(std::max(0.0, lb)), sol.v};
}

ExtReal psi_bar_from_lambda(double phi, ExtReal lambda_bar, const SpectralDistribution& H,
                            const SolverOptions& options) {
  if (!(phi > 0.0) || !std::isfinite(phi)) throw ParameterError("psi_bar_from_lambda: phi must be > 0");
  if (lambda_bar.is_finite() && !(lambda_bar.value() >= 0.0))
    throw ParameterError("psi_bar_from_lambda: lambda_bar must be >= 0");
  if (lambda_bar.is_inf()) return ExtReal::inf();

  const FixedPointSolution target = solve_v(lambda_bar.value(), ExtReal(phi), H, options);
  if (target.v.is_inf()) return ExtReal(std::max(phi, 1.0 / H.positive_mass()));
  // The ridgeless equation 1/v = psi int r/(1+vr) dH is linear in psi.
  const double scaled = H.scaled_stieltjes_term(target.v);
  if (!(scaled > 0.0)) return ExtReal::inf();
  return ExtReal(std::max(phi, 1.0 / scaled));
}

EquivalencePath make_path(double phi, ExtReal psi_bar, const SpectralDistribution& H,
                          const SolverOptions& options) {
  const LambdaBar lb = lambda_bar(phi, psi_bar, H, options);
  return EquivalencePath{lb.lambda_bar, phi, psi_bar, lb.v};
}

std::vector<PathPoint> path_points(const EquivalencePath& path, const std::vector<double>& thetas) {
  std::vector<PathPoint> out;
  out.reserve(thetas.size());
  for (double t : thetas) {
    if (!(t >= 0.0 && t <= 1.0)) throw ParameterError("path_points: theta must lie in [0, 1]");
    PathPoint pt{t, ExtReal(0.0), ExtReal(0.0)};
    if (path.lambda_bar.is_inf())
      pt.lambda = t < 1.0 ? ExtReal::inf() : ExtReal(0.0);
    else
      pt.lambda = ExtReal((1.0 - t) * path.lambda_bar.value());
    if (path.psi_bar.is_inf())
      pt.psi = t < 1.0 ? ExtReal(path.phi / (1.0 - t)) : ExtReal::inf();
    else
      pt.psi = ExtReal((1.0 - t) * path.phi + t * path.psi_bar.value());
    out.push_back(pt);
  }
  return out;
}

std::vector<double> uniform_thetas(int n) {
  if (n < 1) throw ParameterError("need at least one path point");
  if (n == 1) return {0.0};
  std::vector<double> t(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) t[static_cast<std::size_t>(i)] = static_cast<double>(i) / (n - 1);
  return t;
}

}  // namespace ssridge
