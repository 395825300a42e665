#include "commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "ssridge/datapath.hpp"
#include "ssridge/errors.hpp"
#include "ssridge/estimators.hpp"
#include "ssridge/parallel.hpp"
#include "ssridge/risks.hpp"
#include "ssridge/rng.hpp"
#include "ssridge/spectral.hpp"
#include "ssridge/theory.hpp"

namespace ssridge::cli {

namespace {

std::filesystem::path prepare_out(const ExperimentConfig& config) {
  std::filesystem::path dir(config.out);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + config.out + "': " + ec.message());
  return dir;
}

std::ofstream open_out(const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw IoError("cannot write '" + file.string() + "'");
  out << std::setprecision(17);
  return out;
}

// Evaluates the configured risk kinds for one coefficient vector.
class RiskEvaluator {
 public:
  RiskEvaluator(const ExperimentConfig& config, const LoadedData& data) : data_(data) {
    for (const std::string& kind : config.risks.kinds) {
      if (!data.model) {
        if (kind != "prediction" && kind != "training")
          throw ConfigError("risks.kinds: '" + kind +
                            "' needs ground truth and is not available for a csv source");
        continue;
      }
      if (kind == "estimation") specs_.push_back(RiskSpec::estimation());
      if (kind == "training") specs_.push_back(RiskSpec::training());
      if (kind == "in_sample") specs_.push_back(RiskSpec::in_sample());
      if (kind == "prediction")
        specs_.push_back(RiskSpec::out_of_sample_population(data.model->sigma(),
                                                            data.model->nonlinear_energy()));
      if (kind == "ood") {
        MatrixXd shifted = ar1_covariance(data.model->p(), config.risks.ood_rho);
        const double energy = data.model->nonlinear_energy(shifted);
        specs_.push_back(RiskSpec::out_of_sample_population(std::move(shifted), energy, {}, "ood"));
      }
    }
    kinds_ = config.risks.kinds;
  }

  std::vector<std::pair<std::string, RiskValue>> evaluate(const EnsembleFit& fit) const {
    std::vector<std::pair<std::string, RiskValue>> out;
    if (data_.model) {
      for (const RiskSpec& s : specs_) out.emplace_back(s.label, generalized_risk(fit.beta_bar, s, data_.train));
      return out;
    }
    for (const std::string& kind : kinds_) {
      if (kind == "training") {
        RiskValue r;
        r.nrow = data_.train.n();
        r.value = (fit.predict(data_.train.X) - data_.train.y).squaredNorm() /
                  static_cast<double>(data_.train.n());
        out.emplace_back(kind, r);
      } else {
        out.emplace_back(kind, mc_prediction_risk(fit, data_.test->X, data_.test->y));
      }
    }
    return out;
  }

 private:
  const LoadedData& data_;
  std::vector<RiskSpec> specs_;
  std::vector<std::string> kinds_;
};

void write_optional(std::ostream& os, const std::optional<double>& v) {
  if (v) os << *v;
}

}  // namespace

std::string cmd_sweep(const ExperimentConfig& config) {
  config.validate();
  const LoadedData data = load_data(config);
  const Index n = data.train.n();
  const Index p = data.train.p();
  const double phi = static_cast<double>(p) / static_cast<double>(n);
  const std::vector<double> lambdas = lambda_grid(config.grid);
  const std::vector<double> psis = psi_grid(config.grid, phi);
  const RiskEvaluator evaluator(config, data);

  struct Cell {
    std::size_t i, j;
    double lambda, psi;
    Index k;
    std::uint64_t seed;
    std::vector<std::pair<std::string, RiskValue>> risks;
  };
  std::vector<Cell> cells;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    for (std::size_t j = 0; j < psis.size(); ++j) {
      const Index k = std::min(k_from_psi(p, psis[j]), n);
      if (k < 1) {
        std::cerr << "note: skipping psi = " << psis[j] << " (subsample size would be 0)\n";
        continue;
      }
      cells.push_back({i, j, lambdas[i], psis[j], k,
                       derive_seed(config.seed, {tag::kCell, i, j}), {}});
    }
  }

  EnsembleOptions eo;
  parallel_for(cells.size(), config.threads, [&](std::size_t c) {
    Cell& cell = cells[c];
    const EnsembleFit fit = fit_ensemble(data.train, cell.k, config.M, cell.lambda, cell.seed,
                                         FeatureMapSpec::linear(), eo);
    cell.risks = evaluator.evaluate(fit);
  });

  const std::filesystem::path file = prepare_out(config) / "sweep.csv";
  std::ofstream out = open_out(file);
  out << "lambda,psi,k,M,risk_kind,value,mc_se,seed\n";
  for (const Cell& cell : cells) {
    for (const auto& [kind, risk] : cell.risks) {
      out << cell.lambda << ',' << cell.psi << ',' << cell.k << ',' << config.M << ',' << kind << ','
          << risk.value << ',';
      write_optional(out, risk.mc_se);
      out << ',' << cell.seed << '\n';
    }
  }
  return file.string();
}

std::string cmd_path(const ExperimentConfig& config) {
  config.validate();
  const LoadedData data = load_data(config);
  const Index n = data.train.n();
  const Index p = data.train.p();
  const double phi = static_cast<double>(p) / static_cast<double>(n);
  const RiskEvaluator evaluator(config, data);

  std::optional<SpectralDistribution> H;
  if (data.model) H = spectrum_of(data.model->sigma());
  if (config.path.kind == "population" && !H)
    throw ConfigError("path.kind = 'population' needs a synthetic data source");

  // Anchors in config order: psi_bar entries, then lambda_bar entries mapped
  // to psi_bar through the population spectrum.
  std::vector<double> anchors = config.path.psi_bar;
  for (double lb : config.path.lambda_bar) {
    if (!H) throw ConfigError("path.lambda_bar anchors need a synthetic data source");
    const ExtReal psi_bar = psi_bar_from_lambda(phi, ExtReal(lb), *H);
    if (psi_bar.is_inf())
      throw ConfigError("path.lambda_bar anchor " + std::to_string(lb) + " maps to psi_bar = inf");
    anchors.push_back(psi_bar.value());
  }
  if (anchors.empty()) throw ConfigError("path: no anchors (set path.psi_bar or path.lambda_bar)");

  std::vector<std::pair<std::string, VectorXd>> projections;
  for (const std::string& name : config.path.projections)
    projections.emplace_back("proj_" + name,
                             projection_vector(parse_projection(name), p, config.seed));

  struct Row {
    double anchor, lambda_pop, lambda_data;
    PathPoint point;
    Index k;
    std::string kind;
    double value;
    std::uint64_t seed;
  };
  std::vector<Row> rows;
  std::vector<std::vector<std::pair<std::string, std::vector<double>>>> per_anchor;

  for (std::size_t a = 0; a < anchors.size(); ++a) {
    const double psi_bar = anchors[a];
    if (psi_bar < phi)
      throw ConfigError("path anchor psi_bar = " + std::to_string(psi_bar) +
                        " is below the data aspect ratio " + std::to_string(phi));
    const Index k_bar = k_from_psi(p, psi_bar);
    if (k_bar < 1)
      throw ConfigError("path anchor psi_bar = " + std::to_string(psi_bar) +
                        " gives subsample size k < 1");
    const std::uint64_t anchor_seed = derive_seed(config.seed, {tag::kCell, 0xA0, a});

    double lambda_pop = std::numeric_limits<double>::quiet_NaN();
    if (H) lambda_pop = lambda_bar(phi, ExtReal(psi_bar), *H).lambda_bar.value();
    const bool degenerate = k_bar == n;
    double lambda_data = 0.0;
    if (!degenerate) {
      DataPathOptions dopt;
      dopt.threads = config.threads;
      lambda_data = lambda_bar_data(data.train.X, k_bar, config.M, anchor_seed, dopt);
    }
    const double lb = config.path.kind == "population" ? lambda_pop : lambda_data;
    const EquivalencePath path{ExtReal(lb), phi, ExtReal(degenerate ? phi : psi_bar), ExtReal(0.0)};
    const std::vector<double> thetas =
        path.degenerate() ? std::vector<double>{0.0} : uniform_thetas(config.path.points);

    PathOptions popt;
    popt.threads = config.threads;
    const std::vector<PathFit> fits = fit_path(data.train, path, thetas, config.M, anchor_seed,
                                               k_from_psi, popt);

    std::vector<std::pair<std::string, std::vector<double>>> series;
    auto record = [&](const PathFit& f, const std::string& kind, double value) {
      rows.push_back({psi_bar, lambda_pop, lambda_data, f.point, f.k, kind, value, f.seed});
      auto it = std::find_if(series.begin(), series.end(), [&](const auto& s) { return s.first == kind; });
      if (it == series.end()) {
        series.emplace_back(kind, std::vector<double>{});
        it = series.end() - 1;
      }
      it->second.push_back(value);
    };
    for (const PathFit& f : fits) {
      for (const auto& [name, vec] : projections) record(f, name, vec.dot(f.fit.beta_bar));
      for (const auto& [kind, risk] : evaluator.evaluate(f.fit)) record(f, "risk_" + kind, risk.value);
    }
    per_anchor.push_back(std::move(series));
  }

  const std::filesystem::path dir = prepare_out(config);
  const std::filesystem::path file = dir / "path.csv";
  {
    std::ofstream out = open_out(file);
    out << "anchor_psi_bar,lambda_bar_pop,lambda_bar_data,theta,lambda,psi,k,functional_kind,value,seed\n";
    for (const Row& r : rows) {
      out << r.anchor << ',';
      if (std::isfinite(r.lambda_pop)) out << r.lambda_pop;
      out << ',' << r.lambda_data << ',' << r.point.theta << ',' << r.point.lambda.value() << ','
          << r.point.psi.value() << ',' << r.k << ',' << r.kind << ',' << r.value << ',' << r.seed
          << '\n';
    }
  }

  // Cross-path normalization: (mean - mean of first path) / (mean of last
  // path - mean of first path), so each path is comparable across functionals.
  std::ofstream summary = open_out(dir / "path_summary.csv");
  summary << "anchor_psi_bar,functional_kind,min,max,mean,range,normalized_mean\n";
  for (std::size_t a = 0; a < per_anchor.size(); ++a) {
    for (const auto& [kind, values] : per_anchor[a]) {
      const RangeStat s = range_of(values, kind);
      summary << anchors[a] << ',' << kind << ',' << s.min << ',' << s.max << ',' << s.mean << ','
              << s.range() << ',';
      if (per_anchor.size() > 1) {
        auto mean_of = [&](std::size_t b) {
          for (const auto& [k2, v2] : per_anchor[b])
            if (k2 == kind) return range_of(v2).mean;
          return std::numeric_limits<double>::quiet_NaN();
        };
        const double first = mean_of(0);
        const double last = mean_of(per_anchor.size() - 1);
        if (std::isfinite(first) && std::isfinite(last) && last != first)
          summary << (s.mean - first) / (last - first) + 0.0;
      }
      summary << '\n';
    }
  }
  return file.string();
}

std::vector<CheckResult> cmd_check(const ExperimentConfig& config, std::ostream& log) {
  config.validate();
  std::vector<CheckResult> results;
  auto add = [&](std::string name, double measured, double threshold, std::string detail) {
    CheckResult r{std::move(name), measured <= threshold, measured, threshold, std::move(detail)};
    log << (r.passed ? "PASS " : "FAIL ") << r.name << " measured=" << r.measured
        << " threshold=" << r.threshold << '\n';
    results.push_back(std::move(r));
  };

  // Fixed-point residuals |1 - lambda v - psi v int r/(1+vr) dH| over a small panel.
  {
    const std::vector<SpectralDistribution> spectra = {
        SpectralDistribution::point_mass(1.0),
        SpectralDistribution({{1.0 / 3.0, 0.5}, {3.0, 0.5}}),
        spectrum_of(ar1_covariance(100, 0.5)),
    };
    double worst = 0.0;
    for (const auto& H : spectra)
      for (double lambda : {0.0, 0.1, 1.0})
        for (double psi : {0.5, 2.0, 10.0}) {
          const FixedPointSolution s = solve_v(lambda, ExtReal(psi), H);
          if (s.v.is_inf()) continue;
          const double v = s.v.value();
          worst = std::max(worst, std::abs(1.0 - lambda * v - psi * H.scaled_stieltjes_term(v)));
        }
    add("fixed_point_residual", worst, 1e-9, "max |1 - lambda v - psi v int r/(1+vr) dH|");
  }

  // Isotropic closed form: v = 1/(psi_bar - 1), lambda_bar = (1 - phi/psi_bar)/v.
  {
    const LambdaBar lb = lambda_bar(0.1, ExtReal(2.0), SpectralDistribution::point_mass(1.0));
    add("lambda_bar_closed_form", std::abs(lb.lambda_bar.value() - 0.95) + std::abs(lb.v.value() - 1.0),
        1e-10, "phi = 0.1, psi_bar = 2, H = delta_1");
  }

  // Data-dependent lambda_bar must be nonnegative and near the population value.
  {
    const NonlinearModel model = NonlinearModel::isotropic_gaussian(200);
    const Dataset d = model.sample(2000, config.seed);
    double lb = lambda_bar_data(d.X, 100, 20, config.seed);
    if (config.check.inject_wrong_sign) lb = -lb;
    const double rel = lb >= 0.0 ? std::abs(lb - 0.95) / 0.95 : std::numeric_limits<double>::infinity();
    add("lambda_bar_sign", rel, 0.15, "isotropic n = 2000, p = 200, k = 100, M = 20; relative error vs 0.95");
  }

  // m_hat / v_hat identity on random shapes.
  {
    Rng rng = make_rng(config.seed, {tag::kCell, 0xC0});
    std::uniform_int_distribution<int> dim(5, 80);
    std::uniform_real_distribution<double> lam(0.01, 5.0);
    double worst = 0.0;
    for (int t = 0; t < config.check.mv_matrices; ++t) {
      const Index nn = dim(rng);
      const Index pp = t % 3 == 0 ? nn : dim(rng);
      const MatrixXd X = sample_standardized(nn, pp, FeatureLaw::gaussian, rng());
      worst = std::max(worst, check_mv_identity(X, lam(rng)));
    }
    add("mv_identity", worst, 1e-10, "max |phi z m + phi - 1 - z v| over random matrices");
  }

  // Primal/dual agreement: fit_ridge against a direct p x p solve.
  {
    const MatrixXd X = sample_standardized(40, 90, FeatureLaw::gaussian, derive_seed(config.seed, {1}));
    const VectorXd y = sample_standardized(40, 1, FeatureLaw::gaussian, derive_seed(config.seed, {2})).col(0);
    const double lambda = 0.3;
    MatrixXd A = X.transpose() * X / 40.0;
    A.diagonal().array() += lambda;
    const VectorXd direct = A.ldlt().solve(X.transpose() * y / 40.0);
    const VectorXd fitted = fit_ridge(X, y, lambda);
    add("primal_dual", (fitted - direct).norm() / direct.norm(), 1e-8, "p > k ridge, dual vs primal");
  }

  // Monotonicity of the optimal ridgeless risk and the ridge/ridgeless match.
  {
    LimitSpec lim{SpectralDistribution::point_mass(1.0), SpectralDistribution::point_mass(1.0), 1.0, 1.0};
    std::vector<double> phis;
    for (int i = 1; i <= 15; ++i) phis.push_back(0.1 * i);
    const MonotonicityScan scan = monotonicity_scan(phis, lim);
    add("monotonicity", scan.nondecreasing ? 0.0 : 1.0, 0.0, "min ridgeless risk nondecreasing in phi");
    add("optimal_risk_match", scan.max_gap, 1e-3, "max |min ridge - min ridgeless| over phi");
  }

  // The limiting risk is constant along a path.
  {
    LimitSpec lim{SpectralDistribution({{1.0 / 3.0, 0.5}, {3.0, 0.5}}),
                  SpectralDistribution({{1.0 / 3.0, 0.5}, {3.0, 0.5}}), 1.0, 1.0};
    const EquivalencePath path = make_path(0.1, ExtReal(2.0), lim.H);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const PathPoint& pt : path_points(path, uniform_thetas(11))) {
      const double r = risk_profile_limit(pt.lambda, 0.1, pt.psi, lim).value;
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    add("path_invariance", hi - lo, 1e-8, "range of the limiting risk along a path");
  }

  nlohmann::json report;
  report["passed"] = std::all_of(results.begin(), results.end(), [](const auto& r) { return r.passed; });
  report["seed"] = config.seed;
  for (const CheckResult& r : results)
    report["checks"].push_back({{"name", r.name},
                                {"passed", r.passed},
                                {"measured", std::isfinite(r.measured) ? nlohmann::json(r.measured)
                                                                       : nlohmann::json("inf")},
                                {"threshold", r.threshold},
                                {"detail", r.detail}});
  std::ofstream out = open_out(prepare_out(config) / "check.json");
  out << report.dump(2) << '\n';
  return results;
}

}  // namespace ssridge::cli
