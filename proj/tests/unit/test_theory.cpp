#include <doctest.h>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "ssridge/datagen.hpp"
#include "ssridge/errors.hpp"
#include "ssridge/theory.hpp"

using namespace ssridge;

namespace {

const SpectralDistribution kDelta1 = SpectralDistribution::point_mass(1.0);

LimitSpec isotropic_limit(double rho_sq = 1.0, double sigma_sq = 1.0) {
  return LimitSpec{kDelta1, kDelta1, rho_sq, sigma_sq};
}

// Dense evaluation of tv and tc with v from fixed-point iteration.
std::pair<double, double> dense_terms(double lambda, double phi, double psi, const MatrixXd& sigma,
                                      const MatrixXd& C, const VectorXd& beta0) {
  const Index p = sigma.rows();
  const double v = oracle::iterate_v(lambda, psi, spectrum_of(sigma));
  const MatrixXd R = (v * sigma + MatrixXd::Identity(p, p)).inverse();
  const double pd = static_cast<double>(p);
  const double num = phi * (C * sigma * R * R).trace() / pd;
  const double den = 1.0 / (v * v) - phi * (sigma * sigma * R * R).trace() / pd;
  const double tv = num / den;
  const double tc = beta0.dot(R * (tv * sigma + C) * R * beta0);
  return {tv, tc};
}

}  // namespace

TEST_CASE("isotropic tv and tc against closed forms") {
  const Index p = 40;
  const MatrixXd I = MatrixXd::Identity(p, p);
  const CovarianceEigen eig = CovarianceEigen::of(I);
  VectorXd beta0 = oracle::gaussian(p, 1, 1).col(0);
  const MatrixXd C = I / static_cast<double>(p);
  for (double lambda : {0.0, 0.2, 3.0}) {
    for (auto [phi, psi] : {std::pair{0.1, 0.1}, {0.1, 2.0}, {0.5, 3.0}, {2.0, 2.0}}) {
      if (lambda == 0.0 && psi <= 1.0) continue;
      const double v = lambda > 0.0 ? oracle::isotropic_v(lambda, psi) : 1.0 / (psi - 1.0);
      const double tv = oracle::isotropic_tv(v, phi, 1.0 / p);
      const double tc = oracle::isotropic_tc(v, tv, 1.0 / p, beta0.squaredNorm());
      CHECK(tv_general(lambda, phi, psi, eig, C) == doctest::Approx(tv).epsilon(1e-9));
      CHECK(tc_general(lambda, phi, psi, eig, C, beta0) == doctest::Approx(tc).epsilon(1e-9));
    }
  }
}

TEST_CASE("tv and tc against dense evaluation on anisotropic covariances") {
  const Index p = 30;
  const MatrixXd sigma = ar1_covariance(p, 0.6);
  const MatrixXd A = oracle::gaussian(10, p, 2);
  const MatrixXd C = A.transpose() * A / 10.0;
  const VectorXd beta0 = oracle::gaussian(p, 1, 3).col(0) / std::sqrt(static_cast<double>(p));
  for (double lambda : {0.0, 0.05, 1.0}) {
    for (auto [phi, psi] : {std::pair{0.2, 0.5}, {0.2, 3.0}, {0.7, 1.6}}) {
      if (lambda == 0.0 && psi <= 1.0) continue;
      const auto [tv, tc] = dense_terms(lambda, phi, psi, sigma, C, beta0);
      CHECK(tv_general(lambda, phi, psi, sigma, C) == doctest::Approx(tv).epsilon(1e-8));
      CHECK(tc_general(lambda, phi, psi, sigma, C, beta0) == doctest::Approx(tc).epsilon(1e-8));
      const RiskTerms rt = risk_profile_Rp(lambda, phi, psi, sigma, beta0, 0.7, C);
      CHECK(rt.value == doctest::Approx(tc + 0.7 * tv).epsilon(1e-8));
    }
  }
}

TEST_CASE("tv and tc degenerate cases") {
  const Index p = 10;
  const MatrixXd sigma = ar1_covariance(p, 0.5);
  const VectorXd beta0 = VectorXd::Constant(p, 0.3);
  const MatrixXd zero = MatrixXd::Zero(p, p);
  CHECK(tv_general(0.4, 0.2, 0.8, sigma, zero) == 0.0);
  CHECK(tc_general(0.4, 0.2, 0.8, sigma, zero, beta0) == 0.0);

  const MatrixXd C = MatrixXd::Identity(p, p);
  CHECK(tv_general(1e9, 0.2, 0.8, sigma, C) < 1e-12);
  CHECK(tc_general(1e9, 0.2, 0.8, sigma, C, beta0) == doctest::Approx(beta0.squaredNorm()).epsilon(1e-6));

  CHECK(risk_profile_Rp(0.3, 0.2, 0.8, sigma, VectorXd::Zero(p), 0.0, C).value == 0.0);

  CHECK_THROWS_AS(tv_general(0.3, 0.5, 0.2, sigma, C), ParameterError);
  CHECK_THROWS_AS(CovarianceEigen::of(-MatrixXd::Identity(2, 2)), InputError);
}

TEST_CASE("tv denominators stay positive across a sweep") {
  const CovarianceEigen eig = CovarianceEigen::of(ar1_covariance(50, 0.5));
  const MatrixXd C = MatrixXd::Identity(50, 50) / 50.0;
  for (double lambda : log_grid(1e-4, 1e3, 15)) {
    for (double phi : {0.05, 0.5, 1.5}) {
      for (double psi : log_grid(phi, 50.0, 10)) {
        CHECK_NOTHROW(tv_general(lambda, phi, psi, eig, C));
      }
    }
  }
}

TEST_CASE("risk_profile_limit worked value") {
  const RiskTerms r = risk_profile_limit(ExtReal(0.0), 0.1, ExtReal(2.0), isotropic_limit());
  CHECK(r.v.value() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(r.tv == doctest::Approx(0.025 / 0.975).epsilon(1e-10));
  CHECK(r.value == doctest::Approx(0.25 * (1.0 + 0.025 / 0.975) + 0.025 / 0.975).epsilon(1e-10));
  CHECK(r.value == doctest::Approx(0.282051282).epsilon(1e-8));

  CHECK(risk_profile_limit(ExtReal(0.3), 0.4, ExtReal(0.9), isotropic_limit(0.0, 0.0)).value == 0.0);
}

TEST_CASE("risk_profile_limit endpoints") {
  const SpectralDistribution g({{0.5, 0.5}, {3.0, 0.5}});
  const LimitSpec lim{SpectralDistribution({{0.5, 0.5}, {2.0, 0.5}}), g, 0.8, 1.2};
  CHECK(risk_profile_limit(ExtReal::inf(), 0.3, ExtReal(0.3), lim).value ==
        doctest::Approx(0.8 * g.moment(1)).epsilon(1e-14));
  CHECK(risk_profile_limit(ExtReal(0.0), 0.3, ExtReal::inf(), lim).value ==
        doctest::Approx(0.8 * g.moment(1)).epsilon(1e-14));
  CHECK(risk_profile_limit(ExtReal(1e10), 0.3, ExtReal(0.3), lim).value ==
        doctest::Approx(0.8 * g.moment(1)).epsilon(1e-8));

  // Overparameterized ridgeless full fit at phi > 1 with H = delta_1: tv = 1/(phi - 1).
  for (double phi : {1.5, 2.0, 4.0}) {
    const RiskTerms r = risk_profile_limit(ExtReal(0.0), phi, ExtReal(phi), isotropic_limit());
    CHECK(r.tv == doctest::Approx(1.0 / (phi - 1.0)).epsilon(1e-9));
  }
  // Underparameterized ridgeless (v = inf) with H = delta_1: tv = phi/(1 - phi), no bias.
  const RiskTerms under = risk_profile_limit(ExtReal(0.0), 0.25, ExtReal(0.5), isotropic_limit());
  CHECK(under.v.is_inf());
  CHECK(under.tc == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(under.tv == doctest::Approx(0.25 / 0.75).epsilon(1e-12));

  CHECK_THROWS_AS(risk_profile_limit(ExtReal(0.0), 0.3, ExtReal(0.2), lim), ParameterError);
}

TEST_CASE("limiting risk is constant along equivalence paths") {
  const LimitSpec lim{SpectralDistribution({{0.4, 0.5}, {2.5, 0.5}}),
                      SpectralDistribution({{0.4, 0.2}, {2.5, 0.8}}), 1.0, 0.5};
  for (double phi : {0.1, 0.8}) {
    for (double psi_bar : {1.5, 5.0}) {
      const EquivalencePath path = make_path(phi, ExtReal(psi_bar), lim.H);
      const double ref = risk_profile_limit(ExtReal(0.0), phi, ExtReal(psi_bar), lim).value;
      for (const PathPoint& pt : path_points(path, uniform_thetas(6))) {
        CHECK(risk_profile_limit(pt.lambda, phi, pt.psi, lim).value == doctest::Approx(ref).epsilon(1e-8));
      }
    }
  }
}

TEST_CASE("optimal ridgeless and ridge risks agree") {
  const LimitSpec lim = isotropic_limit();
  const GridMinimum single = optimal_ridgeless_risk(0.1, lim, std::vector<double>{3.0});
  CHECK(single.arg.value() == 3.0);
  CHECK(single.value == doctest::Approx(risk_profile_limit(ExtReal(0.0), 0.1, ExtReal(3.0), lim).value));

  const GridMinimum rl = optimal_ridgeless_risk(0.1, lim);
  const GridMinimum rr = optimal_ridge_risk(0.1, lim);
  CHECK(std::abs(rl.value - rr.value) <= 1e-3);

  // Isotropic optimum: the optimal ridge penalty is sigma^2 / rho^2 times phi.
  CHECK(rr.arg.value() == doctest::Approx(0.1).epsilon(0.02));

  CHECK_THROWS_AS(optimal_ridgeless_risk(0.1, lim, std::vector<double>{}), ParameterError);
  CHECK_THROWS_AS(optimal_ridgeless_risk(0.5, lim, std::vector<double>{0.2}), ParameterError);
}

TEST_CASE("monotonicity scan") {
  std::vector<double> phis;
  for (int i = 1; i <= 15; ++i) phis.push_back(0.1 * i);
  const MonotonicityScan iso = monotonicity_scan(phis, isotropic_limit());
  CHECK(iso.nondecreasing);
  CHECK(iso.max_gap <= 1e-3);
  REQUIRE(iso.rows.size() == phis.size());
  for (std::size_t i = 1; i < iso.rows.size(); ++i)
    CHECK(iso.rows[i].min_risk >= iso.rows[i - 1].min_risk - 1e-9);

  const LimitSpec two{SpectralDistribution({{0.5, 0.5}, {2.0, 0.5}}), SpectralDistribution({{0.5, 0.3}, {2.0, 0.7}}),
                      1.0, 0.3};
  const MonotonicityScan aniso = monotonicity_scan(phis, two);
  CHECK(aniso.nondecreasing);
  CHECK(aniso.max_gap <= 1e-3);

  std::ostringstream csv;
  write_monotonicity_csv(iso, csv);
  CHECK(csv.str().rfind("phi,psi_star,lambda_star,min_risk,min_ridge_risk,flagged\n", 0) == 0);
}

TEST_CASE("log_grid") {
  const auto g = log_grid(1e-2, 1e2, 5);
  REQUIRE(g.size() == 5);
  CHECK(g.front() == doctest::Approx(1e-2));
  CHECK(g[2] == doctest::Approx(1.0));
  CHECK(g.back() == doctest::Approx(1e2));
  CHECK(log_grid(3.0, 3.0, 1) == std::vector<double>{3.0});
  CHECK_THROWS_AS(log_grid(0.0, 1.0, 3), ParameterError);
}
