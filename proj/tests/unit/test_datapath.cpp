#include <doctest.h>

#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "ssridge/datagen.hpp"
#include "ssridge/datapath.hpp"
#include "ssridge/errors.hpp"
#include "ssridge/estimators.hpp"
#include "ssridge/spectral.hpp"

using namespace ssridge;

namespace {

// Averaged left-hand side of the data-path equation via dense pseudoinverses.
double lhs_oracle(const MatrixXd& X, Index k, Index M, std::uint64_t seed) {
  double total = 0.0;
  for (const IndexSet& s : sample_subsets(X.rows(), k, M, seed)) {
    const MatrixXd Xi = X(s, Eigen::all);
    total += oracle::trace_pinv(Xi * Xi.transpose() / static_cast<double>(k)) / static_cast<double>(k);
  }
  return total / static_cast<double>(M);
}

double rhs_oracle(const MatrixXd& X, double lambda) {
  const double n = static_cast<double>(X.rows());
  MatrixXd S = X * X.transpose() / n;
  S.diagonal().array() += lambda;
  return oracle::trace_inverse(S) / n;
}

}  // namespace

TEST_CASE("empirical_v_hat closed forms") {
  CHECK(empirical_v_hat(MatrixXd::Zero(6, 4), 0.5) == doctest::Approx(2.0));
  const Index n = 9;
  const MatrixXd X = std::sqrt(static_cast<double>(n)) * MatrixXd::Identity(n, n);
  CHECK(empirical_v_hat(X, 0.7) == doctest::Approx(1.0 / 1.7).epsilon(1e-13));
  CHECK_THROWS_AS(empirical_v_hat(X, 0.0), ParameterError);
}

TEST_CASE("empirical_v_hat approaches the fixed point") {
  const MatrixXd X = oracle::gaussian(2000, 200, 3);
  const double expect = oracle::isotropic_v(0.95, 0.1);
  CHECK(empirical_v_hat(X, 0.95) == doctest::Approx(expect).epsilon(0.02));
}

TEST_CASE("m-hat / v-hat identity holds to roundoff") {
  const MatrixXd I = std::sqrt(8.0) * MatrixXd::Identity(8, 8);
  CHECK(check_mv_identity(I, 1.0) <= 1e-12);
  CHECK(check_mv_identity(oracle::gaussian(50, 20, 1), 0.3) <= 1e-12);
  unsigned seed = 10;
  for (auto [n, p] : {std::pair<Index, Index>{30, 80}, {40, 40}, {120, 15}, {1, 5}, {5, 1}}) {
    for (double lambda : {1e-3, 1.0, 50.0}) {
      CHECK(check_mv_identity(oracle::gaussian(n, p, ++seed), lambda) <= 1e-10);
    }
  }
}

TEST_CASE("empirical_stieltjes against dense traces") {
  const MatrixXd X = oracle::gaussian(25, 10, 4);
  const StieltjesPair s = empirical_stieltjes(X, 0.4);
  MatrixXd cov = X.transpose() * X / 25.0;
  cov.diagonal().array() += 0.4;
  CHECK(s.m_hat == doctest::Approx(oracle::trace_inverse(cov) / 10.0).epsilon(1e-12));
  CHECK(s.v_hat == doctest::Approx(rhs_oracle(X, 0.4)).epsilon(1e-12));
  CHECK(s.phi_n == doctest::Approx(0.4));
}

TEST_CASE("lambda_bar_data solves the trace equation") {
  const MatrixXd X = oracle::gaussian(300, 60, 5);
  for (Index k : {20, 150}) {
    const double lb = lambda_bar_data(X, k, 6, 17);
    REQUIRE(lb > 0.0);
    CHECK(rhs_oracle(X, lb) == doctest::Approx(lhs_oracle(X, k, 6, 17)).epsilon(1e-8));
  }
}

TEST_CASE("lambda_bar_data on isotropic data is near the population value") {
  // phi = 0.1, psi_bar = 2: lambda_bar = (1 - phi/psi_bar)(psi_bar - 1) = 0.95.
  const MatrixXd X = oracle::gaussian(2000, 200, 6);
  CHECK(lambda_bar_data(X, 100, 20, 1) == doctest::Approx(0.95).epsilon(0.1));
}

TEST_CASE("lambda_bar_data returns 0 when the subsample is the full rank-deficient design") {
  const MatrixXd X = oracle::gaussian(8, 12, 7);
  const double lb = lambda_bar_data(X, 8, 3, 1);
  CHECK(lb >= 0.0);
  CHECK(lb < 1e-6);
}

TEST_CASE("lambda_bar_data determinism, M dependence and permutation invariance") {
  const MatrixXd X = oracle::gaussian(400, 40, 8);
  const double a = lambda_bar_data(X, 80, 30, 3);
  CHECK(a == lambda_bar_data(X, 80, 30, 3));
  DataPathOptions threaded;
  threaded.threads = 3;
  CHECK(a == lambda_bar_data(X, 80, 30, 3, threaded));

  // Different M draw different subsets but target the same full-ensemble value.
  const double one = lambda_bar_data(X, 80, 1, 3);
  const double many = lambda_bar_data(X, 80, 100, 3);
  CHECK(std::abs(one - many) <= 0.1 * many);

  // Permuting rows permutes which subsets are drawn; the full-data side is
  // invariant, so compare at k = n where the subset is the whole sample.
  std::vector<Index> perm(400);
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  const MatrixXd P = X(perm, Eigen::all);
  const double full = lambda_bar_data(X, 400, 2, 3);
  CHECK(std::abs(full - lambda_bar_data(P, 400, 2, 3)) <= 2e-10 + 2e-10 * full);
  CHECK(std::abs(lambda_bar_data(X, 80, 30, 3) - lambda_bar_data(P, 80, 30, 3)) <= 0.05 * a);
}

TEST_CASE("lambda_bar_data errors") {
  const MatrixXd X = oracle::gaussian(100, 50, 9);
  CHECK_THROWS_AS(lambda_bar_data(X, 101, 2, 0), ParameterError);
  CHECK_THROWS_AS(lambda_bar_data(X, 0, 2, 0), ParameterError);
  CHECK_THROWS_AS(lambda_bar_data(X, 50, 2, 0), ParameterError);  // k = p guard
  CHECK_THROWS_AS(lambda_bar_data(X, 10, 0, 0), ParameterError);
}

TEST_CASE("feature variant with identity features equals the linear variant") {
  const MatrixXd X = oracle::gaussian(200, 30, 11);
  const MatrixXd Phi = apply_random_features(X, MatrixXd::Identity(30, 30), Activation::identity);
  CHECK(lambda_bar_data_features(Phi, 60, 5, 2) == lambda_bar_data(X, 60, 5, 2));

  const MatrixXd relu = apply_random_features(X, gaussian_feature_weights(40, 30, 3), Activation::relu);
  const double lb = lambda_bar_data_features(relu, 20, 5, 2);
  CHECK(std::isfinite(lb));
  CHECK(lb > 0.0);
  CHECK(lb == lambda_bar_data_features(relu, 20, 5, 2));
}

TEST_CASE("kernel variant closed forms") {
  // K = I: k = n / (1 + (n/p) lambda_bar)  =>  lambda_bar = (p/n)(n/k - 1).
  const Index n = 50;
  const double p = 20.0;
  for (Index k : {5, 10, 25}) {
    const double expect = p / n * (static_cast<double>(n) / k - 1.0);
    CHECK(lambda_bar_data_kernel(MatrixXd::Identity(n, n), p, k, 4, 1) == doctest::Approx(expect).epsilon(1e-9));
  }

  // Normalized linear kernel XX'/p reduces to the linear equation.
  const MatrixXd X = oracle::gaussian(150, 40, 12);
  const MatrixXd K = X * X.transpose() / 40.0;
  const double lin = lambda_bar_data(X, 90, 7, 5);
  CHECK(lambda_bar_data_kernel(K, 40.0, 90, 7, 5) == doctest::Approx(lin).epsilon(1e-8));

  MatrixXd asym = MatrixXd::Identity(4, 4);
  asym(0, 1) = 1.0;
  CHECK_THROWS_AS(lambda_bar_data_kernel(asym, 2.0, 2, 1, 0), InputError);
  CHECK_THROWS_AS(lambda_bar_data_kernel(MatrixXd::Identity(4, 4), 0.0, 2, 1, 0), ParameterError);
}
