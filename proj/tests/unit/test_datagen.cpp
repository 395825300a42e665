#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "ssridge/datagen.hpp"
#include "ssridge/errors.hpp"

using namespace ssridge;

namespace {

std::string write_temp(const std::string& name, const std::string& text) {
  const auto path = std::filesystem::temp_directory_path() / ("ssridge_test_" + name);
  std::ofstream(path) << text;
  return path.string();
}

}  // namespace

TEST_CASE("ar1_covariance entries") {
  const MatrixXd s2 = ar1_covariance(2, 0.5);
  CHECK(s2(0, 0) == 1.0);
  CHECK(s2(0, 1) == 0.5);
  CHECK(s2(1, 0) == 0.5);
  CHECK(ar1_covariance(3, 0.5)(0, 2) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK_THROWS_AS(ar1_covariance(3, 0.0), ParameterError);
  CHECK_THROWS_AS(ar1_covariance(3, 1.0), ParameterError);
  CHECK_THROWS_AS(ar1_covariance(0, 0.5), ParameterError);
}

TEST_CASE("ar1_covariance spectrum at p = 500") {
  const MatrixXd s = ar1_covariance(500, 0.5);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(s, Eigen::EigenvaluesOnly);
  // Symbol of the AR(1) Toeplitz matrix ranges over [(1-rho)/(1+rho), (1+rho)/(1-rho)].
  CHECK(es.eigenvalues().maxCoeff() == doctest::Approx(3.0).epsilon(1e-3));
  CHECK(es.eigenvalues().minCoeff() > 1.0 / 3.0 - 1e-9);
  CHECK(s.isApprox(s.transpose(), 0.0));
}

TEST_CASE("ar1_covariance is SPD up to p = 2000") {
  const MatrixXd s = ar1_covariance(2000, 0.9);
  Eigen::LLT<MatrixXd> llt(s);
  CHECK(llt.info() == Eigen::Success);
}

TEST_CASE("gen_m_ar1 ground truth") {
  const Dataset d = gen_m_ar1(2000, 200, 0.5, 11);
  REQUIRE(d.beta0);
  REQUIRE(d.f_nl);
  REQUIRE(d.sigma_nl_sq);
  const VectorXd recon = d.X * *d.beta0 + *d.f_nl;
  CHECK((recon - d.y).norm() <= 1e-10 * d.y.norm());
  CHECK(d.beta0->norm() <= 1.0);
  // Five orthonormal eigenvectors averaged with weight 1/5: |beta0|^2 = 5/25.
  CHECK(d.beta0->squaredNorm() == doctest::Approx(0.2).epsilon(1e-10));
  CHECK(std::abs(d.y.mean()) < 0.1);

  // beta0 lies in the span of the top five eigenvectors.
  const MatrixXd sigma = ar1_covariance(200, 0.5);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sigma);
  const MatrixXd top = es.eigenvectors().rightCols(5);
  CHECK((top * (top.transpose() * *d.beta0) - *d.beta0).norm() < 1e-10);
}

TEST_CASE("gen_m_ar1 is deterministic in the seed") {
  const Dataset a = gen_m_ar1(300, 40, 0.5, 5);
  const Dataset b = gen_m_ar1(300, 40, 0.5, 5);
  const Dataset c = gen_m_ar1(300, 40, 0.5, 6);
  CHECK(a.X == b.X);
  CHECK(a.y == b.y);
  CHECK(a.X != c.X);
}

TEST_CASE("standardized t5 draws have unit variance") {
  const MatrixXd z = sample_standardized(2000, 500, FeatureLaw::student_t5, 3);
  const double mean = z.mean();
  const double var = (z.array() - mean).square().mean();
  CHECK(std::abs(mean) < 0.01);
  CHECK(var == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("nonlinear energy matches a Monte Carlo estimate") {
  const NonlinearModel model = NonlinearModel::m_ar1(50, 0.5);
  const Dataset d = model.sample(200000, 9);
  const double mc = d.f_nl->squaredNorm() / static_cast<double>(d.n());
  CHECK(mc == doctest::Approx(model.nonlinear_energy()).epsilon(0.02));

  const MatrixXd shifted = ar1_covariance(50, 0.25);
  const Dataset s = model.sample_shifted(200000, 10, shifted);
  const double mc_shift = s.f_nl->squaredNorm() / static_cast<double>(s.n());
  CHECK(mc_shift == doctest::Approx(model.nonlinear_energy(shifted)).epsilon(0.02));
}

TEST_CASE("gen_rf_model") {
  const Dataset d = gen_rf_model(5000, 250, 2);
  CHECK(std::abs(d.y.mean()) < 0.1);
  CHECK(*d.beta0 == VectorXd::Unit(250, 0));
  const Dataset e = gen_rf_model(5000, 250, 2);
  CHECK(d.y == e.y);

  VectorXd b = VectorXd::Constant(250, 3.0);
  const Dataset f = gen_rf_model(100, 250, 2, b);
  CHECK(f.beta0->norm() == doctest::Approx(1.0));

  // X'X/n approaches I as n grows with p fixed.
  auto distance = [](Index n) {
    const Dataset g = gen_rf_model(n, 20, 4);
    const MatrixXd s = g.X.transpose() * g.X / static_cast<double>(n) - MatrixXd::Identity(20, 20);
    return Eigen::SelfAdjointEigenSolver<MatrixXd>(s, Eigen::EigenvaluesOnly).eigenvalues().cwiseAbs().maxCoeff();
  };
  CHECK(distance(20000) < distance(500));
}

TEST_CASE("CovarianceSpec materializes") {
  CHECK(CovarianceSpec::identity().materialize(3) == MatrixXd::Identity(3, 3));
  CHECK(CovarianceSpec::ar1(0.5).materialize(3) == ar1_covariance(3, 0.5));
  MatrixXd bad(2, 2);
  bad << 1, 2, 2, 1;  // indefinite
  CHECK_THROWS_AS(CovarianceSpec::explicit_matrix(bad).materialize(2), ParameterError);
}

TEST_CASE("load_csv") {
  const std::string path = write_temp("basic.csv", "a,b,y\n1,2,3\n4,5,6\n7,8,12\n");
  CsvOptions opts;
  opts.response_column = "y";
  opts.center = false;
  const Dataset d = load_csv(path, opts);
  CHECK(d.n() == 3);
  CHECK(d.p() == 2);
  CHECK(d.y(2) == 12.0);
  CHECK(d.X(1, 1) == 5.0);
  CHECK_FALSE(d.beta0.has_value());

  opts.center = true;
  const Dataset c = load_csv(path, opts);
  CHECK(std::abs(c.y.mean()) < 1e-14);

  opts.response_column = "1";  // by index when no header matches
  const Dataset byindex = load_csv(path, opts);
  CHECK(byindex.X(0, 1) == 3.0);
}

TEST_CASE("load_csv errors name the offending cell") {
  const std::string path = write_temp("bad.csv", "a,b,y\n1,2,3\n4,oops,6\n");
  CsvOptions opts;
  opts.response_column = "y";
  try {
    load_csv(path, opts);
    FAIL("expected IoError");
  } catch (const IoError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("row 3") != std::string::npos);
    CHECK(msg.find("column 2") != std::string::npos);
    CHECK(msg.find("oops") != std::string::npos);
  }
  CHECK_THROWS_AS(load_csv(write_temp("none.csv", ""), opts), IoError);
  CHECK_THROWS_AS(load_csv("/nonexistent/file.csv", opts), IoError);
  opts.response_column = "zzz";
  CHECK_THROWS_AS(load_csv(path, opts), IoError);
}

TEST_CASE("load_csv warns on a constant response") {
  const std::string path = write_temp("const.csv", "a,y\n1,2\n3,2\n");
  CsvOptions opts;
  opts.response_column = "y";
  std::vector<std::string> warnings;
  const Dataset d = load_csv(path, opts, &warnings);
  CHECK(d.n() == 2);
  CHECK(warnings.size() == 1);
}

TEST_CASE("Dataset::validate") {
  Dataset d;
  d.X = MatrixXd::Ones(3, 2);
  d.y = VectorXd::Ones(2);
  CHECK_THROWS_AS(d.validate(), InputError);
  d.y = VectorXd::Ones(3);
  d.validate();
  d.X(0, 0) = std::nan("");
  CHECK_THROWS_AS(d.validate(), InputError);
}
