#include "ssridge/datagen.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "ssridge/errors.hpp"
#include "ssridge/rng.hpp"

namespace ssridge {

namespace {

// sd of Student t with 5 degrees of freedom.
const double kSigma5 = std::sqrt(5.0 / 3.0);

double standardized_fourth_moment(FeatureLaw law) {
  switch (law) {
    case FeatureLaw::gaussian:
      return 3.0;
    case FeatureLaw::student_t5:
      return 9.0;  // 3 + 6 / (nu - 4)
  }
  return 3.0;
}

// Flip eigenvectors so the entry of largest magnitude is positive.
void canonicalize_sign(Eigen::Ref<VectorXd> w) {
  Index arg = 0;
  w.cwiseAbs().maxCoeff(&arg);
  if (w(arg) < 0) w = -w;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

void Dataset::validate() const {
  if (X.rows() < 1 || X.cols() < 1) throw InputError("dataset must have n >= 1 and p >= 1");
  if (y.size() != X.rows()) throw InputError("response length does not match number of rows");
  if (!X.allFinite()) throw InputError("design matrix has non-finite entries");
  if (!y.allFinite()) throw InputError("response has non-finite entries");
  if (beta0 && beta0->size() != X.cols()) throw InputError("beta0 length does not match p");
  if (f_nl && f_nl->size() != X.rows()) throw InputError("f_nl length does not match n");
  if (sigma_nl_sq && !(*sigma_nl_sq >= 0.0)) throw InputError("sigma_nl_sq must be nonnegative");
}

CovarianceSpec CovarianceSpec::ar1(double rho) {
  CovarianceSpec s;
  s.kind = Kind::ar1;
  s.rho = rho;
  return s;
}

CovarianceSpec CovarianceSpec::explicit_matrix(MatrixXd m) {
  CovarianceSpec s;
  s.kind = Kind::explicit_matrix;
  s.matrix = std::move(m);
  return s;
}

MatrixXd CovarianceSpec::materialize(Index p) const {
  switch (kind) {
    case Kind::identity:
      return MatrixXd::Identity(p, p);
    case Kind::ar1:
      return ar1_covariance(p, rho);
    case Kind::explicit_matrix: {
      if (matrix.rows() != p || matrix.cols() != p)
        throw ParameterError("explicit covariance has wrong dimensions");
      if (!matrix.isApprox(matrix.transpose(), 1e-12))
        throw ParameterError("explicit covariance is not symmetric");
      Eigen::LLT<MatrixXd> llt(matrix);
      if (llt.info() != Eigen::Success)
        throw ParameterError("explicit covariance is not positive definite");
      return matrix;
    }
  }
  return MatrixXd::Identity(p, p);
}

MatrixXd ar1_covariance(Index p, double rho) {
  if (p < 1) throw ParameterError("ar1_covariance: p must be >= 1");
  if (!(rho > 0.0 && rho < 1.0)) throw ParameterError("ar1_covariance: rho must lie in (0, 1)");
  MatrixXd s(p, p);
  for (Index j = 0; j < p; ++j)
    for (Index i = 0; i < p; ++i) s(i, j) = std::pow(rho, static_cast<double>(std::abs(i - j)));
  return s;
}

MatrixXd spd_sqrt(const MatrixXd& sigma) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sigma);
  if (es.info() != Eigen::Success) throw InputError("eigendecomposition failed");
  if (es.eigenvalues().minCoeff() <= 0.0) throw InputError("matrix is not positive definite");
  return es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() *
         es.eigenvectors().transpose();
}

MatrixXd sample_standardized(Index rows, Index cols, FeatureLaw law, std::uint64_t seed) {
  MatrixXd z(rows, cols);
  Rng rng(seed);
  // Fill row by row so that a prefix of rows is reproducible across n.
  if (law == FeatureLaw::gaussian) {
    std::normal_distribution<double> dist(0.0, 1.0);
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < cols; ++j) z(i, j) = dist(rng);
  } else {
    std::student_t_distribution<double> dist(5.0);
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < cols; ++j) z(i, j) = dist(rng) / kSigma5;
  }
  return z;
}

NonlinearModel::NonlinearModel(MatrixXd sigma, VectorXd beta0, FeatureLaw law)
    : sigma_(std::move(sigma)), beta0_(std::move(beta0)), law_(law) {
  const Index p = sigma_.rows();
  if (p < 1 || sigma_.cols() != p) throw ParameterError("covariance must be square and nonempty");
  if (beta0_.size() != p) throw ParameterError("beta0 length does not match covariance");
  isotropic_ = sigma_.isIdentity(0.0);
  sigma_sqrt_ = isotropic_ ? MatrixXd::Identity(p, p) : spd_sqrt(sigma_);
  trace_ = sigma_.trace();
}

NonlinearModel NonlinearModel::m_ar1(Index p, double rho) {
  MatrixXd sigma = ar1_covariance(p, rho);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sigma);
  const Index top = std::min<Index>(5, p);
  VectorXd beta0 = VectorXd::Zero(p);
  for (Index j = 0; j < top; ++j) {
    VectorXd w = es.eigenvectors().col(p - 1 - j);  // ascending order
    canonicalize_sign(w);
    beta0 += w;
  }
  beta0 /= 5.0;
  return NonlinearModel(std::move(sigma), std::move(beta0), FeatureLaw::student_t5);
}

NonlinearModel NonlinearModel::isotropic_gaussian(Index p, std::optional<VectorXd> beta0) {
  if (p < 1) throw ParameterError("p must be >= 1");
  VectorXd b = beta0 ? *beta0 : VectorXd::Unit(p, 0);
  return NonlinearModel(MatrixXd::Identity(p, p), std::move(b), FeatureLaw::gaussian);
}

Dataset NonlinearModel::sample(Index n, std::uint64_t seed) const {
  return draw(n, seed, nullptr);
}

Dataset NonlinearModel::sample_shifted(Index n, std::uint64_t seed, const MatrixXd& sigma0) const {
  if (sigma0.rows() != p() || sigma0.cols() != p())
    throw ParameterError("shifted covariance has wrong dimensions");
  const MatrixXd root = spd_sqrt(sigma0);
  Dataset d = draw(n, seed, &root);
  d.sigma_nl_sq = nonlinear_energy(sigma0);
  return d;
}

Dataset NonlinearModel::draw(Index n, std::uint64_t seed, const MatrixXd* shifted_sqrt) const {
  if (n < 1) throw ParameterError("n must be >= 1");
  const Index p = this->p();
  MatrixXd z = sample_standardized(n, p, law_, derive_seed(seed, {tag::kFeatures}));
  MatrixXd eps = sample_standardized(n, 1, law_, derive_seed(seed, {tag::kNoise}));

  Dataset d;
  if (shifted_sqrt) {
    d.X = z * (*shifted_sqrt);
  } else if (isotropic_) {
    d.X = std::move(z);
  } else {
    d.X = z * sigma_sqrt_;
  }
  VectorXd f_nl = (d.X.rowwise().squaredNorm().array() - trace_) / static_cast<double>(p);
  f_nl += eps.col(0);
  d.y = d.X * beta0_ + f_nl;
  d.beta0 = beta0_;
  d.f_nl = std::move(f_nl);
  d.sigma_nl_sq = nonlinear_energy();
  return d;
}

double NonlinearModel::nonlinear_energy(const MatrixXd& sigma0) const {
  // Var(z' B z) = 2 tr(B^2) + (mu4 - 3) sum_i B_ii^2 for z with i.i.d. entries.
  const double p = static_cast<double>(this->p());
  const double mu4 = standardized_fourth_moment(law_);
  const double var_quad =
      2.0 * sigma0.squaredNorm() + (mu4 - 3.0) * sigma0.diagonal().squaredNorm();
  const double mean_shift = sigma0.trace() - trace_;
  return 1.0 + (var_quad + mean_shift * mean_shift) / (p * p);
}

Dataset gen_m_ar1(Index n, Index p, double rho, std::uint64_t seed) {
  return NonlinearModel::m_ar1(p, rho).sample(n, seed);
}

Dataset gen_rf_model(Index n, Index p, std::uint64_t seed, std::optional<VectorXd> beta0) {
  if (beta0 && beta0->norm() > 0.0) *beta0 /= beta0->norm();
  return NonlinearModel::isotropic_gaussian(p, std::move(beta0)).sample(n, seed);
}

Dataset load_csv(const std::string& path, const CsvOptions& options,
                 std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open CSV file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw IoError(path + ": empty file (a header row is required)");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const std::vector<std::string> header = split_csv_line(line);
  const Index cols = static_cast<Index>(header.size());
  if (cols < 2) throw IoError(path + ": need at least two columns");

  Index response = -1;
  for (Index j = 0; j < cols; ++j)
    if (header[j] == options.response_column) response = j;
  if (response < 0) {
    int idx = -1;
    const auto& s = options.response_column;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), idx);
    if (ec == std::errc() && ptr == s.data() + s.size() && idx >= 0 && idx < cols) response = idx;
  }
  if (response < 0)
    throw IoError(path + ": response column '" + options.response_column + "' not found");

  std::vector<std::vector<double>> rows;
  Index row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    if (static_cast<Index>(cells.size()) != cols) {
      std::ostringstream os;
      os << path << ": row " << row_no << " has " << cells.size() << " cells, expected " << cols;
      throw IoError(os.str());
    }
    std::vector<double> values(cols);
    for (Index j = 0; j < cols; ++j) {
      const std::string& c = cells[j];
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
      if (c.empty() || ec != std::errc() || ptr != c.data() + c.size() || !std::isfinite(v)) {
        std::ostringstream os;
        os << path << ": non-numeric cell at row " << row_no << ", column " << (j + 1) << " ('"
           << header[j] << "'): '" << c << "'";
        throw IoError(os.str());
      }
      values[j] = v;
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw IoError(path + ": no data rows");

  const Index n = static_cast<Index>(rows.size());
  Dataset d;
  d.X.resize(n, cols - 1);
  d.y.resize(n);
  for (Index i = 0; i < n; ++i) {
    Index out = 0;
    for (Index j = 0; j < cols; ++j) {
      if (j == response)
        d.y(i) = rows[i][j];
      else
        d.X(i, out++) = rows[i][j];
    }
  }
  if (options.center) d.y.array() -= d.y.mean();
  if (options.center_features) d.X.rowwise() -= d.X.colwise().mean();

  const double spread = d.y.maxCoeff() - d.y.minCoeff();
  if (options.center && spread <= 1e-12 * (1.0 + d.y.cwiseAbs().maxCoeff())) {
    const std::string msg = path + ": response is constant after centering";
    if (warnings)
      warnings->push_back(msg);
    else
      std::cerr << "warning: " << msg << '\n';
  }
  d.validate();
  return d;
}

}  // namespace ssridge
