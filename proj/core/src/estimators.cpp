#include "ssridge/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>

#include "ssridge/errors.hpp"
#include "ssridge/parallel.hpp"
#include "ssridge/rng.hpp"

namespace ssridge {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

MatrixXd gram_rows(const MatrixXd& X, double scale) {
  // scale * X X'
  MatrixXd G = MatrixXd::Zero(X.rows(), X.rows());
  G.selfadjointView<Eigen::Lower>().rankUpdate(X, scale);
  return G.selfadjointView<Eigen::Lower>();
}

MatrixXd gram_cols(const MatrixXd& X, double scale) {
  // scale * X' X
  MatrixXd G = MatrixXd::Zero(X.cols(), X.cols());
  G.selfadjointView<Eigen::Lower>().rankUpdate(X.transpose(), scale);
  return G.selfadjointView<Eigen::Lower>();
}

VectorXd spd_solve(MatrixXd A, const VectorXd& b) {
  Eigen::LLT<MatrixXd> llt(A);
  if (llt.info() != Eigen::Success) {
    // Only reachable through severe cancellation; fall back to LDLT.
    Eigen::LDLT<MatrixXd> ldlt(A);
    return ldlt.solve(b);
  }
  return llt.solve(b);
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

double pinv_tolerance(Index rows, Index cols) {
  return static_cast<double>(std::max(rows, cols)) * kEps;
}

VectorXd fit_ridge(const MatrixXd& X, const VectorXd& y, double lambda) {
  const Index k = X.rows();
  const Index p = X.cols();
  if (k < 1 || p < 1) throw ParameterError("fit_ridge: empty design");
  if (y.size() != k) throw InputError("fit_ridge: response length does not match rows");
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw ParameterError("fit_ridge: lambda must be finite and nonnegative");
  if (!X.allFinite() || !y.allFinite()) throw InputError("fit_ridge: non-finite input");

  const double inv_k = 1.0 / static_cast<double>(k);
  if (lambda == 0.0) {
    Eigen::BDCSVD<MatrixXd> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const VectorXd& s = svd.singularValues();
    const double cut = s.size() ? pinv_tolerance(k, p) * s(0) : 0.0;
    VectorXd coef = svd.matrixU().transpose() * y;
    for (Index i = 0; i < s.size(); ++i) coef(i) = s(i) > cut ? coef(i) / s(i) : 0.0;
    return svd.matrixV() * coef;
  }

  if (p <= k) {
    MatrixXd A = gram_cols(X, inv_k);
    A.diagonal().array() += lambda;
    return spd_solve(std::move(A), X.transpose() * y * inv_k);
  }
  MatrixXd A = gram_rows(X, inv_k);
  A.diagonal().array() += lambda;
  return X.transpose() * spd_solve(std::move(A), y) * inv_k;
}

MatrixXd inverse_sqrt_spd(const MatrixXd& G) {
  if (G.rows() != G.cols()) throw ParameterError("penalty matrix must be square");
  if (!G.isApprox(G.transpose(), 1e-12)) throw ParameterError("penalty matrix is not symmetric");
  Eigen::LLT<MatrixXd> llt(G);
  if (llt.info() != Eigen::Success) throw ParameterError("penalty matrix is not positive definite");
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(G);
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw ParameterError("penalty matrix is not positive definite");
  return es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
         es.eigenvectors().transpose();
}

VectorXd fit_generalized_ridge(const MatrixXd& X, const VectorXd& y, double lambda,
                               const MatrixXd& G) {
  if (G.rows() != X.cols()) throw ParameterError("penalty matrix does not match p");
  const MatrixXd root = inverse_sqrt_spd(G);
  return root * fit_ridge(X * root, y, lambda);
}

std::vector<IndexSet> sample_subsets(Index n, Index k, Index M, std::uint64_t seed) {
  if (n < 1) throw ParameterError("sample_subsets: n must be >= 1");
  if (k < 1 || k > n) throw ParameterError("sample_subsets: need 1 <= k <= n");
  if (M < 1) throw ParameterError("sample_subsets: M must be >= 1");

  std::vector<IndexSet> sets(static_cast<std::size_t>(M));
  std::vector<Index> pool(static_cast<std::size_t>(n));
  for (Index l = 0; l < M; ++l) {
    IndexSet& set = sets[static_cast<std::size_t>(l)];
    if (k == n) {
      set.resize(static_cast<std::size_t>(n));
      std::iota(set.begin(), set.end(), Index{0});
      continue;
    }
    Rng rng = make_rng(seed, {tag::kSubsets, static_cast<std::uint64_t>(l)});
    std::iota(pool.begin(), pool.end(), Index{0});
    // Partial Fisher-Yates: the first k slots form a uniform k-subset.
    for (Index i = 0; i < k; ++i) {
      std::uniform_int_distribution<Index> pick(i, n - 1);
      std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(rng))]);
    }
    set.assign(pool.begin(), pool.begin() + k);
    std::sort(set.begin(), set.end());
  }
  return sets;
}

MatrixXd apply_random_features(const MatrixXd& X, const MatrixXd& F, Activation activation) {
  if (F.cols() != X.cols()) throw ParameterError("feature weights must be d x p");
  MatrixXd Z = X * F.transpose();
  switch (activation) {
    case Activation::identity:
      break;
    case Activation::sigmoid:
      Z = Z.unaryExpr([](double v) { return sigmoid(v); });
      break;
    case Activation::relu:
      Z = Z.cwiseMax(0.0);
      break;
    case Activation::tanh:
      Z = Z.array().tanh().matrix();
      break;
  }
  return Z;
}

MatrixXd gaussian_feature_weights(Index d, Index p, std::uint64_t seed) {
  if (d < 1 || p < 1) throw ParameterError("feature weights need d, p >= 1");
  MatrixXd F = sample_standardized(d, p, FeatureLaw::gaussian,
                                   derive_seed(seed, {tag::kRandomFeatures}));
  return F / std::sqrt(static_cast<double>(p));
}

void KernelSpec::validate() const {
  if (kind == Kind::linear) return;
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ParameterError("kernel gamma must be > 0");
  if (kind == Kind::polynomial && degree < 1) throw ParameterError("kernel degree must be >= 1");
}

MatrixXd kernel_matrix(const KernelSpec& spec, const MatrixXd& A, const MatrixXd& B) {
  spec.validate();
  if (A.cols() != B.cols()) throw ParameterError("kernel inputs have different dimensions");
  switch (spec.kind) {
    case KernelSpec::Kind::linear:
      return A * B.transpose();
    case KernelSpec::Kind::polynomial: {
      MatrixXd K = (spec.gamma * (A * B.transpose())).array() + spec.coef0;
      return K.array().pow(static_cast<double>(spec.degree)).matrix();
    }
    case KernelSpec::Kind::gaussian: {
      MatrixXd D = -2.0 * (A * B.transpose());
      D.colwise() += A.rowwise().squaredNorm();
      D.rowwise() += B.rowwise().squaredNorm().transpose();
      return (-spec.gamma * D.cwiseMax(0.0)).array().exp().matrix();
    }
    case KernelSpec::Kind::laplacian: {
      MatrixXd K(A.rows(), B.rows());
      for (Index j = 0; j < B.rows(); ++j)
        for (Index i = 0; i < A.rows(); ++i)
          K(i, j) = std::exp(-spec.gamma * (A.row(i) - B.row(j)).cwiseAbs().sum());
      return K;
    }
  }
  return {};
}

VectorXd fit_kernel_ridge(const MatrixXd& K, const VectorXd& y, double lambda_scaled) {
  const Index k = K.rows();
  if (k < 1 || K.cols() != k) throw InputError("kernel matrix must be square and nonempty");
  if (y.size() != k) throw InputError("response length does not match kernel matrix");
  if (!K.allFinite() || !y.allFinite()) throw InputError("non-finite kernel input");
  const double scale = std::max(1.0, K.cwiseAbs().maxCoeff());
  if (!((K - K.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * scale))
    throw InputError("kernel matrix is not symmetric");
  if (!(lambda_scaled >= 0.0)) throw ParameterError("kernel penalty must be nonnegative");

  if (lambda_scaled == 0.0) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(K);
    const VectorXd& w = es.eigenvalues();
    const double wmax = w.cwiseAbs().maxCoeff();
    const double cut = pinv_tolerance(k, k) * wmax;
    VectorXd coef = es.eigenvectors().transpose() * y;
    for (Index i = 0; i < k; ++i) coef(i) = std::abs(w(i)) > cut ? coef(i) / w(i) : 0.0;
    return es.eigenvectors() * coef;
  }
  MatrixXd A = K;
  A.diagonal().array() += static_cast<double>(k) * lambda_scaled;
  return spd_solve(std::move(A), y);
}

VectorXd predict_kernel(const VectorXd& alpha, const MatrixXd& K_star) {
  if (K_star.cols() != alpha.size()) throw InputError("kernel block does not match dual vector");
  return K_star * alpha;
}

FeatureMapSpec FeatureMapSpec::random(MatrixXd F, Activation activation) {
  FeatureMapSpec s;
  s.kind = Kind::random_features;
  s.F = std::move(F);
  s.activation = activation;
  return s;
}

FeatureMapSpec FeatureMapSpec::kernel_map(KernelSpec kernel, double p_nominal) {
  FeatureMapSpec s;
  s.kind = Kind::kernel;
  s.kernel = kernel;
  s.p_nominal = p_nominal;
  return s;
}

void FeatureMapSpec::validate(Index p) const {
  switch (kind) {
    case Kind::linear:
      return;
    case Kind::random_features:
      if (F.cols() != p || F.rows() < 1) throw ParameterError("feature weights must be d x p");
      if (!F.allFinite()) throw ParameterError("feature weights must be finite");
      return;
    case Kind::kernel:
      kernel.validate();
      if (!(p_nominal > 0.0)) throw ParameterError("kernel map needs p_nominal > 0");
      return;
  }
}

MatrixXd FeatureMapSpec::transform(const MatrixXd& X) const {
  if (kind == Kind::random_features) return apply_random_features(X, F, activation);
  return X;
}

VectorXd EnsembleFit::predict(const MatrixXd& X) const {
  if (feature_map.kind == FeatureMapSpec::Kind::kernel) {
    if (!support) throw InputError("kernel ensemble has no support points");
    return kernel_matrix(feature_map.kernel, X, *support) * dual_weights;
  }
  return feature_map.transform(X) * beta_bar;
}

EnsembleFit fit_ensemble(const Dataset& data, Index k, Index M, double lambda, std::uint64_t seed,
                         const FeatureMapSpec& feature_map, const EnsembleOptions& options) {
  data.validate();
  feature_map.validate(data.p());
  if (!(lambda >= 0.0)) throw ParameterError("lambda must be nonnegative");

  EnsembleFit fit;
  fit.k = k;
  fit.M = M;
  fit.lambda = lambda;
  fit.seed = seed;
  fit.feature_map = feature_map;
  fit.subsets = sample_subsets(data.n(), k, M, seed);

  const bool is_kernel = feature_map.kind == FeatureMapSpec::Kind::kernel;
  const MatrixXd features = is_kernel ? MatrixXd() : feature_map.transform(data.X);
  const MatrixXd& Z = is_kernel ? data.X : features;

  const std::size_t members = static_cast<std::size_t>(M);
  // With k == n every subset is [n]; one fit stands for all members.
  const std::size_t distinct = (k == data.n()) ? 1 : members;
  std::vector<VectorXd> coef(distinct);

  parallel_for(distinct, options.threads, [&](std::size_t l) {
    const IndexSet& set = fit.subsets[l];
    const MatrixXd Xi = Z(set, Eigen::all);
    const VectorXd yi = data.y(set);
    if (is_kernel) {
      const MatrixXd Ki = kernel_matrix(feature_map.kernel, Xi, Xi);
      coef[l] = fit_kernel_ridge(Ki, yi, kernel_lambda_scaled(lambda, feature_map.p_nominal));
    } else {
      coef[l] = fit_ridge(Xi, yi, lambda);
    }
  });

  const double inv_m = 1.0 / static_cast<double>(M);
  if (is_kernel) {
    fit.dual_weights = VectorXd::Zero(data.n());
    for (std::size_t l = 0; l < members; ++l) {
      const VectorXd& a = coef[distinct == 1 ? 0 : l];
      const IndexSet& set = fit.subsets[l];
      for (std::size_t i = 0; i < set.size(); ++i)
        fit.dual_weights(set[i]) += inv_m * a(static_cast<Index>(i));
    }
    fit.support = std::make_shared<const MatrixXd>(data.X);
  } else {
    fit.beta_bar = VectorXd::Zero(Z.cols());
    for (std::size_t l = 0; l < members; ++l) fit.beta_bar += inv_m * coef[distinct == 1 ? 0 : l];
  }

  if (options.keep_members) {
    std::vector<VectorXd> kept(members);
    for (std::size_t l = 0; l < members; ++l) kept[l] = coef[distinct == 1 ? 0 : l];
    fit.members = std::move(kept);
  }
  return fit;
}

EnsembleFit fit_generalized_ensemble(const Dataset& data, Index k, Index M, double lambda,
                                     std::uint64_t seed, const MatrixXd& G,
                                     const EnsembleOptions& options) {
  data.validate();
  if (G.rows() != data.p()) throw ParameterError("penalty matrix does not match p");
  const MatrixXd root = inverse_sqrt_spd(G);
  Dataset transformed;
  transformed.X = data.X * root;
  transformed.y = data.y;
  EnsembleFit fit = fit_ensemble(transformed, k, M, lambda, seed, FeatureMapSpec::linear(), options);
  fit.beta_bar = root * fit.beta_bar;
  if (fit.members)
    for (auto& b : *fit.members) b = root * b;
  return fit;
}

void write_coefficients_csv(const EnsembleFit& fit, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "beta_bar\n" << std::setprecision(17);
  for (Index i = 0; i < fit.beta_bar.size(); ++i) out << fit.beta_bar(i) << '\n';
}

}  // namespace ssridge
