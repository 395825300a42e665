#include "config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <toml.hpp>

#include "ssridge/rng.hpp"
#include "ssridge/theory.hpp"

namespace ssridge::cli {

namespace {

using Keys = std::set<std::string>;

void reject_unknown(const toml::table& t, const Keys& known, const std::string& where) {
  for (const auto& [key, node] : t) {
    (void)node;
    if (!known.count(std::string(key.str())))
      throw ConfigError("unknown config key '" + where + std::string(key.str()) + "'");
  }
}

template <typename T>
void read(const toml::table& t, const std::string& key, T& out, const std::string& where) {
  const toml::node* node = t.get(key);
  if (!node) return;
  if constexpr (std::is_same_v<T, double>) {
    if (auto v = node->value<double>()) {
      out = *v;
      return;
    }
  } else if constexpr (std::is_same_v<T, bool>) {
    if (auto v = node->value_exact<bool>()) {
      out = *v;
      return;
    }
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (auto v = node->value_exact<std::string>()) {
      out = *v;
      return;
    }
  } else {
    if (auto v = node->value_exact<std::int64_t>()) {
      if (*v < 0) throw ConfigError("config key '" + where + key + "' must be >= 0");
      out = static_cast<T>(*v);
      return;
    }
  }
  throw ConfigError("config key '" + where + key + "' has the wrong type");
}

template <typename T>
void read_list(const toml::table& t, const std::string& key, std::vector<T>& out,
               const std::string& where) {
  const toml::node* node = t.get(key);
  if (!node) return;
  const toml::array* arr = node->as_array();
  if (!arr) throw ConfigError("config key '" + where + key + "' must be an array");
  out.clear();
  for (const toml::node& item : *arr) {
    std::optional<T> v;
    if constexpr (std::is_same_v<T, double>)
      v = item.value<double>();
    else
      v = item.value_exact<T>();
    if (!v) throw ConfigError("config key '" + where + key + "' has an element of the wrong type");
    out.push_back(*v);
  }
}

const toml::table* section(const toml::table& root, const std::string& name) {
  const toml::node* node = root.get(name);
  if (!node) return nullptr;
  if (!node->is_table()) throw ConfigError("config key '" + name + "' must be a table");
  return node->as_table();
}

}  // namespace

void ExperimentConfig::validate() const {
  static const Keys sources = {"m_ar1", "isotropic", "csv"};
  if (!sources.count(data.source))
    throw ConfigError("data.source must be one of m_ar1, isotropic, csv");
  if (data.source == "csv") {
    if (data.csv_path.empty()) throw ConfigError("data.csv_path is required for a csv source");
    if (!(data.test_fraction > 0.0 && data.test_fraction < 1.0))
      throw ConfigError("data.test_fraction must lie in (0, 1)");
  } else {
    if (data.n < 2) throw ConfigError("data.n must be >= 2");
    if (data.p < 1) throw ConfigError("data.p must be >= 1");
    if (data.source == "m_ar1" && !(data.rho > 0.0 && data.rho < 1.0))
      throw ConfigError("data.rho must lie in (0, 1)");
  }
  if (grid.lambda_count < 1 || grid.psi_count < 1) throw ConfigError("grid counts must be >= 1");
  if (!(grid.lambda_min > 0.0) || !(grid.lambda_max >= grid.lambda_min))
    throw ConfigError("grid.lambda_min/lambda_max must satisfy 0 < min <= max");
  if (!(grid.psi_min >= 0.0) || !(grid.psi_max > 0.0))
    throw ConfigError("grid.psi_min must be >= 0 and grid.psi_max > 0");
  if (!(grid.psi_guard >= 0.0)) throw ConfigError("grid.psi_guard must be >= 0");
  static const Keys kinds = {"estimation", "training", "in_sample", "prediction", "ood"};
  if (risks.kinds.empty()) throw ConfigError("risks.kinds must not be empty");
  for (const std::string& k : risks.kinds)
    if (!kinds.count(k)) throw ConfigError("risks.kinds: unknown risk kind '" + k + "'");
  if (!(risks.ood_rho > 0.0 && risks.ood_rho < 1.0)) throw ConfigError("risks.ood_rho must lie in (0, 1)");
  if (path.points < 1) throw ConfigError("path.points must be >= 1");
  if (path.kind != "data" && path.kind != "population")
    throw ConfigError("path.kind must be 'data' or 'population'");
  for (double v : path.psi_bar)
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("path.psi_bar entries must be finite and > 0");
  for (double v : path.lambda_bar)
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("path.lambda_bar entries must be finite and >= 0");
  static const Keys projections = {"uniform", "gaussian", "t"};
  for (const std::string& k : path.projections)
    if (!projections.count(k)) throw ConfigError("path.projections: unknown projection '" + k + "'");
  if (check.mv_matrices < 1) throw ConfigError("check.mv_matrices must be >= 1");
  if (M < 1) throw ConfigError("M must be >= 1");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (out.empty()) throw ConfigError("out must not be empty");
}

ExperimentConfig parse_config(const std::string& toml_text, const std::string& source_name) {
  if (std::all_of(toml_text.begin(), toml_text.end(), [](unsigned char c) { return std::isspace(c); }))
    throw ConfigError("config file '" + source_name + "' is empty");
  toml::table root;
  try {
    root = toml::parse(toml_text, source_name);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << "cannot parse '" << source_name << "': " << e.description() << " at line "
       << e.source().begin.line;
    throw ConfigError(os.str());
  }
  if (root.empty()) throw ConfigError("config file '" + source_name + "' has no settings");

  ExperimentConfig c;
  reject_unknown(root, {"data", "grid", "risks", "path", "check", "M", "seed", "threads", "out"}, "");
  read(root, "M", c.M, "");
  read(root, "seed", c.seed, "");
  read(root, "threads", c.threads, "");
  read(root, "out", c.out, "");

  if (const toml::table* t = section(root, "data")) {
    reject_unknown(*t, {"source", "n", "p", "rho", "csv_path", "response", "center_features",
                        "test_fraction"}, "data.");
    read(*t, "source", c.data.source, "data.");
    read(*t, "n", c.data.n, "data.");
    read(*t, "p", c.data.p, "data.");
    read(*t, "rho", c.data.rho, "data.");
    read(*t, "csv_path", c.data.csv_path, "data.");
    read(*t, "response", c.data.response, "data.");
    read(*t, "center_features", c.data.center_features, "data.");
    read(*t, "test_fraction", c.data.test_fraction, "data.");
  }
  if (const toml::table* t = section(root, "grid")) {
    reject_unknown(*t, {"lambda_min", "lambda_max", "lambda_count", "include_zero_lambda", "psi_min",
                        "psi_max", "psi_count", "psi_guard"}, "grid.");
    read(*t, "lambda_min", c.grid.lambda_min, "grid.");
    read(*t, "lambda_max", c.grid.lambda_max, "grid.");
    read(*t, "lambda_count", c.grid.lambda_count, "grid.");
    read(*t, "include_zero_lambda", c.grid.include_zero_lambda, "grid.");
    read(*t, "psi_min", c.grid.psi_min, "grid.");
    read(*t, "psi_max", c.grid.psi_max, "grid.");
    read(*t, "psi_count", c.grid.psi_count, "grid.");
    read(*t, "psi_guard", c.grid.psi_guard, "grid.");
  }
  if (const toml::table* t = section(root, "risks")) {
    reject_unknown(*t, {"kinds", "ood_rho"}, "risks.");
    read_list(*t, "kinds", c.risks.kinds, "risks.");
    read(*t, "ood_rho", c.risks.ood_rho, "risks.");
  }
  if (const toml::table* t = section(root, "path")) {
    reject_unknown(*t, {"psi_bar", "lambda_bar", "points", "kind", "projections"}, "path.");
    read_list(*t, "psi_bar", c.path.psi_bar, "path.");
    read_list(*t, "lambda_bar", c.path.lambda_bar, "path.");
    read(*t, "points", c.path.points, "path.");
    read(*t, "kind", c.path.kind, "path.");
    read_list(*t, "projections", c.path.projections, "path.");
  }
  if (const toml::table* t = section(root, "check")) {
    reject_unknown(*t, {"inject_wrong_sign", "mv_matrices"}, "check.");
    read(*t, "inject_wrong_sign", c.check.inject_wrong_sign, "check.");
    read(*t, "mv_matrices", c.check.mv_matrices, "check.");
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

LoadedData load_data(const ExperimentConfig& config) {
  const DataConfig& d = config.data;
  LoadedData out;
  if (d.source == "m_ar1") {
    out.model.emplace(NonlinearModel::m_ar1(d.p, d.rho));
    out.train = out.model->sample(d.n, config.seed);
  } else if (d.source == "isotropic") {
    out.model.emplace(NonlinearModel::isotropic_gaussian(d.p));
    out.train = out.model->sample(d.n, config.seed);
  } else {
    CsvOptions opts;
    opts.response_column = d.response;
    opts.center_features = d.center_features;
    Dataset all = load_csv(d.csv_path, opts);
    const Index n = all.n();
    const Index n_test = static_cast<Index>(std::floor(d.test_fraction * static_cast<double>(n)));
    if (n_test < 1 || n - n_test < 2)
      throw ConfigError("data.test_fraction leaves an empty train or test split");
    std::vector<Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Index{0});
    Rng rng = make_rng(config.seed, {tag::kTestSet});
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<Index> test_rows(perm.begin(), perm.begin() + n_test);
    std::vector<Index> train_rows(perm.begin() + n_test, perm.end());
    std::sort(test_rows.begin(), test_rows.end());
    std::sort(train_rows.begin(), train_rows.end());
    out.train.X = all.X(train_rows, Eigen::all);
    out.train.y = all.y(train_rows);
    Dataset test;
    test.X = all.X(test_rows, Eigen::all);
    test.y = all.y(test_rows);
    out.test = std::move(test);
  }
  return out;
}

std::vector<double> lambda_grid(const GridConfig& g) {
  std::vector<double> grid;
  if (g.include_zero_lambda) grid.push_back(0.0);
  for (double v : log_grid(g.lambda_min, g.lambda_max, g.lambda_count)) grid.push_back(v);
  return grid;
}

std::vector<double> psi_grid(const GridConfig& g, double phi) {
  const double lo = g.psi_min > 0.0 ? std::max(g.psi_min, phi) : phi;
  if (!(g.psi_max >= lo)) throw ConfigError("grid.psi_max is below the smallest admissible psi");
  std::vector<double> grid;
  for (double v : log_grid(lo, g.psi_max, g.psi_count))
    if (std::abs(v - 1.0) >= g.psi_guard) grid.push_back(v);
  if (grid.empty()) throw ConfigError("psi grid is empty after removing the guard band around 1");
  return grid;
}

}  // namespace ssridge::cli
