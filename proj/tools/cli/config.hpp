#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssridge/datagen.hpp"
#include "ssridge/datapath.hpp"

namespace ssridge::cli {

// Invalid or missing configuration; maps to the usage exit code.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DataConfig {
  std::string source = "m_ar1";  // m_ar1 | isotropic | csv
  Index n = 2500;
  Index p = 250;
  double rho = 0.5;
  std::string csv_path;
  std::string response = "y";
  bool center_features = false;
  double test_fraction = 0.2;  // csv only: held-out rows for prediction risk
};

struct GridConfig {
  double lambda_min = 1e-3;
  double lambda_max = 1e2;
  int lambda_count = 20;
  bool include_zero_lambda = false;
  double psi_min = 0.0;  // 0 means phi = p / n
  double psi_max = 1e2;
  int psi_count = 20;
  double psi_guard = 0.05;
};

struct RiskConfig {
  std::vector<std::string> kinds = {"estimation", "training", "prediction", "ood"};
  double ood_rho = 0.25;
};

struct PathConfig {
  std::vector<double> psi_bar = {2.0, 4.0};
  std::vector<double> lambda_bar;
  int points = 5;
  std::string kind = "data";  // data | population
  std::vector<std::string> projections = {"uniform", "gaussian", "t"};
};

struct CheckConfig {
  bool inject_wrong_sign = false;
  int mv_matrices = 20;
};

struct ExperimentConfig {
  DataConfig data;
  GridConfig grid;
  RiskConfig risks;
  PathConfig path;
  CheckConfig check;
  Index M = 20;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string out = "out";

  /// Field-level checks that do not need the data. Throws ConfigError.
  void validate() const;
};

/// Parses a TOML file. An empty file is rejected. Unknown keys are errors so
/// typos do not silently fall back to defaults.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& toml_text, const std::string& source_name);

/// Training data plus, for synthetic sources, the model that produced it.
struct LoadedData {
  Dataset train;
  std::optional<NonlinearModel> model;
  std::optional<Dataset> test;  // csv: held-out split
};

LoadedData load_data(const ExperimentConfig& config);

/// lambda grid (with 0 first when requested) and psi grid with the guard band
/// around 1 removed.
std::vector<double> lambda_grid(const GridConfig& g);
std::vector<double> psi_grid(const GridConfig& g, double phi);

}  // namespace ssridge::cli
