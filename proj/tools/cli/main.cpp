#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"
#include "config.hpp"
#include "ssridge/errors.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kNumerical = 2;
constexpr int kCheckFailed = 3;

}  // namespace

int main(int argc, char** argv) {
  using namespace ssridge;

  CLI::App app{"Subsample-ensemble ridge: sweeps, equivalence paths and invariant checks"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::string> out;
  app.add_option("--config", config_path, "TOML experiment config (defaults when omitted)");
  app.add_option("--seed", seed, "Override the config seed");
  app.add_option("--threads", threads, "Worker threads (results do not depend on this)")
      ->check(CLI::PositiveNumber);
  app.add_option("--out", out, "Output directory");

  CLI::App* sweep = app.add_subcommand("sweep", "Ensemble risks over a (lambda, psi) grid");
  CLI::App* path = app.add_subcommand("path", "Functionals along equivalence paths");
  CLI::App* check = app.add_subcommand("check", "Run the invariant suite");
  for (CLI::App* sub : {sweep, path, check}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    cli::ExperimentConfig config;
    if (app.count("--config")) config = cli::load_config(config_path);
    if (seed) config.seed = *seed;
    if (threads) config.threads = *threads;
    if (out) config.out = *out;
    config.validate();

    if (sweep->parsed()) {
      std::cout << cli::cmd_sweep(config) << '\n';
    } else if (path->parsed()) {
      std::cout << cli::cmd_path(config) << '\n';
    } else {
      const auto results = cli::cmd_check(config, std::cout);
      for (const auto& r : results)
        if (!r.passed) {
          std::cerr << "check failed: " << r.name << '\n';
          return kCheckFailed;
        }
    }
    return kOk;
  } catch (const cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const ParameterError& e) {
    std::cerr << "parameter error: " << e.what() << '\n';
    return kUsage;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kUsage;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  }
}
