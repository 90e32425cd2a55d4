#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "msbp/base_measure.h"
#include "msbp/model.h"
#include "msbp/multiscale_test.h"

namespace msbp {

enum class Subcommand { fit, test, simulate, bench };

auto to_string(Subcommand command) -> std::string;

inline constexpr int k_exit_ok = 0;
inline constexpr int k_exit_config = 2;
inline constexpr int k_exit_ingestion = 3;
inline constexpr int k_exit_numerical = 4;

struct Run_config {
  Subcommand subcommand = Subcommand::fit;
  std::filesystem::path input;
  std::filesystem::path out_dir = ".";
  std::uint64_t seed = 0;
  std::string seed_source = "default";  // flag, env, config or default
  int smax = 6;
  int smax_test = 4;
  int n_burn = 1000;
  int n_iter = 2000;
  int thin = 1;
  // Exactly one of fixed value / gamma prior per hyperparameter.
  std::optional<double> a_fixed;
  std::optional<Gamma_prior> a_prior = Gamma_prior{5.0, 0.5};
  std::optional<double> b_fixed = 1.0;
  std::optional<Gamma_prior> b_prior;
  Base_kind base = Base_kind::kernel_estimate;
  std::filesystem::path base_table;
  int grid = 1001;
  int workers = 1;
  int replicates = 20;
  // simulate
  std::optional<int> scenario;
  int n = 100;
  // bench
  std::vector<int> scenarios{1, 2, 3, 4};
  std::vector<int> sample_sizes{25, 50, 100};

  auto validate() const -> void;  // throws Config_error
  auto hyperparams() const -> Hyperparams;
};

// Parses argv (argv[1] is the subcommand).  A --config file (INI/TOML) supplies defaults that
// explicit flags override; MSBP_SEED is the seed fallback.  Throws Config_error.
// Returns nullopt after printing help.
auto parse_command_line(int argc, const char* const* argv, std::ostream& out) -> std::optional<Run_config>;

auto resolved_config_json(const Run_config& config) -> nlohmann::json;

struct Fit_dataset {
  std::vector<double> values;
  int rows = 0;
};

// One column of finite reals, optional header.
auto ingest_fit(const std::filesystem::path& path) -> Fit_dataset;

struct Test_ingest {
  Test_dataset data;
  int rows = 0;
  int clamped = 0;
  std::vector<std::string> warnings;
};

// Group label 0/1 then one column per site with values in [0,1]; exact 0/1 are clamped to the
// open interval with a warning.
auto ingest_test(const std::filesystem::path& path) -> Test_ingest;

// Runs a validated configuration; writes artifacts into out_dir.  Throws on failure.
auto dispatch(const Run_config& config, std::ostream& log) -> void;

// Full front end: parse, dispatch, map errors to exit codes with a JSON error line on `err`.
auto run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) -> int;

}  // namespace msbp
