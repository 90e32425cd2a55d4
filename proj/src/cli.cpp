#include "msbp/cli.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <ostream>

#include <CLI11.hpp>

#include "msbp/bench.h"
#include "msbp/csv.h"
#include "msbp/errors.h"
#include "msbp/gibbs.h"
#include "msbp/version.h"

namespace msbp {

namespace {

constexpr std::uint64_t k_fit_stream = 1;
constexpr std::uint64_t k_simulate_stream = 3;

auto parse_gamma_pair(const std::string& text, const std::string& flag) -> Gamma_prior {
  auto parts = split_csv_line(text);
  if (parts.size() != 2) { throw Config_error{flag + " expects SHAPE,RATE"}; }
  auto shape = parse_double(parts[0]);
  auto rate = parse_double(parts[1]);
  if (!shape || !rate || !(*shape > 0.0) || !(*rate > 0.0) || !std::isfinite(*shape) || !std::isfinite(*rate)) {
    throw Config_error{flag + " expects two positive numbers"};
  }
  return {*shape, *rate};
}

auto parse_base(const std::string& text, Run_config& config) -> void {
  if (text == "uniform") {
    config.base = Base_kind::uniform;
  } else if (text == "kernel") {
    config.base = Base_kind::kernel_estimate;
  } else if (text.starts_with("table:") && text.size() > 6) {
    config.base = Base_kind::quantile_table;
    config.base_table = text.substr(6);
  } else {
    throw Config_error{"--base expects uniform, kernel or table:PATH"};
  }
}

auto parse_subcommand(std::string_view name) -> std::optional<Subcommand> {
  if (name == "fit") { return Subcommand::fit; }
  if (name == "test") { return Subcommand::test; }
  if (name == "simulate") { return Subcommand::simulate; }
  if (name == "bench") { return Subcommand::bench; }
  return std::nullopt;
}

template <typename T>
auto optional_json(const std::optional<T>& value) -> nlohmann::json {
  return value ? nlohmann::json(*value) : nlohmann::json(nullptr);
}

auto gamma_json(const std::optional<Gamma_prior>& prior) -> nlohmann::json {
  if (!prior) { return nullptr; }
  return {{"shape", prior->shape}, {"rate", prior->rate}};
}

auto write_json(const nlohmann::json& doc, const std::filesystem::path& path) -> void {
  auto out = std::ofstream{path};
  if (!out) { throw std::runtime_error{"cannot write " + path.string()}; }
  out << doc.dump(2) << '\n';
}

auto manifest(const Run_config& config, nlohmann::json seeds) -> nlohmann::json {
  return {{"version", k_version},
          {"subcommand", to_string(config.subcommand)},
          {"config", resolved_config_json(config)},
          {"seeds", std::move(seeds)}};
}

auto chain_config(const Run_config& config, std::uint64_t seed) -> Chain_config {
  auto chain = Chain_config{};
  chain.n_burn = config.n_burn;
  chain.n_iter = config.n_iter;
  chain.smax = config.smax;
  chain.thin = config.thin;
  chain.seed = seed;
  chain.hyper = config.hyperparams();
  chain.grid_size = config.grid;
  return chain;
}

auto run_fit(const Run_config& config, std::ostream& log) -> void {
  auto data = ingest_fit(config.input);
  auto base = config.base == Base_kind::quantile_table ? Base_measure::read_csv(config.base_table)
                                                       : fit_base_measure(data.values, config.base);
  if (config.base == Base_kind::uniform) {
    for (auto x : data.values) {
      if (!(x >= 0.0 && x <= 1.0)) { throw Config_error{"uniform base needs data in [0,1]"}; }
    }
  }
  auto y = std::vector<double>(data.values.size());
  std::transform(data.values.begin(), data.values.end(), y.begin(), [&](double x) { return base.transform(x); });

  auto seed = derive_seed(config.seed, {k_fit_stream});
  auto chain = chain_config(config, seed);
  auto rng = make_rng(seed);
  auto output = run_chain(y, chain, rng);
  auto grid = posterior_mean_density(output, unit_grid(config.grid), base);
  write_density_csv(grid, config.out_dir / "density.csv");

  auto summary = manifest(config, {{"master", config.seed}, {"chain", seed}});
  summary["ingestion"] = {{"rows", data.rows}, {"used", data.values.size()}};
  auto bw = base.bandwidth();
  summary["base_measure"] = {{"kind", to_string(base.kind())}, {"bandwidth", optional_json(bw)}};
  summary["chain"] = chain_summary_json(output);
  write_json(summary, config.out_dir / "summary.json");
  log << "fit: " << data.rows << " rows, " << output.draws.size() << " retained draws\n";
}

auto run_test(const Run_config& config, std::ostream& log) -> void {
  auto ingest = ingest_test(config.input);
  for (const auto& w : ingest.warnings) { log << "warning: " << w << '\n'; }
  auto test = Test_config{};
  test.n_burn = config.n_burn;
  test.n_iter = config.n_iter;
  test.thin = config.thin;
  test.smax_test = config.smax_test;
  if (config.a_fixed) { test.a = *config.a_fixed; }
  if (config.b_fixed) { test.b = *config.b_fixed; }
  test.seed = config.seed;
  test.workers = config.workers;
  auto result = run_multisite_test(ingest.data, test);
  write_site_csv(ingest.data, result, config.out_dir / "sites.csv");

  auto site_seed_json = nlohmann::json::array();
  for (auto m = std::size_t{0}; m != ingest.data.sites.size(); ++m) {
    auto seeds = site_seeds(config.seed, m);
    site_seed_json.push_back({{"site", ingest.data.sites[m].name},
                              {"shared", seeds.shared},
                              {"group0", seeds.group[0]},
                              {"group1", seeds.group[1]}});
  }
  auto summary = manifest(config, {{"master", config.seed}, {"sites", site_seed_json}});
  summary["test_hyperparameters"] = {{"a", test.a}, {"b", test.b}};
  summary["ingestion"] = {{"rows", ingest.rows}, {"clamped", ingest.clamped}, {"warnings", ingest.warnings}};
  summary["site_names"] = [&] {
    auto names = std::vector<std::string>{};
    for (const auto& site : ingest.data.sites) { names.push_back(site.name); }
    return names;
  }();
  summary["result"] = multisite_summary_json(result);
  write_json(summary, config.out_dir / "test.json");
  log << "test: " << ingest.rows << " rows, " << ingest.data.sites.size() << " sites\n";
}

auto run_simulate(const Run_config& config, bool from_prior, std::ostream& log) -> void {
  auto seed = derive_seed(config.seed, {k_simulate_stream});
  auto rng = make_rng(seed);
  auto values = std::vector<double>{};
  auto extra = nlohmann::json::object();
  if (from_prior) {
    auto hyper = config.hyperparams();
    if (hyper.a_prior) { hyper.a = draw_gamma(rng, hyper.a_prior->shape, hyper.a_prior->rate); }
    if (hyper.b_prior) { hyper.b = draw_gamma(rng, hyper.b_prior->shape, hyper.b_prior->rate); }
    auto draw = sample_prior_trees(hyper, config.smax, rng);
    for (auto i = 0; i < config.n; ++i) { values.push_back(sample_observation(draw, rng).y); }
    extra = {{"source", "prior"}, {"a", hyper.a}, {"b", hyper.b}};
  } else {
    auto scenario = Scenario::make(*config.scenario);
    values = scenario.sample(config.n, rng);
    extra = {{"source", "scenario"}, {"scenario", scenario.id()}};
  }
  auto out = std::ofstream{config.out_dir / "samples.csv"};
  if (!out) { throw std::runtime_error{"cannot write samples.csv"}; }
  out << (from_prior ? "y" : "x") << '\n';
  for (auto v : values) { out << format_double(v) << '\n'; }
  auto doc = manifest(config, {{"master", config.seed}, {"simulate", seed}});
  doc["simulation"] = extra;
  write_json(doc, config.out_dir / "simulate.json");
  log << "simulate: " << values.size() << " values\n";
}

auto run_bench(const Run_config& config, std::ostream& log) -> void {
  auto bench = Bench_config{};
  bench.scenarios = config.scenarios;
  bench.sample_sizes = config.sample_sizes;
  bench.replicates = config.replicates;
  bench.grid_points = config.grid;
  bench.seed = config.seed;
  bench.workers = config.workers;
  bench.chain = chain_config(config, 0);
  auto rows = run_benchmark(bench);
  write_metrics_csv(rows, config.out_dir / "metrics.csv");
  auto doc = manifest(config, {{"master", config.seed}, {"replicate_seed_rule", "derive(master, scenario, n, rep)"}});
  doc["rows"] = rows.size();
  write_json(doc, config.out_dir / "manifest.json");
  log << "bench: " << rows.size() << " rows\n";
}

}  // namespace

auto to_string(Subcommand command) -> std::string {
  switch (command) {
    case Subcommand::fit: return "fit";
    case Subcommand::test: return "test";
    case Subcommand::simulate: return "simulate";
    case Subcommand::bench: return "bench";
  }
  return "unknown";
}

auto Run_config::validate() const -> void {
  if (a_fixed.has_value() == a_prior.has_value()) { throw Config_error{"give exactly one of --a-fixed / --a-prior"}; }
  if (b_fixed.has_value() == b_prior.has_value()) { throw Config_error{"give exactly one of --b-fixed / --b-prior"}; }
  if (a_fixed && !(*a_fixed > 0.0)) { throw Config_error{"a must be positive"}; }
  if (b_fixed && !(*b_fixed > 0.0)) { throw Config_error{"b must be positive"}; }
  if (smax < 0 || smax > k_max_depth) { throw Config_error{"--smax must lie in [0, 24]"}; }
  if (smax_test < 1 || smax_test > k_max_depth) { throw Config_error{"--smax-test must lie in [1, 24]"}; }
  if (n_burn < 0 || n_iter < 1 || thin < 1) { throw Config_error{"need burn >= 0, iter >= 1, thin >= 1"}; }
  if (grid < 2) { throw Config_error{"--grid must be at least 2"}; }
  if (workers < 1) { throw Config_error{"--workers must be at least 1"}; }
  if (replicates < 1) { throw Config_error{"--replicates must be at least 1"}; }
  if (n < 1) { throw Config_error{"--n must be at least 1"}; }
  if ((subcommand == Subcommand::fit || subcommand == Subcommand::test) && input.empty()) {
    throw Config_error{"--input is required"};
  }
  if (base == Base_kind::quantile_table && base_table.empty()) { throw Config_error{"table base needs a path"}; }
}

auto Run_config::hyperparams() const -> Hyperparams {
  auto hyper = Hyperparams{};
  hyper.a = a_fixed ? *a_fixed : a_prior->mean();
  hyper.b = b_fixed ? *b_fixed : b_prior->mean();
  if (!a_fixed) { hyper.a_prior = a_prior; }
  if (!b_fixed) { hyper.b_prior = b_prior; }
  return hyper;
}

auto parse_command_line(int argc, const char* const* argv, std::ostream& out) -> std::optional<Run_config> {
  auto usage = std::string{"usage: msbp {fit|test|simulate|bench} [options]   (msbp COMMAND --help)"};
  if (argc < 2) { throw Config_error{usage}; }
  auto name = std::string_view{argv[1]};
  if (name == "--help" || name == "-h") {
    out << usage << '\n';
    return std::nullopt;
  }
  if (name == "--version") {
    out << k_version << '\n';
    return std::nullopt;
  }
  auto command = parse_subcommand(name);
  if (!command) { throw Config_error{"unknown subcommand '" + std::string{name} + "'; " + usage}; }

  auto config = Run_config{};
  config.subcommand = *command;
  auto app = CLI::App{"msbp " + std::string{name}, "msbp " + std::string{name}};
  app.set_config("--config", "", "INI/TOML file with option defaults; flags override it");

  auto input = std::string{};
  auto out_dir = std::string{"."};
  auto seed = std::uint64_t{0};
  auto a_fixed = 0.0;
  auto b_fixed = 0.0;
  auto a_prior = std::string{};
  auto b_prior = std::string{};
  auto base = std::string{"kernel"};
  auto scenario = 0;
  auto from_prior = false;

  app.add_option("--input", input, "input CSV");
  app.add_option("--out", out_dir, "output directory (created if missing)");
  auto* seed_opt = app.add_option("--seed", seed, "master seed (fallback: MSBP_SEED)");
  app.add_option("--smax", config.smax, "truncation depth of the density model")->capture_default_str();
  app.add_option("--smax-test", config.smax_test, "largest tested scale")->capture_default_str();
  app.add_option("--burn", config.n_burn, "burn-in sweeps")->capture_default_str();
  app.add_option("--iter", config.n_iter, "retained sweeps before thinning")->capture_default_str();
  app.add_option("--thin", config.thin, "thinning interval")->capture_default_str();
  auto* a_fixed_opt = app.add_option("--a-fixed", a_fixed, "fix a");
  auto* a_prior_opt = app.add_option("--a-prior", a_prior, "gamma prior on a as SHAPE,RATE (default 5,0.5)");
  auto* b_fixed_opt = app.add_option("--b-fixed", b_fixed, "fix b (default 1)");
  auto* b_prior_opt = app.add_option("--b-prior", b_prior, "gamma prior on b as SHAPE,RATE");
  a_fixed_opt->excludes(a_prior_opt);
  b_fixed_opt->excludes(b_prior_opt);
  app.add_option("--base", base, "base measure: uniform, kernel or table:PATH")->capture_default_str();
  app.add_option("--grid", config.grid, "grid points")->capture_default_str();
  app.add_option("--workers", config.workers, "worker threads")->capture_default_str();
  app.add_option("--replicates", config.replicates, "bench replicates")->capture_default_str();
  app.add_option("--scenarios", config.scenarios, "bench scenario ids")->delimiter(',');
  app.add_option("--sample-sizes", config.sample_sizes, "bench sample sizes")->delimiter(',');
  app.add_option("--scenario", scenario, "simulate: scenario id 1..4");
  app.add_option("--n", config.n, "simulate: number of values")->capture_default_str();
  app.add_flag("--prior", from_prior, "simulate: draw from the msBP prior instead of a scenario");

  try {
    app.parse(argc - 1, argv + 1);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return std::nullopt;
  } catch (const CLI::ParseError& e) {
    throw Config_error{e.what()};
  }

  config.input = input;
  config.out_dir = out_dir;
  if (seed_opt->count() > 0) {
    config.seed = seed;
    config.seed_source = "option";
  } else if (const char* env = std::getenv("MSBP_SEED"); env != nullptr && *env != '\0') {
    auto text = std::string_view{env};
    auto value = std::uint64_t{0};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) { throw Config_error{"MSBP_SEED is not an integer"}; }
    config.seed = value;
    config.seed_source = "env";
  }
  if (a_fixed_opt->count() > 0) {
    config.a_fixed = a_fixed;
    config.a_prior.reset();
  }
  if (a_prior_opt->count() > 0) { config.a_prior = parse_gamma_pair(a_prior, "--a-prior"); }
  if (b_prior_opt->count() > 0) {
    config.b_prior = parse_gamma_pair(b_prior, "--b-prior");
    config.b_fixed.reset();
  }
  if (b_fixed_opt->count() > 0) { config.b_fixed = b_fixed; }
  parse_base(base, config);
  if (scenario != 0) { config.scenario = scenario; }
  if (config.subcommand == Subcommand::simulate) {
    if (from_prior == config.scenario.has_value()) {
      throw Config_error{"simulate needs exactly one of --scenario ID / --prior"};
    }
    if (config.scenario && (*config.scenario < 1 || *config.scenario > 4)) {
      throw Config_error{"--scenario must be 1..4"};
    }
  }
  config.validate();
  return config;
}

auto resolved_config_json(const Run_config& config) -> nlohmann::json {
  return {{"subcommand", to_string(config.subcommand)},
          {"input", config.input.string()},
          {"out", config.out_dir.string()},
          {"seed", config.seed},
          {"seed_source", config.seed_source},
          {"smax", config.smax},
          {"smax_test", config.smax_test},
          {"burn", config.n_burn},
          {"iter", config.n_iter},
          {"thin", config.thin},
          {"a_fixed", optional_json(config.a_fixed)},
          {"a_prior", gamma_json(config.a_prior)},
          {"b_fixed", optional_json(config.b_fixed)},
          {"b_prior", gamma_json(config.b_prior)},
          {"base", to_string(config.base)},
          {"base_table", config.base_table.string()},
          {"grid", config.grid},
          {"workers", config.workers},
          {"replicates", config.replicates},
          {"scenario", optional_json(config.scenario)},
          {"n", config.n},
          {"scenarios", config.scenarios},
          {"sample_sizes", config.sample_sizes}};
}

auto ingest_fit(const std::filesystem::path& path) -> Fit_dataset {
  if (!std::filesystem::exists(path)) { throw Ingestion_error{"input file not found: " + path.string()}; }
  auto table = read_numeric_csv(path);
  if (table.rows.empty()) { throw Ingestion_error{"input has no data rows"}; }
  auto data = Fit_dataset{};
  for (auto i = std::size_t{0}; i != table.rows.size(); ++i) {
    if (table.rows[i].size() != 1) { throw Ingestion_error{"fit input needs exactly one column", table.line_numbers[i]}; }
    data.values.push_back(table.rows[i][0]);
  }
  data.rows = static_cast<int>(table.rows.size());
  return data;
}

auto ingest_test(const std::filesystem::path& path) -> Test_ingest {
  if (!std::filesystem::exists(path)) { throw Ingestion_error{"input file not found: " + path.string()}; }
  auto table = read_numeric_csv(path);
  if (table.rows.empty()) { throw Ingestion_error{"input has no data rows"}; }
  auto columns = table.rows.front().size();
  if (columns < 2) { throw Ingestion_error{"test input needs a group column and at least one site", table.line_numbers[0]}; }

  auto result = Test_ingest{};
  for (auto c = std::size_t{1}; c != columns; ++c) {
    auto name = table.header.size() == columns ? table.header[c] : "site" + std::to_string(c);
    result.data.sites.push_back({name, {}});
  }
  auto seen = std::array<bool, 2>{false, false};
  for (auto i = std::size_t{0}; i != table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    auto line = table.line_numbers[i];
    auto label = row[0];
    if (label != 0.0 && label != 1.0) { throw Ingestion_error{"group label must be 0 or 1", line}; }
    result.data.group.push_back(static_cast<int>(label));
    seen[static_cast<int>(label)] = true;
    for (auto c = std::size_t{1}; c != columns; ++c) {
      auto v = row[c];
      if (v < 0.0 || v > 1.0) { throw Ingestion_error{"site value outside [0,1]", line}; }
      if (v == 0.0 || v == 1.0) {
        v = clamp_unit(v);
        ++result.clamped;
        result.warnings.push_back("line " + std::to_string(line) + ", " + result.data.sites[c - 1].name +
                                  ": boundary value clamped to " + format_double(v));
      }
      result.data.sites[c - 1].values.push_back(v);
    }
  }
  if (!seen[0] || !seen[1]) { throw Config_error{"test input needs subjects in both groups"}; }
  result.rows = static_cast<int>(table.rows.size());
  return result;
}

auto dispatch(const Run_config& config, std::ostream& log) -> void {
  config.validate();
  std::filesystem::create_directories(config.out_dir);
  switch (config.subcommand) {
    case Subcommand::fit: run_fit(config, log); break;
    case Subcommand::test: run_test(config, log); break;
    case Subcommand::simulate: run_simulate(config, !config.scenario.has_value(), log); break;
    case Subcommand::bench: run_bench(config, log); break;
  }
}

auto run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) -> int {
  auto fail = [&](int code, const std::string& kind, const std::string& message, int line = 0) {
    auto doc = nlohmann::json{{"error", kind}, {"message", message}, {"exit_code", code}};
    if (line > 0) { doc["line"] = line; }
    err << doc.dump() << '\n';
    return code;
  };
  try {
    auto config = parse_command_line(argc, argv, out);
    if (!config) { return k_exit_ok; }
    dispatch(*config, out);
    return k_exit_ok;
  } catch (const Config_error& e) {
    return fail(k_exit_config, "config", e.what());
  } catch (const Ingestion_error& e) {
    return fail(k_exit_ingestion, "ingestion", e.what(), e.line());
  } catch (const Numerical_error& e) {
    return fail(k_exit_numerical, "numerical", e.what());
  } catch (const std::domain_error& e) {
    return fail(k_exit_config, "domain", e.what());
  } catch (const std::exception& e) {
    return fail(1, "runtime", e.what());
  }
}

}  // namespace msbp
