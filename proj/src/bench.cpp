#include "msbp/bench.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "msbp/base_measure.h"
#include "msbp/csv.h"
#include "msbp/errors.h"
#include "msbp/kde.h"
#include "msbp/parallel.h"
#include "msbp/special.h"

namespace msbp {

namespace {

auto normal_pdf(double x, double mean, double variance) -> double {
  auto z = (x - mean) / std::sqrt(variance);
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi * variance);
}

auto normal_cdf(double x, double mean, double variance) -> double {
  return 0.5 * std::erfc(-(x - mean) / std::sqrt(2.0 * variance));
}

auto is_integer(double v) -> bool { return v >= 1.0 && v == std::floor(v); }

// Only integer shapes occur in the scenarios; both CDFs then have finite closed forms.
auto beta_cdf(double x, double alpha, double beta) -> double {
  if (x <= 0.0) { return 0.0; }
  if (x >= 1.0) { return 1.0; }
  auto n = static_cast<std::int64_t>(alpha + beta) - 1;
  return binomial_upper_tails(n, x)[static_cast<std::size_t>(alpha) - 1];
}

auto gamma_cdf(double x, double shape, double rate) -> double {
  if (x <= 0.0) { return 0.0; }
  auto lx = rate * x;
  auto term = 1.0;
  auto sum = 1.0;
  for (auto j = 1; j < static_cast<int>(shape); ++j) {
    term *= lx / j;
    sum += term;
  }
  return std::max(0.0, 1.0 - std::exp(-lx) * sum);
}

auto component_density(const Mixture_component& c, double x) -> double {
  switch (c.family) {
    case Component_family::beta:
      return (x > 0.0 && x < 1.0) ? std::exp(log_beta_density(x, c.p1, c.p2)) : 0.0;
    case Component_family::normal:
      return normal_pdf(x, c.p1, c.p2);
    case Component_family::gamma:
      return x > 0.0 ? std::exp(c.p1 * std::log(c.p2) - log_gamma(c.p1) + (c.p1 - 1.0) * std::log(x) - c.p2 * x)
                     : 0.0;
    case Component_family::left_truncated_normal:
      return x > 0.0 ? normal_pdf(x, c.p1, c.p2) / (1.0 - normal_cdf(0.0, c.p1, c.p2)) : 0.0;
  }
  return 0.0;
}

auto component_cdf(const Mixture_component& c, double x) -> double {
  switch (c.family) {
    case Component_family::beta:
      return beta_cdf(x, c.p1, c.p2);
    case Component_family::normal:
      return normal_cdf(x, c.p1, c.p2);
    case Component_family::gamma:
      return gamma_cdf(x, c.p1, c.p2);
    case Component_family::left_truncated_normal: {
      if (x <= 0.0) { return 0.0; }
      auto below = normal_cdf(0.0, c.p1, c.p2);
      return (normal_cdf(x, c.p1, c.p2) - below) / (1.0 - below);
    }
  }
  return 0.0;
}

auto component_mean(const Mixture_component& c) -> double {
  switch (c.family) {
    case Component_family::beta:
      return c.p1 / (c.p1 + c.p2);
    case Component_family::normal:
      return c.p1;
    case Component_family::gamma:
      return c.p1 / c.p2;
    case Component_family::left_truncated_normal: {
      auto sd = std::sqrt(c.p2);
      auto alpha = -c.p1 / sd;
      return c.p1 + sd * normal_pdf(alpha, 0.0, 1.0) / (1.0 - normal_cdf(alpha, 0.0, 1.0));
    }
  }
  return 0.0;
}

auto component_sample(const Mixture_component& c, Rng& rng) -> double {
  switch (c.family) {
    case Component_family::beta:
      return draw_beta(rng, c.p1, c.p2);
    case Component_family::normal:
      return draw_normal(rng, c.p1, std::sqrt(c.p2));
    case Component_family::gamma:
      return draw_gamma(rng, c.p1, c.p2);
    case Component_family::left_truncated_normal:
      for (;;) {
        auto x = draw_normal(rng, c.p1, std::sqrt(c.p2));
        if (x > 0.0) { return x; }
      }
  }
  return 0.0;
}

auto check_aligned(std::size_t a, std::size_t b, std::size_t grid) -> void {
  if (a != b || a != grid) { throw std::domain_error{"curves and grid must have equal length"}; }
  if (grid < 2) { throw std::domain_error{"grid needs at least two points"}; }
}

struct Replicate_metrics {
  std::array<double, 3> msbp;
  std::array<double, 3> kernel;
};

auto metrics_for(const Curve& truth, const Curve& estimate, std::span<const double> grid) -> std::array<double, 3> {
  return {ks_distance(truth.cdf, estimate.cdf), l1_distance(truth.density, estimate.density, grid),
          l2_distance(truth.density, estimate.density, grid)};
}

auto summarize(int scenario, int n, std::string method, std::span<const std::array<double, 3>> values)
    -> Metrics_row {
  auto count = static_cast<double>(values.size());
  auto mean = std::array<double, 3>{};
  auto se = std::array<double, 3>{};
  for (const auto& v : values) {
    for (auto k = 0; k < 3; ++k) { mean[k] += v[k] / count; }
  }
  if (values.size() > 1) {
    for (auto k = 0; k < 3; ++k) {
      auto ss = 0.0;
      for (const auto& v : values) { ss += (v[k] - mean[k]) * (v[k] - mean[k]); }
      se[k] = std::sqrt(ss / (count - 1.0) / count);
    }
  }
  return {scenario, n, std::move(method), mean[0], mean[1], mean[2], se[0], se[1], se[2],
          static_cast<int>(values.size())};
}

}  // namespace

auto Scenario::make(int id) -> Scenario {
  using F = Component_family;
  auto scenario = Scenario{};
  scenario.id_ = id;
  switch (id) {
    case 1:
      scenario.components_ = {{F::beta, 3, 3, 0.6}, {F::beta, 21, 5, 0.4}};
      scenario.lo_ = 0.0;
      scenario.hi_ = 1.0;
      break;
    case 2:
      scenario.components_ = {{F::normal, 0, 4, 0.5}, {F::normal, 2, 1, 0.3}, {F::normal, 1.5, 0.25, 0.2}};
      scenario.lo_ = -8.0;
      scenario.hi_ = 8.0;
      break;
    case 3:
      scenario.components_ = {{F::gamma, 2, 2, 0.9}, {F::left_truncated_normal, 4, 0.4, 0.1}};
      scenario.lo_ = 0.0;
      scenario.hi_ = 8.0;
      break;
    case 4:
      scenario.components_ = {{F::normal, 0, 4, 0.7}, {F::normal, 0.5, 0.01, 0.1}, {F::normal, 1.5, 0.4, 0.2}};
      scenario.lo_ = -8.0;
      scenario.hi_ = 8.0;
      break;
    default:
      throw Config_error{"unknown scenario " + std::to_string(id)};
  }
  for (const auto& c : scenario.components_) {
    if ((c.family == F::beta && (!is_integer(c.p1) || !is_integer(c.p2))) ||
        (c.family == F::gamma && !is_integer(c.p1))) {
      throw std::logic_error{"scenario component needs integer shape parameters"};
    }
  }
  return scenario;
}

auto Scenario::sample(int n, Rng& rng) const -> std::vector<double> {
  if (n < 1) { throw Config_error{"sample size must be at least 1"}; }
  auto out = std::vector<double>(static_cast<std::size_t>(n));
  for (auto& x : out) {
    auto u = draw_uniform(rng);
    auto chosen = components_.size() - 1;
    auto cumulative = 0.0;
    for (auto k = std::size_t{0}; k != components_.size(); ++k) {
      cumulative += components_[k].weight;
      if (u < cumulative) {
        chosen = k;
        break;
      }
    }
    x = component_sample(components_[chosen], rng);
  }
  return out;
}

auto Scenario::density(double x) const -> double {
  auto total = 0.0;
  for (const auto& c : components_) { total += c.weight * component_density(c, x); }
  return total;
}

auto Scenario::cdf(double x) const -> double {
  auto total = 0.0;
  for (const auto& c : components_) { total += c.weight * component_cdf(c, x); }
  return std::clamp(total, 0.0, 1.0);
}

auto Scenario::mean() const -> double {
  auto total = 0.0;
  for (const auto& c : components_) { total += c.weight * component_mean(c); }
  return total;
}

auto Scenario::grid(int points) const -> std::vector<double> {
  if (points < 2) { throw Config_error{"grid needs at least two points"}; }
  auto out = std::vector<double>(static_cast<std::size_t>(points));
  for (auto i = 0; i < points; ++i) { out[i] = lo_ + (hi_ - lo_) * i / (points - 1); }
  return out;
}

auto ks_distance(std::span<const double> cdf_true, std::span<const double> cdf_est) -> double {
  if (cdf_true.size() != cdf_est.size()) { throw std::domain_error{"curves must have equal length"}; }
  auto worst = 0.0;
  for (auto i = std::size_t{0}; i != cdf_true.size(); ++i) { worst = std::max(worst, std::abs(cdf_true[i] - cdf_est[i])); }
  return worst;
}

auto l1_distance(std::span<const double> f_true, std::span<const double> f_est, std::span<const double> grid)
    -> double {
  check_aligned(f_true.size(), f_est.size(), grid.size());
  auto total = 0.0;
  for (auto i = std::size_t{1}; i != grid.size(); ++i) {
    total += 0.5 * (grid[i] - grid[i - 1]) * (std::abs(f_true[i] - f_est[i]) + std::abs(f_true[i - 1] - f_est[i - 1]));
  }
  return total;
}

auto l2_distance(std::span<const double> f_true, std::span<const double> f_est, std::span<const double> grid)
    -> double {
  check_aligned(f_true.size(), f_est.size(), grid.size());
  auto total = 0.0;
  for (auto i = std::size_t{1}; i != grid.size(); ++i) {
    auto d0 = f_true[i - 1] - f_est[i - 1];
    auto d1 = f_true[i] - f_est[i];
    total += 0.5 * (grid[i] - grid[i - 1]) * (d0 * d0 + d1 * d1);
  }
  return total;
}

auto kernel_baseline(std::span<const double> samples, std::span<const double> grid) -> Curve {
  auto kde = Gaussian_kde({samples.begin(), samples.end()});
  return {kde.density(grid), kde.cdf(grid)};
}

auto msbp_estimate(std::span<const double> samples, std::span<const double> grid, const Chain_config& config)
    -> Curve {
  auto base = Base_measure::kernel_estimate(samples);
  auto y = std::vector<double>(samples.size());
  std::transform(samples.begin(), samples.end(), y.begin(), [&](double x) { return base.transform(x); });
  auto rng = make_rng(config.seed);
  auto output = run_chain(y, config, rng);
  auto weights = output.mean_weights();
  auto basis = Bernstein_basis(weights.depth());

  auto curve = Curve{};
  curve.density.reserve(grid.size());
  curve.cdf.reserve(grid.size());
  for (auto x : grid) {
    auto g0 = base.base_density(x);
    auto u = base.transform(x);
    curve.density.push_back(g0 > 0.0 ? density_at(weights, basis, u) * g0 : 0.0);
    curve.cdf.push_back(cdf_at(weights, u));
  }
  return curve;
}

auto Bench_config::validate() const -> void {
  if (scenarios.empty() || sample_sizes.empty()) { throw Config_error{"bench needs scenarios and sample sizes"}; }
  for (auto id : scenarios) {
    if (id < 1 || id > 4) { throw Config_error{"unknown scenario " + std::to_string(id)}; }
  }
  for (auto n : sample_sizes) {
    if (n < 1) { throw Config_error{"sample sizes must be positive"}; }
  }
  if (replicates < 1) { throw Config_error{"replicates must be at least 1"}; }
  if (grid_points < 1001) { throw Config_error{"evaluation grid needs at least 1001 points"}; }
  if (workers < 1) { throw Config_error{"workers must be at least 1"}; }
  chain.validate();
}

auto replicate_seed(std::uint64_t master, int scenario, int n, int replicate) -> std::uint64_t {
  return derive_seed(master, {static_cast<std::uint64_t>(scenario), static_cast<std::uint64_t>(n),
                              static_cast<std::uint64_t>(replicate)});
}

auto run_benchmark(const Bench_config& config) -> std::vector<Metrics_row> {
  config.validate();
  struct Task {
    int scenario;
    int n;
    int replicate;
  };
  auto tasks = std::vector<Task>{};
  for (auto id : config.scenarios) {
    for (auto n : config.sample_sizes) {
      for (auto r = 0; r < config.replicates; ++r) { tasks.push_back({id, n, r}); }
    }
  }

  auto results = std::vector<Replicate_metrics>(tasks.size());
  parallel_for(tasks.size(), config.workers, [&](std::size_t t) {
    auto task = tasks[t];
    auto scenario = Scenario::make(task.scenario);
    auto grid = scenario.grid(config.grid_points);
    auto truth = Curve{};
    for (auto x : grid) {
      truth.density.push_back(scenario.density(x));
      truth.cdf.push_back(scenario.cdf(x));
    }
    auto seed = replicate_seed(config.seed, task.scenario, task.n, task.replicate);
    auto rng = make_rng(seed);
    auto samples = scenario.sample(task.n, rng);
    auto chain = config.chain;
    chain.seed = derive_seed(seed, {1});
    results[t] = {metrics_for(truth, msbp_estimate(samples, grid, chain), grid),
                  metrics_for(truth, kernel_baseline(samples, grid), grid)};
  });

  auto rows = std::vector<Metrics_row>{};
  auto t = std::size_t{0};
  for (auto id : config.scenarios) {
    for (auto n : config.sample_sizes) {
      auto msbp = std::vector<std::array<double, 3>>{};
      auto kernel = std::vector<std::array<double, 3>>{};
      for (auto r = 0; r < config.replicates; ++r, ++t) {
        msbp.push_back(results[t].msbp);
        kernel.push_back(results[t].kernel);
      }
      rows.push_back(summarize(id, n, "msbp", msbp));
      rows.push_back(summarize(id, n, "kernel", kernel));
    }
  }
  return rows;
}

auto write_metrics_csv(std::span<const Metrics_row> rows, const std::filesystem::path& path) -> void {
  auto out = std::ofstream{path};
  if (!out) { throw std::runtime_error{"cannot write " + path.string()}; }
  out << "scenario,n,method,ks,l1,l2,se_ks,se_l1,se_l2\n";
  for (const auto& row : rows) {
    out << row.scenario << ',' << row.n << ',' << row.method << ',' << format_double(row.ks) << ','
        << format_double(row.l1) << ',' << format_double(row.l2) << ',' << format_double(row.se_ks) << ','
        << format_double(row.se_l1) << ',' << format_double(row.se_l2) << '\n';
  }
}

}  // namespace msbp
