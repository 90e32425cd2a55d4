#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "msbp/gibbs.h"
#include "msbp/random.h"

namespace msbp {

enum class Component_family { beta, normal, gamma, left_truncated_normal };

// One mixture component.  Normal parameters are (mean, variance); gamma is (shape, rate);
// beta is (alpha, beta); the truncated normal is (mean, variance) restricted to (0, inf).
struct Mixture_component {
  Component_family family;
  double p1;
  double p2;
  double weight;
};

class Scenario {
 public:
  static auto make(int id) -> Scenario;  // ids 1..4; throws Config_error otherwise

  auto id() const -> int { return id_; }
  auto components() const -> std::span<const Mixture_component> { return components_; }
  auto support_lo() const -> double { return lo_; }
  auto support_hi() const -> double { return hi_; }

  auto sample(int n, Rng& rng) const -> std::vector<double>;
  auto density(double x) const -> double;
  auto cdf(double x) const -> double;
  auto mean() const -> double;

  // Evaluation grid spanning the support.
  auto grid(int points = 2001) const -> std::vector<double>;

 private:
  int id_ = 0;
  std::vector<Mixture_component> components_;
  double lo_ = 0.0;
  double hi_ = 1.0;
};

// Distances between two curves tabulated on the same grid.
auto ks_distance(std::span<const double> cdf_true, std::span<const double> cdf_est) -> double;
auto l1_distance(std::span<const double> f_true, std::span<const double> f_est, std::span<const double> grid)
    -> double;
auto l2_distance(std::span<const double> f_true, std::span<const double> f_est, std::span<const double> grid)
    -> double;

struct Curve {
  std::vector<double> density;
  std::vector<double> cdf;
};

// Gaussian kernel estimate with Silverman bandwidth, tabulated on `grid`.
auto kernel_baseline(std::span<const double> samples, std::span<const double> grid) -> Curve;

// msBP posterior mean, centered on a kernel estimate of the same samples, tabulated on `grid`.
auto msbp_estimate(std::span<const double> samples, std::span<const double> grid, const Chain_config& config)
    -> Curve;

struct Metrics_row {
  int scenario;
  int n;
  std::string method;
  double ks;
  double l1;
  double l2;
  double se_ks;
  double se_l1;
  double se_l2;
  int replicates;
};

struct Bench_config {
  std::vector<int> scenarios{1, 2, 3, 4};
  std::vector<int> sample_sizes{25, 50, 100};
  int replicates = 20;
  int grid_points = 2001;
  std::uint64_t seed = 0;
  int workers = 1;
  Chain_config chain;

  auto validate() const -> void;
};

// Seed for one replicate, derived from (master, scenario, n, replicate).
auto replicate_seed(std::uint64_t master, int scenario, int n, int replicate) -> std::uint64_t;

auto run_benchmark(const Bench_config& config) -> std::vector<Metrics_row>;

auto write_metrics_csv(std::span<const Metrics_row> rows, const std::filesystem::path& path) -> void;

}  // namespace msbp
