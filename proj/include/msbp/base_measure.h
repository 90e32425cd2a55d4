#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "msbp/kde.h"
#include "msbp/tree.h"

namespace msbp {

inline constexpr double k_unit_clamp = 1e-6;

inline auto clamp_unit(double y) -> double {
  return y < k_unit_clamp ? k_unit_clamp : (y > 1.0 - k_unit_clamp ? 1.0 - k_unit_clamp : y);
}

enum class Base_kind { uniform, kernel_estimate, quantile_table };

auto to_string(Base_kind kind) -> std::string;

// Prior guess g0 for the data density.  Data x maps to y = G0(x) in (0,1); the msBP prior on
// the density of y is centered on the uniform, so the implied prior on the data density is
// centered on g0.
class Base_measure {
 public:
  static auto uniform() -> Base_measure;
  static auto kernel_estimate(std::span<const double> data, int grid_points = 512) -> Base_measure;
  // Grid must be strictly increasing, cdf nondecreasing, density nonnegative.
  static auto quantile_table(std::vector<double> grid, std::vector<double> cdf, std::vector<double> density)
      -> Base_measure;

  static auto read_csv(const std::filesystem::path& path) -> Base_measure;
  auto write_csv(const std::filesystem::path& path) const -> void;

  auto kind() const -> Base_kind { return kind_; }
  auto grid() const -> std::span<const double> { return grid_; }
  auto cdf_values() const -> std::span<const double> { return cdf_; }
  auto density_values() const -> std::span<const double> { return density_; }
  auto bandwidth() const -> std::optional<double>;

  // Whether x lies inside the grid span.  Outside it, transform clamps and data-space density is 0.
  auto covers(double x) const -> bool;

  // G0(x), clamped to [eps, 1 - eps].
  auto transform(double x) const -> double;
  auto inverse_transform(double y) const -> double;
  // g0(x); zero outside the grid span.
  auto base_density(double x) const -> double;

 private:
  Base_measure() = default;
  auto finalize_cdf() -> void;

  Base_kind kind_ = Base_kind::uniform;
  std::vector<double> grid_;
  std::vector<double> cdf_;
  std::vector<double> density_;
  std::optional<Gaussian_kde> kde_;
};

auto fit_base_measure(std::span<const double> data, Base_kind kind) -> Base_measure;

// g(x) = f(G0(x)) g0(x).
auto density_in_data_space(const Prob_tree& weights, const Base_measure& base, double x) -> double;

}  // namespace msbp
