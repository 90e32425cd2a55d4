#include "msbp/base_measure.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "msbp/csv.h"
#include "msbp/errors.h"
#include "msbp/model.h"

namespace msbp {

auto to_string(Base_kind kind) -> std::string {
  switch (kind) {
    case Base_kind::uniform: return "uniform";
    case Base_kind::kernel_estimate: return "kernel";
    case Base_kind::quantile_table: return "table";
  }
  return "unknown";
}

namespace {

auto interpolate(std::span<const double> xs, std::span<const double> ys, double x) -> double {
  if (x <= xs.front()) { return ys.front(); }
  if (x >= xs.back()) { return ys.back(); }
  auto it = std::upper_bound(xs.begin(), xs.end(), x);
  auto i = static_cast<std::size_t>(it - xs.begin());
  auto t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
  return ys[i - 1] + t * (ys[i] - ys[i - 1]);
}

auto trapezoid(std::span<const double> xs, std::span<const double> ys) -> double {
  auto total = 0.0;
  for (auto i = std::size_t{1}; i < xs.size(); ++i) { total += 0.5 * (ys[i] + ys[i - 1]) * (xs[i] - xs[i - 1]); }
  return total;
}

}  // namespace

auto Base_measure::uniform() -> Base_measure {
  auto base = Base_measure{};
  base.kind_ = Base_kind::uniform;
  base.grid_ = {0.0, 1.0};
  base.cdf_ = {0.0, 1.0};
  base.density_ = {1.0, 1.0};
  base.finalize_cdf();
  return base;
}

auto Base_measure::kernel_estimate(std::span<const double> data, int grid_points) -> Base_measure {
  if (data.empty()) { throw Ingestion_error{"kernel base measure needs at least one observation"}; }
  for (auto x : data) {
    if (!std::isfinite(x)) { throw Ingestion_error{"non-finite value in data"}; }
  }
  if (grid_points < 2) { throw std::domain_error{"base-measure grid needs at least two points"}; }
  auto base = Base_measure{};
  base.kind_ = Base_kind::kernel_estimate;
  base.kde_.emplace(std::vector<double>(data.begin(), data.end()));
  auto bw = base.kde_->bandwidth();
  auto lo = base.kde_->min_sample() - 3.0 * bw;
  auto hi = base.kde_->max_sample() + 3.0 * bw;
  base.grid_.resize(static_cast<std::size_t>(grid_points));
  for (auto i = 0; i < grid_points; ++i) {
    base.grid_[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid_points - 1);
  }
  base.cdf_ = base.kde_->cdf(base.grid_);
  base.density_ = base.kde_->density(base.grid_);
  base.finalize_cdf();
  return base;
}

auto Base_measure::quantile_table(std::vector<double> grid, std::vector<double> cdf, std::vector<double> density)
    -> Base_measure {
  if (grid.size() < 2 || grid.size() != cdf.size() || grid.size() != density.size()) {
    throw std::domain_error{"quantile table needs at least two rows of (x, cdf, density)"};
  }
  for (auto i = std::size_t{0}; i != grid.size(); ++i) {
    if (i > 0 && !(grid[i] > grid[i - 1])) { throw std::domain_error{"quantile table x must be strictly increasing"}; }
    if (i > 0 && cdf[i] < cdf[i - 1]) { throw std::domain_error{"quantile table cdf must be nondecreasing"}; }
    if (!(cdf[i] >= 0.0 && cdf[i] <= 1.0)) { throw std::domain_error{"quantile table cdf outside [0,1]"}; }
    if (!(density[i] >= 0.0) || !std::isfinite(density[i])) {
      throw std::domain_error{"quantile table density must be nonnegative"};
    }
  }
  if (std::abs(trapezoid(grid, density) - 1.0) > 1e-2) {
    throw std::domain_error{"quantile table density does not integrate to one"};
  }
  auto base = Base_measure{};
  base.kind_ = Base_kind::quantile_table;
  base.grid_ = std::move(grid);
  base.cdf_ = std::move(cdf);
  base.density_ = std::move(density);
  base.finalize_cdf();
  return base;
}

// Clamp into [eps, 1-eps] and make strictly increasing so the table inverts by interpolation.
auto Base_measure::finalize_cdf() -> void {
  constexpr auto step = 1e-12;
  for (auto& c : cdf_) { c = clamp_unit(c); }
  for (auto i = std::size_t{1}; i < cdf_.size(); ++i) { cdf_[i] = std::max(cdf_[i], cdf_[i - 1] + step); }
  auto top = 1.0 - k_unit_clamp;
  for (auto i = cdf_.size(); i-- > 0;) {
    cdf_[i] = std::min(cdf_[i], top);
    top = cdf_[i] - step;
  }
}

auto Base_measure::read_csv(const std::filesystem::path& path) -> Base_measure {
  auto table = read_numeric_csv(path);
  auto grid = std::vector<double>{};
  auto cdf = std::vector<double>{};
  auto density = std::vector<double>{};
  for (auto i = std::size_t{0}; i != table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    if (row.size() != 3) { throw Ingestion_error{"quantile table rows need x,cdf,density", table.line_numbers[i]}; }
    grid.push_back(row[0]);
    cdf.push_back(row[1]);
    density.push_back(row[2]);
  }
  try {
    return quantile_table(std::move(grid), std::move(cdf), std::move(density));
  } catch (const std::domain_error& e) {
    throw Ingestion_error{std::string{"invalid quantile table: "} + e.what()};
  }
}

auto Base_measure::write_csv(const std::filesystem::path& path) const -> void {
  auto out = std::ofstream{path};
  if (!out) { throw std::runtime_error{"cannot write " + path.string()}; }
  out << "x,cdf,density\n";
  for (auto i = std::size_t{0}; i != grid_.size(); ++i) {
    out << format_double(grid_[i]) << ',' << format_double(cdf_[i]) << ',' << format_double(density_[i]) << '\n';
  }
}

auto Base_measure::bandwidth() const -> std::optional<double> {
  if (kde_) { return kde_->bandwidth(); }
  return std::nullopt;
}

auto Base_measure::covers(double x) const -> bool { return x >= grid_.front() && x <= grid_.back(); }

auto Base_measure::transform(double x) const -> double {
  switch (kind_) {
    case Base_kind::uniform: return clamp_unit(x);
    case Base_kind::kernel_estimate: return clamp_unit(kde_->cdf(std::clamp(x, grid_.front(), grid_.back())));
    case Base_kind::quantile_table: return interpolate(grid_, cdf_, x);
  }
  return clamp_unit(x);
}

auto Base_measure::inverse_transform(double y) const -> double {
  if (kind_ == Base_kind::uniform) { return clamp_unit(y); }
  auto x = interpolate(cdf_, grid_, y);
  if (kind_ == Base_kind::kernel_estimate) {
    // Newton polish against the exact kernel CDF, kept inside the grid span.
    for (auto iter = 0; iter < 4; ++iter) {
      auto d = kde_->density(x);
      if (!(d > 0.0)) { break; }
      x = std::clamp(x - (kde_->cdf(x) - y) / d, grid_.front(), grid_.back());
    }
  }
  return x;
}

auto Base_measure::base_density(double x) const -> double {
  if (!covers(x)) { return 0.0; }
  switch (kind_) {
    case Base_kind::uniform: return 1.0;
    case Base_kind::kernel_estimate: return kde_->density(x);
    case Base_kind::quantile_table: return interpolate(grid_, density_, x);
  }
  return 0.0;
}

auto fit_base_measure(std::span<const double> data, Base_kind kind) -> Base_measure {
  for (auto x : data) {
    if (!std::isfinite(x)) { throw Ingestion_error{"non-finite value in data"}; }
  }
  switch (kind) {
    case Base_kind::uniform:
      if (data.empty()) { throw Ingestion_error{"empty data"}; }
      return Base_measure::uniform();
    case Base_kind::kernel_estimate: return Base_measure::kernel_estimate(data);
    case Base_kind::quantile_table: break;
  }
  throw std::domain_error{"quantile-table base measures are read from a file, not fitted"};
}

auto density_in_data_space(const Prob_tree& weights, const Base_measure& base, double x) -> double {
  auto g0 = base.base_density(x);
  if (g0 == 0.0) { return 0.0; }
  return density_at(weights, base.transform(x)) * g0;
}

}  // namespace msbp
