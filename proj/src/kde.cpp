#include "msbp/kde.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace msbp {

namespace {

// Kernel mass beyond this many bandwidths is below double resolution.
constexpr double k_cutoff = 8.5;

auto quantile_sorted(std::span<const double> sorted, double p) -> double {
  auto pos = p * static_cast<double>(sorted.size() - 1);
  auto lo = static_cast<std::size_t>(std::floor(pos));
  auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

auto silverman_bandwidth(std::span<const double> samples) -> double {
  if (samples.empty()) { throw std::domain_error{"bandwidth of an empty sample"}; }
  auto sorted = std::vector<double>(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  auto n = static_cast<double>(sorted.size());

  auto sd = 0.0;
  if (sorted.size() > 1) {
    auto mean = 0.0;
    for (auto x : sorted) { mean += x; }
    mean /= n;
    auto ss = 0.0;
    for (auto x : sorted) { ss += (x - mean) * (x - mean); }
    sd = std::sqrt(ss / (n - 1.0));
  }
  auto iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
  auto spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) { spread = sd; }
  if (!(spread > 0.0)) { spread = std::abs(sorted.front()); }
  if (!(spread > 0.0)) { spread = 1.0; }
  return 0.9 * spread * std::pow(n, -0.2);
}

Gaussian_kde::Gaussian_kde(std::vector<double> samples) : Gaussian_kde(samples, silverman_bandwidth(samples)) {}

Gaussian_kde::Gaussian_kde(std::vector<double> samples, double bandwidth)
    : samples_{std::move(samples)}, bandwidth_{bandwidth} {
  if (samples_.empty()) { throw std::domain_error{"kernel estimate of an empty sample"}; }
  if (!(bandwidth_ > 0.0)) { throw std::domain_error{"kernel bandwidth must be positive"}; }
  for (auto x : samples_) {
    if (!std::isfinite(x)) { throw std::domain_error{"non-finite sample in kernel estimate"}; }
  }
  std::sort(samples_.begin(), samples_.end());
}

auto Gaussian_kde::density(double x) const -> double {
  auto lo = std::lower_bound(samples_.begin(), samples_.end(), x - k_cutoff * bandwidth_);
  auto hi = std::upper_bound(lo, samples_.end(), x + k_cutoff * bandwidth_);
  auto total = 0.0;
  for (auto it = lo; it != hi; ++it) {
    auto z = (x - *it) / bandwidth_;
    total += std::exp(-0.5 * z * z);
  }
  return total / (static_cast<double>(samples_.size()) * bandwidth_ * std::sqrt(2.0 * std::numbers::pi));
}

auto Gaussian_kde::cdf(double x) const -> double {
  auto lo = std::lower_bound(samples_.begin(), samples_.end(), x - k_cutoff * bandwidth_);
  auto hi = std::upper_bound(lo, samples_.end(), x + k_cutoff * bandwidth_);
  auto total = static_cast<double>(lo - samples_.begin());
  for (auto it = lo; it != hi; ++it) {
    total += 0.5 * std::erfc(-(x - *it) / (bandwidth_ * std::numbers::sqrt2));
  }
  return total / static_cast<double>(samples_.size());
}

auto Gaussian_kde::density(std::span<const double> xs) const -> std::vector<double> {
  auto out = std::vector<double>(xs.size());
  std::transform(xs.begin(), xs.end(), out.begin(), [this](double x) { return density(x); });
  return out;
}

auto Gaussian_kde::cdf(std::span<const double> xs) const -> std::vector<double> {
  auto out = std::vector<double>(xs.size());
  std::transform(xs.begin(), xs.end(), out.begin(), [this](double x) { return cdf(x); });
  return out;
}

}  // namespace msbp
