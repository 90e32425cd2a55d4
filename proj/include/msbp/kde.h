#pragma once

#include <span>
#include <vector>

namespace msbp {

// Rule-of-thumb bandwidth 0.9 min(sd, IQR/1.34) n^(-1/5), with the usual fallbacks when the
// spread estimate is zero.
auto silverman_bandwidth(std::span<const double> samples) -> double;

class Gaussian_kde {
 public:
  explicit Gaussian_kde(std::vector<double> samples);
  Gaussian_kde(std::vector<double> samples, double bandwidth);

  auto bandwidth() const -> double { return bandwidth_; }
  auto samples() const -> std::span<const double> { return samples_; }
  auto min_sample() const -> double { return samples_.front(); }
  auto max_sample() const -> double { return samples_.back(); }

  auto density(double x) const -> double;
  auto cdf(double x) const -> double;

  auto density(std::span<const double> xs) const -> std::vector<double>;
  auto cdf(std::span<const double> xs) const -> std::vector<double>;

 private:
  std::vector<double> samples_;  // sorted
  double bandwidth_;
};

}  // namespace msbp
