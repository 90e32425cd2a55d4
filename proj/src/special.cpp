#include "msbp/special.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace msbp {

auto log_gamma(double x) -> double {
  auto sign = 0;
  return ::lgamma_r(x, &sign);
}

auto log_beta_function(double p, double q) -> double { return log_gamma(p) + log_gamma(q) - log_gamma(p + q); }

auto log_beta_density(double y, double alpha, double beta) -> double {
  return (alpha - 1.0) * std::log(y) + (beta - 1.0) * std::log1p(-y) - log_beta_function(alpha, beta);
}

auto log_sum_exp(std::span<const double> values) -> double {
  constexpr auto neg_inf = -std::numeric_limits<double>::infinity();
  if (values.empty()) { return neg_inf; }
  auto peak = *std::max_element(values.begin(), values.end());
  if (peak == neg_inf) { return neg_inf; }
  auto total = 0.0;
  for (auto v : values) { total += std::exp(v - peak); }
  return peak + std::log(total);
}

auto binomial_upper_tails(std::int64_t n, double y) -> std::vector<double> {
  if (n < 1) { throw std::domain_error{"binomial size must be positive"}; }
  auto tails = std::vector<double>(static_cast<std::size_t>(n), 0.0);
  if (y <= 0.0) { return tails; }
  if (y >= 1.0) {
    std::fill(tails.begin(), tails.end(), 1.0);
    return tails;
  }
  auto log_y = std::log(y);
  auto log_1my = std::log1p(-y);
  auto log_n_fact = log_gamma(static_cast<double>(n) + 1.0);
  // Summing the pmf from k = n downward keeps every partial sum accurate in the upper tail.
  auto upper = 0.0;
  for (auto k = n; k >= 1; --k) {
    auto kd = static_cast<double>(k);
    auto log_pmf = log_n_fact - log_gamma(kd + 1.0) - log_gamma(static_cast<double>(n - k) + 1.0) +
                   kd * log_y + static_cast<double>(n - k) * log_1my;
    upper += std::exp(log_pmf);
    tails[static_cast<std::size_t>(k - 1)] = std::min(upper, 1.0);
  }
  return tails;
}

Bernstein_basis::Bernstein_basis(int depth) : log_norm_(depth) {
  for (auto s = 0; s <= depth; ++s) {
    auto big_n = static_cast<double>(nodes_at_scale(s));
    auto level = log_norm_.level(s);
    for (auto j = std::size_t{0}; j != level.size(); ++j) {
      auto h = static_cast<double>(j) + 1.0;
      level[j] = -log_beta_function(h, big_n - h + 1.0);
    }
  }
}

auto Bernstein_basis::log_kernels_into(double y, std::span<double> out) const -> void {
  if (!(y > 0.0 && y < 1.0)) { throw std::domain_error{"kernel evaluation point outside (0,1)"}; }
  auto log_y = std::log(y);
  auto log_1my = std::log1p(-y);
  for (auto s = 0; s <= depth(); ++s) {
    auto big_n = nodes_at_scale(s);
    auto norm = log_norm_.level(s);
    auto offset = static_cast<std::size_t>(Prob_tree::level_offset(s));
    for (auto j = std::int64_t{0}; j != big_n; ++j) {
      // Be(y; h, N - h + 1) with h = j + 1
      out[offset + j] = norm[j] + static_cast<double>(j) * log_y + static_cast<double>(big_n - 1 - j) * log_1my;
    }
  }
}

auto Bernstein_basis::log_kernels(double y) const -> Prob_tree {
  auto result = Prob_tree(depth());
  log_kernels_into(y, result.values());
  return result;
}

auto Bernstein_basis::log_kernel(Node_id node, double y) const -> double {
  if (!(y > 0.0 && y < 1.0)) { throw std::domain_error{"kernel evaluation point outside (0,1)"}; }
  auto big_n = nodes_at_scale(node.scale);
  auto j = static_cast<double>(node.position - 1);
  return log_norm_.at(node) + j * std::log(y) + (static_cast<double>(big_n) - 1.0 - j) * std::log1p(-y);
}

}  // namespace msbp
