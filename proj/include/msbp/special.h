#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "msbp/tree.h"

namespace msbp {

// Reentrant log-gamma (std::lgamma writes the global signgam).
auto log_gamma(double x) -> double;
auto log_beta_function(double p, double q) -> double;
auto log_beta_density(double y, double alpha, double beta) -> double;

// Numerically stable log(sum(exp(values))); -inf for an empty or all -inf input.
auto log_sum_exp(std::span<const double> values) -> double;

// Upper binomial tails: tails[h-1] = P(Binomial(n, y) >= h) for h = 1..n, i.e. the regularized
// incomplete beta I_y(h, n - h + 1).
auto binomial_upper_tails(std::int64_t n, double y) -> std::vector<double>;

// Log normalizers and per-point log kernels of the Bernstein dictionary Be(h, 2^s - h + 1),
// precomputed once per depth so hot loops never call log-gamma.
class Bernstein_basis {
 public:
  explicit Bernstein_basis(int depth);

  auto depth() const -> int { return log_norm_.depth(); }

  // log Be(y; h, 2^s - h + 1) for every node, in tree layout.
  auto log_kernels(double y) const -> Prob_tree;
  auto log_kernels_into(double y, std::span<double> out) const -> void;

  auto log_kernel(Node_id node, double y) const -> double;

 private:
  Prob_tree log_norm_;
};

}  // namespace msbp
