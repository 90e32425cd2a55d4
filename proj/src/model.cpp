#include "msbp/model.h"

#include <cmath>
#include <algorithm>
#include <numeric>
#include <vector>
#include <stdexcept>
#include <string>

namespace msbp {

auto Hyperparams::validate() const -> void {
  if (!(a > 0.0) || !std::isfinite(a)) { throw std::domain_error{"a must be positive, got " + std::to_string(a)}; }
  if (!(b > 0.0) || !std::isfinite(b)) { throw std::domain_error{"b must be positive, got " + std::to_string(b)}; }
  for (const auto& prior : {a_prior, b_prior}) {
    if (prior && !(prior->shape > 0.0 && prior->rate > 0.0)) {
      throw std::domain_error{"gamma prior shape and rate must be positive"};
    }
  }
}

auto Msbp_draw::from_trees(Prob_tree stop, Prob_tree right) -> Msbp_draw {
  auto weights = tree_weights(stop, right, true);
  return {std::move(stop), std::move(right), std::move(weights)};
}

auto sample_prior_trees(const Hyperparams& hyper, int smax, Rng& rng) -> Msbp_draw {
  hyper.validate();
  auto stop = Prob_tree(smax, 1.0);
  auto right = Prob_tree(smax, 0.5);
  for (auto s = 0; s < smax; ++s) {
    auto stop_s = stop.level(s);
    auto right_s = right.level(s);
    for (auto j = std::size_t{0}; j != stop_s.size(); ++j) {
      stop_s[j] = draw_beta(rng, 1.0, hyper.a);
      right_s[j] = draw_beta(rng, hyper.b, hyper.b);
    }
  }
  return Msbp_draw::from_trees(std::move(stop), std::move(right));
}

namespace {

auto draw_from_kernel(Node_id node, Rng& rng) -> double {
  auto h = static_cast<double>(node.position);
  auto big_n = static_cast<double>(nodes_at_scale(node.scale));
  return draw_beta(rng, h, big_n - h + 1.0);
}

}  // namespace

auto sample_observation(const Msbp_draw& draw, Rng& rng) -> Observation {
  auto node = Node_id{0, 1};
  auto depth = draw.stop.depth();
  while (node.scale < depth && draw_uniform(rng) >= draw.stop[node]) {
    node = draw_uniform(rng) < draw.right[node] ? right_child(node) : left_child(node);
  }
  return {draw_from_kernel(node, rng), node};
}

auto sample_prior_predictive(const Hyperparams& hyper, int smax, Rng& rng) -> Observation {
  hyper.validate();
  auto node = Node_id{0, 1};
  while (node.scale < smax) {
    auto stop = draw_beta(rng, 1.0, hyper.a);
    auto right = draw_beta(rng, hyper.b, hyper.b);
    if (draw_uniform(rng) < stop) { break; }
    node = draw_uniform(rng) < right ? right_child(node) : left_child(node);
  }
  return {draw_from_kernel(node, rng), node};
}

auto density_at(const Prob_tree& weights, const Bernstein_basis& basis, double y) -> double {
  if (!(y > 0.0 && y < 1.0)) { throw std::domain_error{"density_at: y outside (0,1)"}; }
  if (basis.depth() < weights.depth()) { throw std::domain_error{"basis shallower than weight tree"}; }
  auto log_kernels = std::vector<double>(Prob_tree::node_count_for(basis.depth()));
  basis.log_kernels_into(y, log_kernels);
  auto w = weights.values();
  auto total = 0.0;
  for (auto i = std::size_t{0}; i != w.size(); ++i) {
    if (w[i] != 0.0) { total += w[i] * std::exp(log_kernels[i]); }
  }
  return total;
}

auto density_at(const Prob_tree& weights, double y) -> double {
  return density_at(weights, Bernstein_basis(weights.depth()), y);
}

auto cdf_at(const Prob_tree& weights, double y) -> double {
  if (!(y >= 0.0 && y <= 1.0)) { throw std::domain_error{"cdf_at: y outside [0,1]"}; }
  auto all = weights.values();
  if (y == 0.0) { return 0.0; }
  if (y == 1.0) { return std::accumulate(all.begin(), all.end(), 0.0); }
  auto total = 0.0;
  for (auto s = 0; s <= weights.depth(); ++s) {
    auto level = weights.level(s);
    auto tails = binomial_upper_tails(nodes_at_scale(s), y);
    for (auto j = std::size_t{0}; j != level.size(); ++j) { total += level[j] * tails[j]; }
  }
  return std::clamp(total, 0.0, 1.0);
}

auto weight_moments(double a, double b, int scale) -> Weight_moments {
  auto s = static_cast<double>(scale);
  auto mean = 1.0 / (1.0 + a) * std::pow(a / (2.0 + 2.0 * a), s);
  auto second = 2.0 / ((1.0 + a) * (2.0 + a)) * std::pow(a / (2.0 + a), s) *
                std::pow((b + 1.0) / (2.0 * (2.0 * b + 1.0)), s);
  auto variance = scale == 0 ? a / ((2.0 + a) * (1.0 + a) * (1.0 + a)) : second - mean * mean;
  return {mean, variance};
}

auto cocluster_prob(double a, double b, int scale) -> double {
  if (scale == 0) { return 1.0; }
  return std::pow((a / (a + 2.0)) * ((b + 1.0) / (2.0 * b + 1.0)), static_cast<double>(scale));
}

auto expected_scale(double a) -> double { return a; }

auto tv_variance_bound(double a, int scale) -> double {
  return 2.0 * std::pow(a / (a + 1.0), static_cast<double>(scale));
}

}  // namespace msbp
