#include "msbp/tree.h"

namespace msbp {

auto is_valid(Node_id node) -> bool {
  return node.scale >= 0 && node.scale <= k_max_depth && node.position >= 1 && node.position <= nodes_at_scale(node.scale);
}

auto check_node(Node_id node) -> void {
  if (!is_valid(node)) {
    throw std::domain_error{"invalid node (" + std::to_string(node.scale) + "," + std::to_string(node.position) + ")"};
  }
}

auto ancestor_at(Node_id target, int r) -> Node_id {
  check_node(target);
  if (r < 0 || r > target.scale) {
    throw std::domain_error{"ancestor scale " + std::to_string(r) + " outside [0, " +
                            std::to_string(target.scale) + "]"};
  }
  // ceil(h / 2^k) == ((h - 1) >> k) + 1 for h >= 1
  return {r, ((target.position - 1) >> (target.scale - r)) + 1};
}

auto path_to(Node_id target) -> std::vector<Path_step> {
  check_node(target);
  auto path = std::vector<Path_step>{};
  path.reserve(static_cast<std::size_t>(target.scale) + 1);
  for (auto r = 0; r < target.scale; ++r) {
    auto next = ancestor_at(target, r + 1);
    path.push_back({ancestor_at(target, r), is_right_child(next) ? Direction::right : Direction::left});
  }
  path.push_back({target, Direction::stop});
  return path;
}

namespace {

auto check_probabilities(const Prob_tree& tree, const char* name) -> void {
  for (auto p : tree.values()) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw std::domain_error{std::string{name} + " probability outside [0,1]"};
    }
  }
}

}  // namespace

auto arrival_probabilities(const Prob_tree& stop, const Prob_tree& right) -> Prob_tree {
  if (stop.depth() != right.depth()) { throw std::domain_error{"stop/right trees differ in depth"}; }
  check_probabilities(stop, "stop");
  check_probabilities(right, "right");

  auto arrival = Prob_tree(stop.depth());
  arrival(0, 1) = 1.0;
  for (auto s = 0; s < stop.depth(); ++s) {
    auto here = arrival.level(s);
    auto below = arrival.level(s + 1);
    auto stop_s = stop.level(s);
    auto right_s = right.level(s);
    for (auto j = std::size_t{0}; j != here.size(); ++j) {
      auto pass = here[j] * (1.0 - stop_s[j]);
      below[2 * j] = pass * (1.0 - right_s[j]);
      below[2 * j + 1] = pass * right_s[j];
    }
  }
  return arrival;
}

auto tree_weights(const Prob_tree& stop, const Prob_tree& right, bool truncated) -> Prob_tree {
  auto weights = arrival_probabilities(stop, right);
  auto depth = stop.depth();
  auto w = weights.values();
  auto s_values = stop.values();
  auto deepest = static_cast<std::size_t>(Prob_tree::level_offset(depth));
  for (auto i = std::size_t{0}; i != w.size(); ++i) {
    if (!(truncated && i >= deepest)) { w[i] *= s_values[i]; }
  }
  return weights;
}

auto scale_masses(const Prob_tree& weights) -> std::vector<double> {
  auto masses = std::vector<double>(static_cast<std::size_t>(weights.depth()) + 1, 0.0);
  for (auto s = 0; s <= weights.depth(); ++s) {
    for (auto w : weights.level(s)) { masses[s] += w; }
  }
  return masses;
}

}  // namespace msbp
