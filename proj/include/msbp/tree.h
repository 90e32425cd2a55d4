#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace msbp {

// Hard cap on truncation depth; a dense tree of depth 24 already holds 2^25 - 1 nodes.
inline constexpr int k_max_depth = 24;

// Address of one beta dictionary element: node (s,h) carries Be(h, 2^s - h + 1).
struct Node_id {
  int scale = 0;
  std::int64_t position = 1;

  friend auto operator==(const Node_id&, const Node_id&) -> bool = default;
};

inline auto nodes_at_scale(int scale) -> std::int64_t { return std::int64_t{1} << scale; }

auto is_valid(Node_id node) -> bool;
auto check_node(Node_id node) -> void;  // throws std::domain_error

inline auto left_child(Node_id node) -> Node_id { return {node.scale + 1, 2 * node.position - 1}; }
inline auto right_child(Node_id node) -> Node_id { return {node.scale + 1, 2 * node.position}; }
inline auto is_right_child(Node_id node) -> bool { return node.position % 2 == 0; }

// Ancestor of `target` at scale r: (r, ceil(h / 2^(s-r))).
auto ancestor_at(Node_id target, int r) -> Node_id;

enum class Direction { left, right, stop };

struct Path_step {
  Node_id node;
  Direction direction_taken;

  friend auto operator==(const Path_step&, const Path_step&) -> bool = default;
};

// Root-to-target path: target.scale directional steps followed by a final Stop.
auto path_to(Node_id target) -> std::vector<Path_step>;

// Dense per-scale storage for one value per node, scales 0..depth.
// Nodes are laid out breadth first: (s,h) lives at flat index 2^s - 1 + (h - 1).
template <typename T>
class Scale_tree {
 public:
  Scale_tree() : Scale_tree(0) {}

  explicit Scale_tree(int depth, T fill = T{}) : depth_{depth} {
    if (depth < 0 || depth > k_max_depth) {
      throw std::domain_error{"tree depth " + std::to_string(depth) + " outside [0, " +
                              std::to_string(k_max_depth) + "]"};
    }
    values_.assign(static_cast<std::size_t>(node_count_for(depth)), fill);
  }

  static constexpr auto node_count_for(int depth) -> std::int64_t { return (std::int64_t{2} << depth) - 1; }
  static constexpr auto level_offset(int scale) -> std::int64_t { return (std::int64_t{1} << scale) - 1; }

  auto depth() const -> int { return depth_; }
  auto node_count() const -> std::size_t { return values_.size(); }

  auto operator()(int scale, std::int64_t position) -> T& { return values_[index(scale, position)]; }
  auto operator()(int scale, std::int64_t position) const -> const T& { return values_[index(scale, position)]; }
  auto operator[](Node_id node) -> T& { return (*this)(node.scale, node.position); }
  auto operator[](Node_id node) const -> const T& { return (*this)(node.scale, node.position); }

  auto at(Node_id node) const -> const T& {
    check_node(node);
    if (node.scale > depth_) { throw std::out_of_range{"node below tree depth"}; }
    return (*this)[node];
  }

  auto level(int scale) -> std::span<T> {
    return {values_.data() + level_offset(scale), static_cast<std::size_t>(nodes_at_scale(scale))};
  }
  auto level(int scale) const -> std::span<const T> {
    return {values_.data() + level_offset(scale), static_cast<std::size_t>(nodes_at_scale(scale))};
  }

  auto values() -> std::span<T> { return values_; }
  auto values() const -> std::span<const T> { return values_; }

  // Copy of scales 0..depth.
  auto prefix(int depth) const -> Scale_tree {
    if (depth > depth_) { throw std::domain_error{"prefix deeper than tree"}; }
    auto result = Scale_tree(depth);
    std::copy_n(values_.begin(), result.values_.size(), result.values_.begin());
    return result;
  }

  friend auto operator==(const Scale_tree&, const Scale_tree&) -> bool = default;

 private:
  auto index(int scale, std::int64_t position) const -> std::size_t {
    return static_cast<std::size_t>(level_offset(scale) + position - 1);
  }

  int depth_;
  std::vector<T> values_;
};

using Prob_tree = Scale_tree<double>;
using Count_tree = Scale_tree<std::int64_t>;

// Stick-breaking weights pi_{s,h} = S_{s,h} prod_{r<s} (1 - S_{r,g}) T_{r,g}, computed in one
// breadth-first pass over arrival probabilities.  When `truncated`, the deepest scale stops
// surely and the weights sum to one.
auto tree_weights(const Prob_tree& stop, const Prob_tree& right, bool truncated = true) -> Prob_tree;

// Probability of reaching each node (the prefix product above, without the node's own stop).
auto arrival_probabilities(const Prob_tree& stop, const Prob_tree& right) -> Prob_tree;

// Total weight per scale.
auto scale_masses(const Prob_tree& weights) -> std::vector<double>;

}  // namespace msbp
