#include "msbp/gibbs.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "msbp/csv.h"
#include "msbp/errors.h"
#include "msbp/special.h"

namespace msbp {

namespace {

constexpr auto k_neg_inf = -std::numeric_limits<double>::infinity();
constexpr int k_max_slice_retries = 100;
constexpr int k_adapt_window = 50;

// Index drawn with probability proportional to exp(log_weights[i]).
auto draw_log_categorical(std::span<const double> log_weights, Rng& rng) -> std::size_t {
  auto peak = *std::max_element(log_weights.begin(), log_weights.end());
  auto total = 0.0;
  for (auto lw : log_weights) { total += std::exp(lw - peak); }
  auto target = draw_uniform(rng) * total;
  auto cumulative = 0.0;
  auto last_positive = std::size_t{0};
  for (auto i = std::size_t{0}; i != log_weights.size(); ++i) {
    auto p = std::exp(log_weights[i] - peak);
    if (p > 0.0) { last_positive = i; }
    cumulative += p;
    if (target < cumulative) { return i; }
  }
  return last_positive;
}

auto all_finite(const Prob_tree& tree) -> bool {
  return std::all_of(tree.values().begin(), tree.values().end(), [](double v) { return std::isfinite(v); });
}

}  // namespace

auto Chain_config::validate() const -> void {
  if (n_burn < 0) { throw Config_error{"burn-in must be nonnegative"}; }
  if (n_iter < 1) { throw Config_error{"iterations must be at least 1"}; }
  if (thin < 1) { throw Config_error{"thin must be at least 1"}; }
  if (smax < 0 || smax > k_max_depth) { throw Config_error{"smax must lie in [0, 24]"}; }
  if (grid_size < 2) { throw Config_error{"grid size must be at least 2"}; }
  if (!(b_proposal_scale >= 0.0)) { throw Config_error{"b proposal scale must be nonnegative"}; }
  try {
    hyper.validate();
  } catch (const std::domain_error& e) {
    throw Config_error{e.what()};
  }
}

Allocation_context::Allocation_context(Prob_tree w)
    : weights{std::move(w)}, log_weights(weights.depth()), masses{scale_masses(weights)} {
  auto src = weights.values();
  auto dst = log_weights.values();
  for (auto i = std::size_t{0}; i != src.size(); ++i) { dst[i] = src[i] > 0.0 ? std::log(src[i]) : k_neg_inf; }
}

auto allocate_subject(std::span<const double> log_kernels, const Allocation_context& context, int current_scale,
                      Rng& rng, std::int64_t* retries) -> Subject_allocation {
  const auto& masses = context.masses;
  auto depth = context.weights.depth();
  thread_local auto terms = std::vector<double>{};
  thread_local auto scale_scores = std::vector<double>{};
  scale_scores.assign(static_cast<std::size_t>(depth) + 1, k_neg_inf);

  for (auto attempt = 0; attempt <= k_max_slice_retries; ++attempt) {
    auto slice = draw_uniform(rng, 0.0, masses[current_scale]);
    auto any = false;
    for (auto s = 0; s <= depth; ++s) {
      scale_scores[s] = k_neg_inf;
      if (!(masses[s] > slice)) { continue; }
      auto offset = static_cast<std::size_t>(Prob_tree::level_offset(s));
      auto lw = context.log_weights.level(s);
      terms.resize(lw.size());
      for (auto j = std::size_t{0}; j != lw.size(); ++j) { terms[j] = lw[j] + log_kernels[offset + j]; }
      // sum_h (pi_{s,h} / pi_s) Be(y; h, 2^s - h + 1)
      scale_scores[s] = log_sum_exp(terms) - std::log(masses[s]);
      any = true;
    }
    if (!any) {
      if (retries) { ++*retries; }
      continue;
    }

    auto scale = static_cast<int>(draw_log_categorical(scale_scores, rng));
    auto offset = static_cast<std::size_t>(Prob_tree::level_offset(scale));
    auto lw = context.log_weights.level(scale);
    terms.resize(lw.size());
    for (auto j = std::size_t{0}; j != lw.size(); ++j) { terms[j] = lw[j] + log_kernels[offset + j]; }
    auto position = static_cast<std::int64_t>(draw_log_categorical(terms, rng)) + 1;
    return {slice, {scale, position}};
  }
  throw Numerical_error{"slice allocation found no admissible scale after repeated retries"};
}

auto accumulate_counts(std::span<const Node_id> allocations, int smax) -> Count_trees {
  auto counts = Count_trees{Count_tree(smax), Count_tree(smax), Count_tree(smax)};
  for (auto node : allocations) {
    check_node(node);
    if (node.scale > smax) { throw std::domain_error{"allocation deeper than truncation depth"}; }
    ++counts.stops[node];
  }
  for (auto s = smax; s >= 0; --s) {
    auto n = counts.stops.level(s);
    auto v = counts.visits.level(s);
    auto r = counts.rights.level(s);
    for (auto j = std::size_t{0}; j != v.size(); ++j) {
      v[j] = n[j];
      if (s < smax) {
        auto below = counts.visits.level(s + 1);
        v[j] += below[2 * j] + below[2 * j + 1];
        r[j] = below[2 * j + 1];
      }
    }
  }
  return counts;
}

auto check_counts(const Count_trees& counts) -> bool {
  auto depth = counts.stops.depth();
  for (auto s = 0; s <= depth; ++s) {
    auto n = counts.stops.level(s);
    auto v = counts.visits.level(s);
    auto r = counts.rights.level(s);
    for (auto j = std::size_t{0}; j != v.size(); ++j) {
      auto below = std::int64_t{0};
      auto right = std::int64_t{0};
      if (s < depth) {
        below = counts.visits.level(s + 1)[2 * j] + counts.visits.level(s + 1)[2 * j + 1];
        right = counts.visits.level(s + 1)[2 * j + 1];
      }
      if (n[j] < 0 || v[j] != n[j] + below || r[j] != right || r[j] > v[j] - n[j]) { return false; }
    }
  }
  return true;
}

auto update_sr(const Count_trees& counts, double a, double b, Rng& rng, bool pin_root_stop) -> Sr_trees {
  auto depth = counts.stops.depth();
  auto trees = Sr_trees{Prob_tree(depth, 1.0), Prob_tree(depth, 0.5)};
  for (auto s = 0; s < depth; ++s) {
    auto n = counts.stops.level(s);
    auto v = counts.visits.level(s);
    auto r = counts.rights.level(s);
    auto stop = trees.stop.level(s);
    auto right = trees.right.level(s);
    for (auto j = std::size_t{0}; j != stop.size(); ++j) {
      auto passed = static_cast<double>(v[j] - n[j]);
      if (s == 0 && pin_root_stop) {
        stop[j] = 0.0;
      } else {
        stop[j] = draw_beta(rng, 1.0 + static_cast<double>(n[j]), a + passed);
      }
      right[j] = draw_beta(rng, b + static_cast<double>(r[j]), b + passed - static_cast<double>(r[j]));
    }
  }
  return trees;
}

auto max_occupied_scale(const Count_trees& counts) -> int {
  for (auto s = counts.stops.depth(); s > 0; --s) {
    auto n = counts.stops.level(s);
    if (std::any_of(n.begin(), n.end(), [](std::int64_t c) { return c > 0; })) { return s; }
  }
  return 0;
}

auto hyper_update_top_scale(int occupied_scale, int smax) -> int { return std::min(occupied_scale, smax - 1); }

auto a_full_conditional(const Prob_tree& stop, int top_scale, Gamma_prior prior) -> Gamma_prior {
  auto result = prior;
  for (auto s = 0; s <= top_scale; ++s) {
    for (auto p : stop.level(s)) {
      result.shape += 1.0;
      result.rate -= std::log1p(-p);
    }
  }
  if (!(result.rate > 0.0) || !std::isfinite(result.rate)) {
    throw Numerical_error{"non-positive or non-finite rate in the a full conditional"};
  }
  return result;
}

auto update_a(const Prob_tree& stop, int top_scale, Gamma_prior prior, Rng& rng) -> double {
  auto conditional = a_full_conditional(stop, top_scale, prior);
  return draw_gamma(rng, conditional.shape, conditional.rate);
}

namespace {

struct Right_summary {
  double log_sum = 0.0;  // sum log R + log(1 - R)
  double count = 0.0;
};

auto summarize_right(const Prob_tree& right, int top_scale) -> Right_summary {
  auto summary = Right_summary{};
  for (auto s = 0; s <= top_scale; ++s) {
    for (auto p : right.level(s)) {
      summary.log_sum += std::log(p) + std::log1p(-p);
      summary.count += 1.0;
    }
  }
  return summary;
}

auto log_b_target(double b, const Right_summary& summary, Gamma_prior prior) -> double {
  if (!(b > 0.0)) { return k_neg_inf; }
  return (prior.shape - 1.0) * std::log(b) - prior.rate * b + (b - 1.0) * summary.log_sum -
         summary.count * log_beta_function(b, b);
}

}  // namespace

auto log_b_target(double b, const Prob_tree& right, int top_scale, Gamma_prior prior) -> double {
  return log_b_target(b, summarize_right(right, top_scale), prior);
}

auto update_b(const Prob_tree& right, int top_scale, Gamma_prior prior, double b_current, double proposal_scale,
              Rng& rng) -> B_update {
  auto summary = summarize_right(right, top_scale);
  auto proposal = b_current * std::exp(proposal_scale * draw_normal(rng, 0.0, 1.0));
  // Random walk on log b: the Jacobian contributes log(b'/b).
  auto log_ratio = log_b_target(proposal, summary, prior) - log_b_target(b_current, summary, prior) +
                   std::log(proposal) - std::log(b_current);
  auto u = draw_uniform(rng);
  if (std::log(u) < log_ratio) { return {proposal, true}; }
  return {b_current, false};
}

auto subject_log_kernels(std::span<const double> data_y, int smax) -> std::vector<double> {
  auto basis = Bernstein_basis(smax);
  auto nodes = static_cast<std::size_t>(Prob_tree::node_count_for(smax));
  auto table = std::vector<double>(data_y.size() * nodes);
  for (auto i = std::size_t{0}; i != data_y.size(); ++i) {
    basis.log_kernels_into(data_y[i], std::span<double>{table.data() + i * nodes, nodes});
  }
  return table;
}

auto initial_state(std::size_t n_subjects, const Chain_config& config, Rng& rng) -> Chain_state {
  auto hyper = config.hyper;
  if (hyper.a_prior) { hyper.a = hyper.a_prior->mean(); }
  if (hyper.b_prior) { hyper.b = hyper.b_prior->mean(); }
  auto draw = sample_prior_trees(hyper, config.smax, rng);
  return {std::move(draw.stop), std::move(draw.right), hyper.a, hyper.b,
          std::vector<Node_id>(n_subjects, Node_id{0, 1})};
}

auto gibbs_sweep(Chain_state& state, std::span<const double> log_kernels, const Hyperparams& hyper,
                 double b_proposal_scale, Rng& rng, std::int64_t* retries) -> Sweep_diagnostics {
  auto smax = state.stop.depth();
  auto nodes = static_cast<std::size_t>(Prob_tree::node_count_for(smax));
  auto context = Allocation_context{tree_weights(state.stop, state.right, true)};
  for (auto i = std::size_t{0}; i != state.allocations.size(); ++i) {
    auto row = log_kernels.subspan(i * nodes, nodes);
    state.allocations[i] = allocate_subject(row, context, state.allocations[i].scale, rng, retries).node;
  }

  auto counts = accumulate_counts(state.allocations, smax);
  auto trees = update_sr(counts, state.a, state.b, rng);
  state.stop = std::move(trees.stop);
  state.right = std::move(trees.right);

  auto diagnostics = Sweep_diagnostics{};
  diagnostics.occupied_scale = max_occupied_scale(counts);
  auto top = hyper_update_top_scale(diagnostics.occupied_scale, smax);
  diagnostics.included_nodes = top < 0 ? 0 : static_cast<int>(Prob_tree::node_count_for(top));

  if (hyper.a_prior) { state.a = update_a(state.stop, top, *hyper.a_prior, rng); }
  if (hyper.b_prior) {
    auto step = update_b(state.right, top, *hyper.b_prior, state.b, b_proposal_scale, rng);
    state.b = step.b;
    diagnostics.b_accepted = step.accepted;
  }
  // Scales below the hyperparameter window carry no data; redraw them given the new a and b so
  // the (a, b, unoccupied nodes) block is an exact conditional draw.
  if (hyper.a_prior || hyper.b_prior) {
    for (auto s = top + 1; s < smax; ++s) {
      auto stop = state.stop.level(s);
      auto right = state.right.level(s);
      for (auto j = std::size_t{0}; j != stop.size(); ++j) {
        stop[j] = draw_beta(rng, 1.0, state.a);
        right[j] = draw_beta(rng, state.b, state.b);
      }
    }
  }
  return diagnostics;
}

auto Chain_output::mean_weights() const -> Prob_tree {
  if (draws.empty()) { throw std::domain_error{"no retained draws"}; }
  auto mean = Prob_tree(draws.front().weights.depth());
  auto acc = mean.values();
  for (const auto& draw : draws) {
    auto w = draw.weights.values();
    for (auto i = std::size_t{0}; i != acc.size(); ++i) { acc[i] += w[i]; }
  }
  for (auto& v : acc) { v /= static_cast<double>(draws.size()); }
  return mean;
}

auto run_chain(std::span<const double> data_y, const Chain_config& config, Rng& rng) -> Chain_output {
  config.validate();
  for (auto y : data_y) {
    if (!(y > 0.0 && y < 1.0)) { throw std::domain_error{"run_chain: data must lie in (0,1)"}; }
  }
  auto log_kernels = subject_log_kernels(data_y, config.smax);
  auto state = initial_state(data_y.size(), config, rng);

  auto output = Chain_output{};
  output.smax = config.smax;
  auto total = config.n_burn + config.n_iter;
  output.a_trace.reserve(total);
  output.b_trace.reserve(total);
  output.draws.reserve(static_cast<std::size_t>(config.n_iter / config.thin));

  auto proposal_scale = config.b_proposal_scale;
  auto window_accepts = 0;
  auto kept_accepts = 0;

  for (auto iter = 0; iter < total; ++iter) {
    auto diag = gibbs_sweep(state, log_kernels, config.hyper, proposal_scale, rng, &output.slice_retries);
    output.a_trace.push_back(state.a);
    output.b_trace.push_back(state.b);
    output.occupied_scale_trace.push_back(diag.occupied_scale);
    output.included_nodes_last = diag.included_nodes;

    if (!std::isfinite(state.a) || !std::isfinite(state.b) || !all_finite(state.stop) || !all_finite(state.right)) {
      auto dump = std::ostringstream{};
      dump << "non-finite sampler state at iteration " << iter << ": a=" << state.a << " b=" << state.b
           << " occupied_scale=" << diag.occupied_scale << " smax=" << config.smax;
      throw Numerical_error{dump.str()};
    }

    if (iter < config.n_burn) {
      window_accepts += diag.b_accepted ? 1 : 0;
      if (config.adapt_b_proposal && config.hyper.b_prior && (iter + 1) % k_adapt_window == 0) {
        auto rate = static_cast<double>(window_accepts) / k_adapt_window;
        if (rate < 0.30) { proposal_scale *= 0.8; }
        if (rate > 0.40) { proposal_scale *= 1.25; }
        window_accepts = 0;
      }
      continue;
    }

    kept_accepts += diag.b_accepted ? 1 : 0;
    if ((iter - config.n_burn + 1) % config.thin != 0) { continue; }
    auto weights = tree_weights(state.stop, state.right, true);
    output.draws.push_back({state.stop, state.right, std::move(weights), state.a, state.b});
    auto occupancy = std::vector<std::int64_t>(static_cast<std::size_t>(config.smax) + 1, 0);
    for (auto node : state.allocations) { ++occupancy[node.scale]; }
    output.scale_occupancy.push_back(std::move(occupancy));
  }
  output.b_acceptance_rate = static_cast<double>(kept_accepts) / config.n_iter;
  output.b_proposal_scale = proposal_scale;
  return output;
}

auto unit_grid(int points) -> std::vector<double> {
  auto grid = std::vector<double>(static_cast<std::size_t>(points));
  for (auto i = 0; i < points; ++i) { grid[i] = clamp_unit(static_cast<double>(i) / (points - 1)); }
  return grid;
}

auto posterior_mean_density(const Chain_output& output, std::span<const double> y_grid, const Base_measure& base)
    -> Density_grid {
  auto mean = output.mean_weights();
  auto basis = Bernstein_basis(mean.depth());
  auto result = Density_grid{};
  for (auto y : y_grid) {
    auto f = density_at(mean, basis, y);
    auto x = base.inverse_transform(y);
    result.x.push_back(x);
    result.y.push_back(y);
    result.f_y.push_back(f);
    result.g_x.push_back(f * base.base_density(x));
  }
  return result;
}

auto chain_summary_json(const Chain_output& output) -> nlohmann::json {
  auto occupancy = std::vector<std::int64_t>(static_cast<std::size_t>(output.smax) + 1, 0);
  for (const auto& row : output.scale_occupancy) {
    for (auto s = std::size_t{0}; s != row.size(); ++s) { occupancy[s] += row[s]; }
  }
  auto mean = output.draws.empty() ? Prob_tree(output.smax) : output.mean_weights();
  auto mean_by_scale = nlohmann::json::array();
  for (auto s = 0; s <= mean.depth(); ++s) {
    mean_by_scale.push_back(std::vector<double>(mean.level(s).begin(), mean.level(s).end()));
  }
  return {
      {"retained_draws", output.draws.size()},
      {"a_trace", output.a_trace},
      {"b_trace", output.b_trace},
      {"b_acceptance_rate", output.b_acceptance_rate},
      {"b_proposal_scale_final", output.b_proposal_scale},
      {"occupied_scale_trace", output.occupied_scale_trace},
      {"scale_occupancy_total", occupancy},
      {"slice_retries", output.slice_retries},
      {"hyper_update_included_nodes_last", output.included_nodes_last},
      {"posterior_mean_weights", mean_by_scale},
  };
}

auto write_density_csv(const Density_grid& grid, const std::filesystem::path& path) -> void {
  auto out = std::ofstream{path};
  if (!out) { throw std::runtime_error{"cannot write " + path.string()}; }
  out << "x,y,f_y,g_x\n";
  for (auto i = std::size_t{0}; i != grid.x.size(); ++i) {
    out << format_double(grid.x[i]) << ',' << format_double(grid.y[i]) << ',' << format_double(grid.f_y[i]) << ','
        << format_double(grid.g_x[i]) << '\n';
  }
}

}  // namespace msbp
