#include "msbp/gibbs.h"

#include <cmath>
#include <map>

#include <gtest/gtest.h>

#include "msbp/errors.h"
#include "msbp/special.h"
#include "test_support.h"

namespace msbp {

namespace {

auto fixed_hyper(double a, double b) -> Hyperparams { return {.a = a, .b = b, .a_prior = {}, .b_prior = {}}; }

auto beta_pdf(double y, double p, double q) -> double {
  return std::exp((p - 1) * std::log(y) + (q - 1) * std::log1p(-y) + std::lgamma(p + q) - std::lgamma(p) -
                  std::lgamma(q));
}

// Exact posterior over nodes for one subject: pi_{s,h} Be(y; h, 2^s - h + 1), normalized.
auto exact_allocation(const Prob_tree& w, double y) -> Prob_tree {
  auto p = Prob_tree(w.depth());
  auto total = 0.0;
  for (auto s = 0; s <= w.depth(); ++s) {
    auto big_n = std::int64_t{1} << s;
    for (auto h = std::int64_t{1}; h <= big_n; ++h) {
      p(s, h) = w(s, h) * beta_pdf(y, static_cast<double>(h), static_cast<double>(big_n - h + 1));
      total += p(s, h);
    }
  }
  for (auto& v : p.values()) { v /= total; }
  return p;
}

auto check_allocation_frequencies(const Prob_tree& weights, double y, std::uint64_t seed) -> void {
  auto context = Allocation_context{weights};
  auto kernels = subject_log_kernels(std::vector<double>{y}, weights.depth());
  auto exact = exact_allocation(weights, y);
  auto rng = make_rng(seed);
  constexpr auto draws = 200000;
  auto visits = std::vector<Node_id>(draws);
  auto scale = 0;
  auto retries = std::int64_t{0};
  for (auto& v : visits) {
    auto alloc = allocate_subject(kernels, context, scale, rng, &retries);
    ASSERT_LT(alloc.slice, context.masses[scale] + 1e-300);
    v = alloc.node;
    scale = v.scale;
  }
  EXPECT_EQ(retries, 0);
  for (auto s = 0; s <= weights.depth(); ++s) {
    for (auto h = std::int64_t{1}; h <= nodes_at_scale(s); ++h) {
      auto indicator = std::vector<double>(draws);
      for (auto i = 0; i < draws; ++i) { indicator[i] = visits[i] == Node_id{s, h} ? 1.0 : 0.0; }
      auto m = testing::batch_mean(indicator);
      EXPECT_NEAR(m.mean, exact(s, h), std::max(3.5 * m.se, 1e-4)) << "node " << s << "," << h;
    }
  }
}

}  // namespace

TEST(Counts_test, root_subject) {
  auto nodes = std::vector<Node_id>{{0, 1}};
  auto c = accumulate_counts(nodes, 3);
  EXPECT_EQ(c.stops(0, 1), 1);
  EXPECT_EQ(c.visits(0, 1), 1);
  for (auto r : c.rights.values()) { EXPECT_EQ(r, 0); }
}

TEST(Counts_test, path_example) {
  auto nodes = std::vector<Node_id>{{2, 3}};
  auto c = accumulate_counts(nodes, 3);
  EXPECT_EQ(c.visits(0, 1), 1);
  EXPECT_EQ(c.visits(1, 2), 1);
  EXPECT_EQ(c.visits(2, 3), 1);
  EXPECT_EQ(c.rights(0, 1), 1);
  EXPECT_EQ(c.rights(1, 2), 0);
  EXPECT_EQ(c.stops(2, 3), 1);
  EXPECT_EQ(c.stops(0, 1), 0);
  EXPECT_EQ(c.visits(1, 1), 0);
}

TEST(Counts_test, conservation_matches_path_walk) {
  auto rng = make_rng(1);
  auto nodes = std::vector<Node_id>(1000);
  for (auto& node : nodes) {
    auto s = static_cast<int>(draw_uniform(rng) * 6);
    node = {s, 1 + static_cast<std::int64_t>(draw_uniform(rng) * static_cast<double>(nodes_at_scale(s)))};
  }
  auto c = accumulate_counts(nodes, 5);
  EXPECT_TRUE(check_counts(c));
  EXPECT_EQ(c.visits(0, 1), 1000);
  // Path-walk oracle for v and r.
  auto v = Count_tree(5);
  auto r = Count_tree(5);
  for (auto node : nodes) {
    for (const auto& step : path_to(node)) {
      ++v[step.node];
      if (step.direction_taken == Direction::right) { ++r[step.node]; }
    }
  }
  EXPECT_EQ(c.visits, v);
  EXPECT_EQ(c.rights, r);
  auto too_deep = std::vector<Node_id>{{4, 1}};
  EXPECT_THROW(accumulate_counts(too_deep, 3), std::domain_error);
}

TEST(Counts_test, corrupt_counts_detected) {
  auto nodes = std::vector<Node_id>{{1, 2}, {2, 1}};
  auto c = accumulate_counts(nodes, 2);
  ++c.rights(0, 1);
  EXPECT_FALSE(check_counts(c));
}

TEST(Allocation_test, root_only_weights_stay_at_root) {
  auto w = Prob_tree(3, 0.0);
  w(0, 1) = 1.0;
  auto context = Allocation_context{w};
  auto kernels = subject_log_kernels(std::vector<double>{0.3}, 3);
  auto rng = make_rng(2);
  for (auto i = 0; i < 1000; ++i) { EXPECT_EQ(allocate_subject(kernels, context, 0, rng).node, (Node_id{0, 1})); }
}

TEST(Allocation_test, uniform_weights_match_enumeration) {
  auto w = Prob_tree(2, 1.0 / 7.0);
  check_allocation_frequencies(w, 0.9, 3);
}

TEST(Allocation_test, random_weights_match_enumeration) {
  auto rng = make_rng(4);
  auto w = tree_weights(testing::random_tree(3, rng), testing::random_tree(3, rng));
  check_allocation_frequencies(w, 0.27, 5);
}

TEST(Allocation_test, zero_mass_current_scale_falls_back_to_full_conditional) {
  auto w = Prob_tree(2, 0.0);
  w(1, 1) = 0.5;
  w(2, 4) = 0.5;
  auto context = Allocation_context{w};
  auto kernels = subject_log_kernels(std::vector<double>{0.5}, 2);
  auto rng = make_rng(6);
  for (auto i = 0; i < 200; ++i) {
    auto node = allocate_subject(kernels, context, 0, rng).node;
    EXPECT_TRUE(node == (Node_id{1, 1}) || node == (Node_id{2, 4}));
  }
}

TEST(Update_test, conjugate_beta_means) {
  // Node (0,1): n = 2, v = 5, and 2 of the 3 continuing subjects go right.
  auto nodes = std::vector<Node_id>{{0, 1}, {0, 1}, {1, 2}, {1, 2}, {1, 1}};
  auto counts = accumulate_counts(nodes, 2);
  ASSERT_EQ(counts.rights(0, 1), 2);
  auto rng = make_rng(7);
  constexpr auto draws = 200000;
  auto stop_root = std::vector<double>(draws);
  auto right_root = std::vector<double>(draws);
  for (auto i = 0; i < draws; ++i) {
    auto trees = update_sr(counts, 1.0, 1.0, rng);
    stop_root[i] = trees.stop(0, 1);
    right_root[i] = trees.right(0, 1);
    ASSERT_EQ(trees.stop(2, 3), 1.0);
  }
  auto m = testing::mc_mean(stop_root);
  EXPECT_NEAR(m.mean, 3.0 / 7.0, 3 * m.se);  // Be(1 + 2, 1 + 3)
  auto r = testing::mc_mean(right_root);
  EXPECT_NEAR(r.mean, 3.0 / 5.0, 3 * r.se);  // Be(1 + 2, 1 + 1)
}

TEST(Update_test, right_example_and_pinned_root) {
  // Root with v - n = 4 and r = 3: R ~ Be(4, 2).
  auto nodes = std::vector<Node_id>{{1, 2}, {1, 2}, {1, 2}, {1, 1}};
  auto counts = accumulate_counts(nodes, 2);
  auto rng = make_rng(8);
  auto right_root = std::vector<double>(200000);
  for (auto& r : right_root) { r = update_sr(counts, 1.0, 1.0, rng).right(0, 1); }
  auto m = testing::mc_mean(right_root);
  EXPECT_NEAR(m.mean, 2.0 / 3.0, 3 * m.se);
  auto pinned = update_sr(counts, 1.0, 1.0, rng, true);
  EXPECT_EQ(pinned.stop(0, 1), 0.0);
}

TEST(Update_test, unvisited_node_draws_from_prior) {
  auto counts = accumulate_counts(std::vector<Node_id>{}, 2);
  auto rng = make_rng(9);
  auto xs = std::vector<double>(50000);
  for (auto& x : xs) { x = update_sr(counts, 1.0, 1.0, rng).stop(1, 2); }
  auto m = testing::mc_mean(xs);
  EXPECT_NEAR(m.mean, 0.5, 3 * m.se);
  auto v = testing::mc_variance(xs);
  EXPECT_NEAR(v.mean, 1.0 / 12.0, 3 * v.se);
}

TEST(Hyper_test, window_for_hyperparameters) {
  EXPECT_EQ(hyper_update_top_scale(3, 6), 3);
  EXPECT_EQ(hyper_update_top_scale(6, 6), 5);
  EXPECT_EQ(hyper_update_top_scale(0, 0), -1);
}

TEST(Hyper_test, a_conditional_example) {
  auto stop = Prob_tree(3, 0.5);
  auto post = a_full_conditional(stop, 1, Gamma_prior{5.0, 0.5});
  EXPECT_DOUBLE_EQ(post.shape, 8.0);
  EXPECT_NEAR(post.rate, 0.5 + 3.0 * std::log(2.0), 1e-14);
  EXPECT_NEAR(post.rate, 2.5794415416798357, 1e-12);
  auto root_only = a_full_conditional(stop, 0, Gamma_prior{5.0, 0.5});
  EXPECT_DOUBLE_EQ(root_only.shape, 6.0);
}

TEST(Hyper_test, a_draws_follow_conditional) {
  auto rng = make_rng(10);
  auto stop = testing::random_tree(3, rng);
  auto post = a_full_conditional(stop, 2, Gamma_prior{5.0, 0.5});
  auto xs = std::vector<double>(50000);
  for (auto& x : xs) { x = update_a(stop, 2, Gamma_prior{5.0, 0.5}, rng); }
  auto m = testing::mc_mean(xs);
  EXPECT_NEAR(m.mean, post.shape / post.rate, 3 * m.se);
}

TEST(Hyper_test, zero_step_is_always_accepted) {
  auto rng = make_rng(11);
  auto right = testing::random_tree(3, rng);
  for (auto i = 0; i < 100; ++i) { EXPECT_TRUE(update_b(right, 2, Gamma_prior{2.0, 1.0}, 1.3, 0.0, rng).accepted); }
}

TEST(Hyper_test, empty_window_recovers_gamma_prior) {
  auto rng = make_rng(12);
  auto right = Prob_tree(0, 0.5);
  auto prior = Gamma_prior{3.0, 2.0};
  auto b = 1.0;
  auto xs = std::vector<double>(50000);
  for (auto& x : xs) {
    b = update_b(right, -1, prior, b, 0.8, rng).b;
    x = b;
  }
  auto m = testing::batch_mean(xs);
  EXPECT_NEAR(m.mean, prior.mean(), 3 * m.se);
}

TEST(Hyper_test, b_chain_matches_quadrature_posterior) {
  // R values near 0 and 1 favour small b.
  auto right = Prob_tree(2, 0.5);
  auto values = std::vector<double>{0.02, 0.97, 0.05, 0.99, 0.01, 0.96, 0.03};
  for (auto i = std::size_t{0}; i != values.size(); ++i) { right.values()[i] = values[i]; }
  auto prior = Gamma_prior{2.0, 1.0};

  // Independent quadrature of Ga(2,1) x prod Be(R; b, b) on a fine b-grid.
  auto log_target = [&](double b) {
    auto t = std::log(b) - b;
    for (auto r : values) { t += (b - 1) * (std::log(r) + std::log1p(-r)) - 2 * std::lgamma(b) + std::lgamma(2 * b); }
    return t;
  };
  auto norm = 0.0;
  auto first = 0.0;
  auto mode = 0.0;
  auto best = -1e300;
  for (auto b = 1e-4; b < 20.0; b += 1e-4) {
    auto p = std::exp(log_target(b));
    norm += p;
    first += b * p;
    if (log_target(b) > best) {
      best = log_target(b);
      mode = b;
    }
  }
  auto exact_mean = first / norm;
  EXPECT_LT(mode, 1.0);  // prior mode of Ga(2,1) is 1
  EXPECT_NEAR(log_b_target(0.7, right, 2, prior) - log_b_target(1.9, right, 2, prior),
              log_target(0.7) - log_target(1.9), 1e-10);

  auto rng = make_rng(13);
  auto b = 1.0;
  auto xs = std::vector<double>(100000);
  for (auto& x : xs) {
    b = update_b(right, 2, prior, b, 0.7, rng).b;
    x = b;
  }
  auto m = testing::batch_mean(xs);
  EXPECT_NEAR(m.mean, exact_mean, 3 * m.se);
}

TEST(Chain_test, config_validation) {
  auto config = Chain_config{};
  config.smax = 25;
  EXPECT_THROW(config.validate(), Config_error);
  config = Chain_config{};
  config.n_iter = 0;
  EXPECT_THROW(config.validate(), Config_error);
  config = Chain_config{};
  config.hyper.a = -1.0;
  EXPECT_THROW(config.validate(), Config_error);
  auto rng = make_rng(1);
  auto bad = std::vector<double>{0.5, 1.0};
  EXPECT_THROW(run_chain(bad, Chain_config{}, rng), std::domain_error);
}

TEST(Chain_test, no_data_gives_prior_draws) {
  auto config = Chain_config{};
  config.n_burn = 10;
  config.n_iter = 20000;
  config.smax = 3;
  config.hyper = fixed_hyper(2.0, 1.0);
  auto rng = make_rng(14);
  auto output = run_chain({}, config, rng);
  auto xs = std::vector<double>{};
  for (const auto& d : output.draws) { xs.push_back(d.stop(0, 1)); }
  auto m = testing::mc_mean(xs);
  EXPECT_NEAR(m.mean, 1.0 / 3.0, 3 * m.se);
}

TEST(Chain_test, thinning_sets_draw_count) {
  auto config = Chain_config{};
  config.n_burn = 5;
  config.n_iter = 23;
  config.thin = 4;
  config.smax = 2;
  auto rng = make_rng(15);
  auto data = std::vector<double>{0.2, 0.5, 0.7};
  auto output = run_chain(data, config, rng);
  EXPECT_EQ(output.draws.size(), 5u);
  EXPECT_EQ(output.a_trace.size(), 28u);
  EXPECT_EQ(output.scale_occupancy.size(), 5u);
}

TEST(Chain_test, conjugate_posterior_matches_enumeration) {
  // smax = 1 and three subjects: 27 allocation configurations, each with a closed-form
  // marginal likelihood and conditional posterior means for S_{0,1} and R_{0,1}.
  auto y = std::vector<double>{0.15, 0.6, 0.8};
  auto a = 1.5;
  auto b = 0.8;
  auto nodes = std::vector<Node_id>{{0, 1}, {1, 1}, {1, 2}};
  auto kernel = [&](Node_id node, double yi) {
    return node.scale == 0 ? 1.0 : (node.position == 1 ? 2.0 * (1 - yi) : 2.0 * yi);
  };
  auto weight_sum = 0.0;
  auto s_mean = 0.0;
  auto r_mean = 0.0;
  for (auto c = 0; c < 27; ++c) {
    auto alloc = std::array<int, 3>{c % 3, (c / 3) % 3, c / 9};
    auto n = 0.0;
    auto right = 0.0;
    auto lik = 1.0;
    for (auto i = 0; i < 3; ++i) {
      lik *= kernel(nodes[alloc[i]], y[i]);
      n += alloc[i] == 0 ? 1 : 0;
      right += alloc[i] == 2 ? 1 : 0;
    }
    auto pass = 3.0 - n;
    auto log_m = std::log(lik) + log_beta_function(1 + n, a + pass) - log_beta_function(1, a) +
                 log_beta_function(b + right, b + pass - right) - log_beta_function(b, b);
    auto weight = std::exp(log_m);
    weight_sum += weight;
    s_mean += weight * (1 + n) / (1 + a + 3.0);
    r_mean += weight * (b + right) / (2 * b + pass);
  }
  s_mean /= weight_sum;
  r_mean /= weight_sum;

  auto config = Chain_config{};
  config.n_burn = 1000;
  config.n_iter = 50000;
  config.smax = 1;
  config.hyper = fixed_hyper(a, b);
  auto rng = make_rng(16);
  auto output = run_chain(y, config, rng);
  auto ss = std::vector<double>{};
  auto rs = std::vector<double>{};
  for (const auto& d : output.draws) {
    ss.push_back(d.stop(0, 1));
    rs.push_back(d.right(0, 1));
  }
  auto ms = testing::batch_mean(ss);
  auto mr = testing::batch_mean(rs);
  EXPECT_NEAR(ms.mean, s_mean, 3 * ms.se);
  EXPECT_NEAR(mr.mean, r_mean, 3 * mr.se);
}

TEST(Chain_test, counts_stay_consistent_every_sweep) {
  auto rng = make_rng(17);
  auto data = std::vector<double>(40);
  for (auto& y : data) { y = draw_beta(rng, 2.0, 5.0); }
  auto config = Chain_config{};
  config.smax = 4;
  config.hyper.b_prior = Gamma_prior{2.0, 2.0};
  auto state = initial_state(data.size(), config, rng);
  auto kernels = subject_log_kernels(data, config.smax);
  for (auto sweep = 0; sweep < 200; ++sweep) {
    auto diag = gibbs_sweep(state, kernels, config.hyper, 0.3, rng);
    auto counts = accumulate_counts(state.allocations, config.smax);
    ASSERT_TRUE(check_counts(counts));
    ASSERT_EQ(counts.visits(0, 1), 40);
    ASSERT_EQ(diag.occupied_scale, max_occupied_scale(counts));
    ASSERT_GT(state.a, 0.0);
    ASSERT_GT(state.b, 0.0);
  }
}

TEST(Chain_test, fit_beats_flat_density) {
  auto rng = make_rng(18);
  auto data = std::vector<double>(100);
  for (auto& y : data) { y = draw_beta(rng, 3.0, 3.0); }
  auto config = Chain_config{};
  config.n_burn = 500;
  config.n_iter = 1000;
  auto output = run_chain(data, config, rng);
  auto grid = unit_grid(2001);
  auto density = posterior_mean_density(output, grid, Base_measure::uniform());
  auto l1_fit = 0.0;
  auto l1_flat = 0.0;
  for (auto i = std::size_t{1}; i < grid.size(); ++i) {
    auto dx = grid[i] - grid[i - 1];
    auto truth0 = 30.0 * grid[i - 1] * grid[i - 1] * (1 - grid[i - 1]) * (1 - grid[i - 1]);
    auto truth1 = 30.0 * grid[i] * grid[i] * (1 - grid[i]) * (1 - grid[i]);
    l1_fit += 0.5 * dx * (std::abs(truth0 - density.f_y[i - 1]) + std::abs(truth1 - density.f_y[i]));
    l1_flat += 0.5 * dx * (std::abs(truth0 - 1.0) + std::abs(truth1 - 1.0));
  }
  EXPECT_LT(l1_fit, l1_flat);
  EXPECT_GT(output.b_acceptance_rate, -1.0);
}

TEST(Density_test, posterior_mean_examples) {
  auto flat = Prob_tree(2, 0.0);
  flat(0, 1) = 1.0;
  auto left = Prob_tree(2, 0.0);
  left(1, 1) = 1.0;
  auto output = Chain_output{};
  output.smax = 2;
  output.draws.push_back({Prob_tree(2), Prob_tree(2), flat, 1.0, 1.0});
  auto grid = unit_grid(11);
  auto single = posterior_mean_density(output, grid, Base_measure::uniform());
  for (auto f : single.f_y) { EXPECT_NEAR(f, 1.0, 1e-13); }
  output.draws.push_back({Prob_tree(2), Prob_tree(2), left, 1.0, 1.0});
  auto pair = posterior_mean_density(output, grid, Base_measure::uniform());
  for (auto i = std::size_t{0}; i != grid.size(); ++i) {
    EXPECT_NEAR(pair.f_y[i], 0.5 * (1.0 + 2.0 * (1.0 - grid[i])), 1e-12);
    EXPECT_NEAR(pair.g_x[i], pair.f_y[i], 1e-12);
    EXPECT_NEAR(pair.x[i], grid[i], 1e-15);
  }
}

TEST(Density_test, posterior_mean_integrates_to_one) {
  auto rng = make_rng(19);
  auto data = std::vector<double>(30);
  for (auto& y : data) { y = draw_beta(rng, 0.7, 2.0); }
  auto config = Chain_config{};
  config.n_burn = 100;
  config.n_iter = 200;
  auto output = run_chain(data, config, rng);
  auto grid = unit_grid(10001);
  auto density = posterior_mean_density(output, grid, Base_measure::uniform());
  auto total = 0.0;
  for (auto i = std::size_t{1}; i < grid.size(); ++i) {
    total += 0.5 * (grid[i] - grid[i - 1]) * (density.f_y[i] + density.f_y[i - 1]);
  }
  EXPECT_NEAR(total, 1.0, 1e-3);
}

TEST(Chain_test, fixed_seed_is_bit_identical) {
  auto data = std::vector<double>{0.1, 0.35, 0.4, 0.8, 0.82};
  auto config = Chain_config{};
  config.n_burn = 50;
  config.n_iter = 100;
  config.hyper.b_prior = Gamma_prior{1.0, 1.0};
  auto r1 = make_rng(20);
  auto r2 = make_rng(20);
  auto o1 = run_chain(data, config, r1);
  auto o2 = run_chain(data, config, r2);
  EXPECT_EQ(chain_summary_json(o1).dump(), chain_summary_json(o2).dump());
  EXPECT_EQ(o1.mean_weights(), o2.mean_weights());
}

TEST(Chain_test, b_proposal_adapts_during_burn_in) {
  auto rng = make_rng(21);
  auto data = std::vector<double>(50);
  for (auto& y : data) { y = draw_beta(rng, 2.0, 2.0); }
  auto config = Chain_config{};
  config.n_burn = 1000;
  config.n_iter = 1000;
  config.smax = 4;
  config.hyper.b_prior = Gamma_prior{2.0, 2.0};
  auto output = run_chain(data, config, rng);
  EXPECT_NE(output.b_proposal_scale, config.b_proposal_scale);
  EXPECT_GT(output.b_acceptance_rate, 0.15);
  EXPECT_LT(output.b_acceptance_rate, 0.6);
}

}  // namespace msbp
