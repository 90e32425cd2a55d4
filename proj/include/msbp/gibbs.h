#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "msbp/base_measure.h"
#include "msbp/model.h"
#include "msbp/random.h"
#include "msbp/tree.h"

namespace msbp {

struct Chain_config {
  int n_burn = 1000;
  int n_iter = 2000;
  int smax = 6;
  int thin = 1;
  std::uint64_t seed = 0;
  Hyperparams hyper{.a = 10.0, .b = 1.0, .a_prior = Gamma_prior{5.0, 0.5}, .b_prior = std::nullopt};
  int grid_size = 1001;
  double b_proposal_scale = 0.2;
  bool adapt_b_proposal = true;

  auto validate() const -> void;  // throws Config_error
};

// Per-node sufficient statistics: stops n, pass-throughs v (stoppers included) and right moves r.
struct Count_trees {
  Count_tree stops;
  Count_tree visits;
  Count_tree rights;
};

struct Subject_allocation {
  double slice = 0.0;
  Node_id node;
};

// Weights of the current sweep together with per-scale masses and log weights.
struct Allocation_context {
  explicit Allocation_context(Prob_tree weights);

  Prob_tree weights;
  Prob_tree log_weights;
  std::vector<double> masses;
};

// Slice-sampler allocation of one subject.  `log_kernels` holds log Be(y_i; h, 2^s-h+1) for every
// node in tree layout; `current_scale` is the subject's scale from the previous sweep.
// `retries` counts fresh slice draws forced by an empty candidate set.
auto allocate_subject(std::span<const double> log_kernels,
                      const Allocation_context& context,
                      int current_scale,
                      Rng& rng,
                      std::int64_t* retries = nullptr) -> Subject_allocation;

// n from the stopping nodes, then v and r by one upward pass: v = n + v_left + v_right and
// r = v_right.
auto accumulate_counts(std::span<const Node_id> allocations, int smax) -> Count_trees;
auto check_counts(const Count_trees& counts) -> bool;

struct Sr_trees {
  Prob_tree stop;
  Prob_tree right;
};

// Conjugate beta updates for every node above the deepest scale, which stops surely.
// Nodes with no visitors receive fresh prior draws.  With `pin_root_stop`, S_{0,1} = 0.
auto update_sr(const Count_trees& counts, double a, double b, Rng& rng, bool pin_root_stop = false) -> Sr_trees;

// Deepest occupied scale (0 when nobody is allocated).
auto max_occupied_scale(const Count_trees& counts) -> int;

// Scales whose S and R enter the hyperparameter updates: 0..min(occupied, smax-1).
// Returns -1 when no scale qualifies (smax == 0).
auto hyper_update_top_scale(int occupied_scale, int smax) -> int;

// Full conditional of a: Ga(shape + #nodes, rate - sum log(1 - S)) over scales 0..top_scale.
auto a_full_conditional(const Prob_tree& stop, int top_scale, Gamma_prior prior) -> Gamma_prior;
auto update_a(const Prob_tree& stop, int top_scale, Gamma_prior prior, Rng& rng) -> double;

// Unnormalized log full conditional of b: Ga(delta, lambda) prior times Be(R; b, b) likelihood.
auto log_b_target(double b, const Prob_tree& right, int top_scale, Gamma_prior prior) -> double;

struct B_update {
  double b;
  bool accepted;
};

// One Metropolis-Hastings step on log b with a Gaussian proposal.
auto update_b(const Prob_tree& right, int top_scale, Gamma_prior prior, double b_current,
              double proposal_scale, Rng& rng) -> B_update;

struct Retained_draw {
  Prob_tree stop;
  Prob_tree right;
  Prob_tree weights;
  double a;
  double b;
};

struct Chain_output {
  std::vector<Retained_draw> draws;
  std::vector<double> a_trace;  // every iteration, burn-in included
  std::vector<double> b_trace;
  std::vector<int> occupied_scale_trace;
  // Per retained iteration: number of subjects at each scale.
  std::vector<std::vector<std::int64_t>> scale_occupancy;
  double b_acceptance_rate = 0.0;
  double b_proposal_scale = 0.0;
  std::int64_t slice_retries = 0;
  int included_nodes_last = 0;
  int smax = 0;

  auto mean_weights() const -> Prob_tree;
};

// One full Gibbs sweep state; exposed so sampler-correctness checks can drive single sweeps.
struct Chain_state {
  Prob_tree stop;
  Prob_tree right;
  double a;
  double b;
  std::vector<Node_id> allocations;
};

struct Sweep_diagnostics {
  int occupied_scale = 0;
  int included_nodes = 0;
  bool b_accepted = false;
};

// Precomputed log kernels for every subject (subject-major, tree layout).
auto subject_log_kernels(std::span<const double> data_y, int smax) -> std::vector<double>;

// allocate -> counts -> S,R -> a -> b, then redraw nodes deeper than the hyperparameter window
// from their prior given the new a and b.
auto gibbs_sweep(Chain_state& state, std::span<const double> log_kernels, const Hyperparams& hyper,
                 double b_proposal_scale, Rng& rng, std::int64_t* retries = nullptr) -> Sweep_diagnostics;

auto initial_state(std::size_t n_subjects, const Chain_config& config, Rng& rng) -> Chain_state;

auto run_chain(std::span<const double> data_y, const Chain_config& config, Rng& rng) -> Chain_output;

struct Density_grid {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> f_y;
  std::vector<double> g_x;
};

// Uniform y-grid on [0,1] with the end points nudged to the clamp bounds.
auto unit_grid(int points) -> std::vector<double>;

// Pointwise posterior mean density; by linearity this is the density of the averaged weights.
auto posterior_mean_density(const Chain_output& output, std::span<const double> y_grid, const Base_measure& base)
    -> Density_grid;

auto chain_summary_json(const Chain_output& output) -> nlohmann::json;
auto write_density_csv(const Density_grid& grid, const std::filesystem::path& path) -> void;

}  // namespace msbp
