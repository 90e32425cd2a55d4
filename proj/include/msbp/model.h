#pragma once

#include <optional>

#include "msbp/random.h"
#include "msbp/special.h"
#include "msbp/tree.h"

namespace msbp {

// Gamma prior with shape/rate parameterization.
struct Gamma_prior {
  double shape = 1.0;
  double rate = 1.0;

  auto mean() const -> double { return shape / rate; }
};

// S_{s,h} ~ Be(1, a) controls how fast mass moves to finer scales; R_{s,h} ~ Be(b, b) controls
// how evenly it splits left/right.  Optional gamma priors make a and b random.
struct Hyperparams {
  double a = 1.0;
  double b = 1.0;
  std::optional<Gamma_prior> a_prior;
  std::optional<Gamma_prior> b_prior;

  auto validate() const -> void;  // throws std::domain_error
};

// One random density: stop and right-descent trees plus the cached truncated weights.
struct Msbp_draw {
  Prob_tree stop;
  Prob_tree right;
  Prob_tree weights;

  static auto from_trees(Prob_tree stop, Prob_tree right) -> Msbp_draw;
};

auto sample_prior_trees(const Hyperparams& hyper, int smax, Rng& rng) -> Msbp_draw;

struct Observation {
  double y;
  Node_id stopped_at;
};

// Descend from the root: stop with probability S, else go right with probability R.
auto sample_observation(const Msbp_draw& draw, Rng& rng) -> Observation;

// Same walk, but S and R are drawn lazily along the path from a fresh prior tree truncated at
// `smax`.  Distributionally identical to sample_prior_trees + sample_observation.
auto sample_prior_predictive(const Hyperparams& hyper, int smax, Rng& rng) -> Observation;

// f(y) = sum_{s,h} pi_{s,h} Be(y; h, 2^s - h + 1).  y must lie in (0,1).
auto density_at(const Prob_tree& weights, double y) -> double;
auto density_at(const Prob_tree& weights, const Bernstein_basis& basis, double y) -> double;

// Mixture CDF via regularized incomplete beta functions; y in [0,1].
auto cdf_at(const Prob_tree& weights, double y) -> double;

struct Weight_moments {
  double mean;
  double variance;
};

// Prior mean and variance of pi_{s,h} (identical for every h at scale s).
auto weight_moments(double a, double b, int scale) -> Weight_moments;

// Probability two subjects share the scale-s cluster.
auto cocluster_prob(double a, double b, int scale) -> double;

// Expected scale at which an observation is generated (untruncated process).
auto expected_scale(double a) -> double;

// Upper bound on the prior variance of the total-variation distance between the scale-s
// truncation and the full random measure.
auto tv_variance_bound(double a, int scale) -> double;

}  // namespace msbp
