#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace msbp {

using Rng = std::mt19937_64;

// Mixes a master seed with stream indices (replicate, site, group...) into an
// independent-looking seed.  Uses the splitmix64 finalizer per component.
auto derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> stream) -> std::uint64_t;

inline auto make_rng(std::uint64_t seed) -> Rng { return Rng{seed}; }

auto draw_uniform(Rng& rng, double lo = 0.0, double hi = 1.0) -> double;

// Gamma with shape/rate parameterization.
auto draw_gamma(Rng& rng, double shape, double rate) -> double;

// Beta(alpha, beta) via two gammas.  The result is kept strictly inside (0,1) so
// that log(x) and log(1-x) stay finite downstream.
auto draw_beta(Rng& rng, double alpha, double beta) -> double;

auto draw_normal(Rng& rng, double mean, double sd) -> double;

}  // namespace msbp
