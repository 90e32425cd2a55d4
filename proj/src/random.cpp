#include "msbp/random.h"

#include <algorithm>
#include <cmath>
#include <limits>

namespace msbp {

namespace {

auto splitmix64(std::uint64_t x) -> std::uint64_t {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

auto derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> stream) -> std::uint64_t {
  auto h = splitmix64(master);
  for (auto s : stream) { h = splitmix64(h ^ splitmix64(s + 0x632be59bd9b4e019ULL)); }
  return h;
}

auto draw_uniform(Rng& rng, double lo, double hi) -> double {
  // generate_canonical may return exactly 1.0 in libstdc++; reject it so draws stay in [lo, hi)
  for (;;) {
    auto u = std::generate_canonical<double, 53>(rng);
    if (u < 1.0) { return lo + (hi - lo) * u; }
  }
}

auto draw_gamma(Rng& rng, double shape, double rate) -> double {
  return std::gamma_distribution<double>{shape, 1.0 / rate}(rng);
}

auto draw_beta(Rng& rng, double alpha, double beta) -> double {
  constexpr auto lo = std::numeric_limits<double>::min();
  constexpr auto hi = 1.0 - std::numeric_limits<double>::epsilon() / 2;
  // Be(1, q) and Be(p, 1) invert in closed form; stop probabilities are always Be(1, a).
  if (alpha == 1.0) { return std::clamp(-std::expm1(std::log(draw_uniform(rng)) / beta), lo, hi); }
  if (beta == 1.0) { return std::clamp(std::exp(std::log(draw_uniform(rng)) / alpha), lo, hi); }
  auto x = draw_gamma(rng, alpha, 1.0);
  auto y = draw_gamma(rng, beta, 1.0);
  auto total = x + y;
  // Both shapes tiny enough to underflow: the law is concentrated on {0,1}.
  auto value = total > 0.0 ? x / total : (draw_uniform(rng) < alpha / (alpha + beta) ? 1.0 : 0.0);
  return std::clamp(value, lo, hi);
}

auto draw_normal(Rng& rng, double mean, double sd) -> double {
  return std::normal_distribution<double>{mean, sd}(rng);
}

}  // namespace msbp
