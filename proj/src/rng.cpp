#include "ouvol/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace ouvol {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(a) ^ (b + 0x9e3779b97f4a7c15ULL));
}

Rng make_stream(std::uint64_t master, std::uint64_t k) {
  return Rng(hash_combine(master, k));
}

double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double sample_exponential(Rng& rng, double rate) {
  if (rate <= 0.0) throw std::invalid_argument("sample_exponential: rate must be positive");
  // -log(1-U) keeps the draw finite: U in [0,1) so 1-U in (0,1].
  return -std::log1p(-uniform01(rng)) / rate;
}

double sample_normal(Rng& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
}

std::uint64_t sample_poisson(Rng& rng, double mean) {
  if (mean < 0.0) throw std::invalid_argument("sample_poisson: mean must be nonnegative");
  if (mean == 0.0) return 0;
  if (mean > 500.0) {
    std::poisson_distribution<std::uint64_t> dist(mean);
    return dist(rng);
  }
  const double u = uniform01(rng);
  double p = std::exp(-mean);
  double cum = p;
  std::uint64_t k = 0;
  while (u > cum) {
    ++k;
    p *= mean / static_cast<double>(k);
    cum += p;
    if (k > 1000000) break;  // unreachable for mean <= 500; guards FP stalls
  }
  return k;
}

}  // namespace ouvol
