#pragma once

#include <cstdint>
#include <random>

namespace ouvol {

using Rng = std::mt19937_64;

/// Mixes two 64-bit values into a child seed (splitmix64 finalizer).
/// Stream k of a master seed is make_stream(master, k); nested splits
/// chain hash_combine calls.
std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b);

Rng make_stream(std::uint64_t master, std::uint64_t k);

/// Uniform draw on [0, 1) with 53 random bits.
double uniform01(Rng& rng);

/// Exponential with the given rate (mean 1/rate).
double sample_exponential(Rng& rng, double rate);

/// Standard normal via Box-Muller; two uniforms per draw, no cached spare,
/// so the stream position is independent of call history.
double sample_normal(Rng& rng);

/// Poisson count by CDF inversion (exact given the uniform draw).  Falls
/// back to std::poisson_distribution for means large enough to underflow
/// the inversion start value.
std::uint64_t sample_poisson(Rng& rng, double mean);

}  // namespace ouvol
