#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace ouvol {

/// Pairwise (cascade) summation; error grows like log n instead of n.
inline double pairwise_sum(std::span<const double> v) {
  const std::size_t n = v.size();
  if (n <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;  // standard error of the mean
};

inline MeanSe mean_se(std::span<const double> v) {
  MeanSe out;
  const std::size_t n = v.size();
  if (n == 0) return out;
  out.mean = pairwise_sum(v) / static_cast<double>(n);
  if (n < 2) return out;
  double ss = 0.0;
  for (double x : v) {
    const double d = x - out.mean;
    ss += d * d;
  }
  out.se = std::sqrt(ss / (static_cast<double>(n) * (n - 1.0)));
  return out;
}

}  // namespace ouvol
