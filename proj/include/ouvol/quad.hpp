#pragma once

#include <functional>
#include <utility>
#include <vector>

namespace ouvol {

/// Composite Simpson on [a, b] with n subintervals (n is rounded up to even).
double simpson(const std::function<double(double)>& f, double a, double b, int n);

/// Adaptive Simpson to absolute tolerance tol.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol, int max_depth = 40);

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Legendre rule with n points on [-1, 1].
QuadratureRule gauss_legendre(int n);

/// Gauss-Legendre rule mapped onto [a, b].
QuadratureRule gauss_legendre(int n, double a, double b);

}  // namespace ouvol
