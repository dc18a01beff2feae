#pragma once

#include <functional>

namespace expertsurv::numerics {

struct Integral {
  double value = 0.0;
  double error = 0.0;
};

/// Adaptive Gauss-Kronrod (61-point) quadrature. Either bound may be infinite.
Integral integrate(const std::function<double(double)>& f, double a, double b,
                   double rel_tol = 1e-12, unsigned max_depth = 15);

/// Root of a monotone function on [lo, hi]; the bracket must contain a sign change.
double find_root(const std::function<double(double)>& f, double lo, double hi,
                 double abs_tol = 1e-14);

}  // namespace expertsurv::numerics
