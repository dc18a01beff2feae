#include "expertsurv/numerics.hpp"

#include <cmath>
#include <cstdint>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include "expertsurv/errors.hpp"

namespace expertsurv::numerics {

Integral integrate(const std::function<double(double)>& f, double a, double b, double rel_tol,
                   unsigned max_depth) {
  if (a == b) return {};
  Integral out;
  double l1 = 0.0;
  out.value = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, max_depth,
                                                                            rel_tol, &out.error, &l1);
  if (!std::isfinite(out.value)) throw NumericError("integrate: non-finite result");
  return out;
}

double find_root(const std::function<double(double)>& f, double lo, double hi, double abs_tol) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0) == (fhi > 0)) throw NumericError("find_root: bracket does not contain a root");
  std::uintmax_t iters = 200;
  auto tol = [abs_tol](double x, double y) { return std::fabs(x - y) <= abs_tol * (1.0 + std::fabs(x)); };
  auto r = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, tol, iters);
  return 0.5 * (r.first + r.second);
}

}  // namespace expertsurv::numerics
