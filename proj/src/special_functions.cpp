#include "expertsurv/special_functions.hpp"

#include <cmath>
#include <limits>
#include <boost/math/special_functions/gamma.hpp>

#include "boost_policy.hpp"

#include "expertsurv/errors.hpp"

namespace expertsurv {
namespace {

constexpr double kEulerGamma = 0.57721566490153286061;
constexpr int kMaxIter = 500;
constexpr double kEps = std::numeric_limits<double>::epsilon();

// E1(x) = -gamma - ln x - sum_{k>=1} (-x)^k / (k k!)
double e1_series(double x) {
  double sum = 0.0;
  double term = 1.0;
  for (int k = 1; k <= kMaxIter; ++k) {
    term *= -x / k;
    const double contrib = term / k;
    sum += contrib;
    if (std::fabs(contrib) < kEps * std::fabs(sum)) return -kEulerGamma - std::log(x) - sum;
  }
  throw NumericError("expint_e1: series did not converge");
}

// e^x E1(x) = 1/(x+1- 1/(x+3- 4/(x+5- ...))), modified Lentz.
double e1_scaled_continued_fraction(double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kMaxIter; ++i) {
    const double a = -static_cast<double>(i) * i;
    b += 2.0;
    d = 1.0 / (a * d + b);
    c = b + a / c;
    const double delta = c * d;
    h *= delta;
    if (std::fabs(delta - 1.0) < kEps) return h;
  }
  throw NumericError("expint_e1: continued fraction did not converge");
}

// Underflow threshold below which the log forms are evaluated directly.
constexpr double kTiny = 1e-280;

// log Q(a, x) = -x + a log x - lgamma(a) + log CF, for x > a + 1.
double log_gamma_q_cf(double a, double x) {
  constexpr double fpmin = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / fpmin;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 10 * kMaxIter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < fpmin) d = fpmin;
    c = b + an / c;
    if (std::fabs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kEps) {
      return -x + a * std::log(x) - boost::math::lgamma(a, detail::MathPolicy()) + std::log(h);
    }
  }
  throw NumericError("log_gamma_q: continued fraction did not converge");
}

// log P(a, x) = -x + a log x - lgamma(a + 1) + log sum_n x^n / ((a+1)...(a+n)).
double log_gamma_p_series(double a, double x) {
  double term = 1.0;
  double sum = 1.0;
  for (int n = 1; n <= 10 * kMaxIter; ++n) {
    term *= x / (a + n);
    sum += term;
    if (term < sum * kEps) {
      return -x + a * std::log(x) - boost::math::lgamma(a + 1.0, detail::MathPolicy()) + std::log(sum);
    }
  }
  throw NumericError("log_gamma_p: series did not converge");
}

}  // namespace

double log_gamma_q(double a, double x) {
  if (!(a > 0.0) || !(x >= 0.0)) throw DomainError("log_gamma_q: need a > 0 and x >= 0");
  if (x == 0.0) return 0.0;
  const double q = boost::math::gamma_q(a, x, detail::MathPolicy());
  if (q > kTiny) return std::log(q);
  if (std::isinf(x)) return -std::numeric_limits<double>::infinity();
  return log_gamma_q_cf(a, x);
}

double log_gamma_p(double a, double x) {
  if (!(a > 0.0) || !(x >= 0.0)) throw DomainError("log_gamma_p: need a > 0 and x >= 0");
  if (x == 0.0) return -std::numeric_limits<double>::infinity();
  const double p = boost::math::gamma_p(a, x, detail::MathPolicy());
  if (p > kTiny) return std::log(p);
  return log_gamma_p_series(a, x);
}

double expint_e1(double x) {
  if (!(x > 0.0)) throw DomainError("expint_e1: x must be positive");
  if (std::isinf(x)) return 0.0;
  if (x < 1.0) return e1_series(x);
  return std::exp(-x) * e1_scaled_continued_fraction(x);
}

double expint_e1_scaled(double x) {
  if (!(x > 0.0)) throw DomainError("expint_e1_scaled: x must be positive");
  if (x < 1.0) return std::exp(x) * e1_series(x);
  if (std::isinf(x)) return 0.0;
  return e1_scaled_continued_fraction(x);
}

double log_add_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}

}  // namespace expertsurv
