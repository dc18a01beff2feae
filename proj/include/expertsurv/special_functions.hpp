#pragma once

namespace expertsurv {

/// Exponential integral E1(x) = Gamma(0, x) for x > 0.
///
/// Power series below x = 1, modified-Lentz continued fraction above.
double expint_e1(double x);

/// e^x * E1(x), computed without forming e^x so it stays finite for large x.
double expint_e1_scaled(double x);

/// Upper incomplete gamma at zero shape, Gamma(0, x) = E1(x).
inline double upper_incomplete_gamma_zero(double x) { return expint_e1(x); }

/// log of the regularized upper incomplete gamma Q(a, x); stays finite
/// after Q itself underflows.
double log_gamma_q(double a, double x);

/// log of the regularized lower incomplete gamma P(a, x); stays finite
/// after P itself underflows.
double log_gamma_p(double a, double x);

/// log(exp(a) + exp(b)) without overflow; -inf operands are absorbed.
double log_add_exp(double a, double b);

}  // namespace expertsurv
