#pragma once

namespace stochdyn::special {

/// Regularized lower incomplete gamma P(a, x), a > 0, x >= 0.
double gamma_p(double a, double x);

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
double gamma_q(double a, double x);

/// Upper incomplete gamma Gamma(a, x) = integral_x^inf t^(a-1) e^-t dt, x > 0.
/// Any real a (including negative) is accepted when x > 0; a > 0 also allows x = 0.
/// Uses the power series below x = 1 + a and the Legendre continued fraction
/// above it; relative accuracy is about 1e-14 away from underflow.
double upper_incomplete_gamma(double a, double x);

/// Upper tail probability of the chi-square distribution.
double chi_square_sf(double statistic, double dof);

}  // namespace stochdyn::special
