#pragma once

// Special functions behind the survival p-values. Series and continued
// fractions evaluated to double precision; no external dependency.

namespace tasil::special {

// Regularized lower incomplete gamma P(a, x), a > 0, x >= 0.
double gamma_p(double a, double x);
// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x), computed directly.
double gamma_q(double a, double x);

// Regularized incomplete beta I_x(a, b), a, b > 0, 0 <= x <= 1.
double beta_inc(double a, double b, double x);

double chi_square_cdf(double x, double df);
// Upper tail 1 - CDF without cancellation.
double chi_square_sf(double x, double df);

double student_t_cdf(double t, double df);
// P(|T| >= |t|).
double student_t_two_sided(double t, double df);

double normal_cdf(double z);
// P(|Z| >= |z|).
double normal_two_sided(double z);

}  // namespace tasil::special
