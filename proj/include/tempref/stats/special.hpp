#pragma once

namespace tempref::stats {

/// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);
/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
double gamma_q(double a, double x);
/// Regularized incomplete beta I_x(a, b).
double beta_inc(double a, double b, double x);

/// Upper tail of the chi-square distribution.
double chi2_sf(double x, double df);
/// Upper tail of Student's t.
double student_t_sf(double t, double df);

}  // namespace tempref::stats
