#pragma once

namespace gradeloop::analytics {

/// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);
/// Regularized upper incomplete gamma Q(a, x).
double incomplete_gamma_q(double a, double x);

double student_t_cdf(double t, double df);
/// P(|T| >= |t|).
double student_t_two_sided_p(double t, double df);
/// Inverse of student_t_cdf for p in (0, 1).
double student_t_quantile(double p, double df);

/// P(X >= x) for a chi-square variable with k degrees of freedom.
double chi_square_sf(double x, double k);

}  // namespace gradeloop::analytics
