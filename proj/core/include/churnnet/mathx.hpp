#pragma once

#include <functional>

namespace churnnet::mathx {

// Regularized lower incomplete gamma P(a, x).
double regularized_gamma_p(double a, double x);

// Chi-square survival function, 1 - CDF(x; df).
double chi_square_sf(double x, double df);

double log_beta(double a, double b);

// Regularized incomplete beta I_x(a, b).
double regularized_beta(double x, double a, double b);

// F-distribution survival function.
double f_dist_sf(double x, double d1, double d2);

// Beta(a, b) density at x in [0, 1].
double beta_pdf(double x, double a, double b);

// Adaptive Simpson quadrature of f over [lo, hi] with absolute tolerance tol.
double integrate_adaptive(const std::function<double(double)>& f, double lo,
                          double hi, double tol);

}  // namespace churnnet::mathx
