#pragma once

#include <span>

namespace prism {

// Regularized incomplete beta I_x(a, b), continued fraction (modified Lentz)
// to 1e-12 relative.
double regularized_incomplete_beta(double a, double b, double x);

// Two-sided p-value of Student's t statistic with `dof` degrees of freedom.
double student_t_two_sided_p(double t, double dof);

struct PearsonResult {
  double r = 0.0;
  double p = 1.0;  // two-sided, t-distribution with n-2 dof
};

PearsonResult pearson(std::span<const double> x, std::span<const double> y);

double mean(std::span<const double> x);

}  // namespace prism
