#pragma once

#include "rirs/errors.hpp"

#include <cmath>
#include <functional>

namespace rirs {

/// Adaptive Gauss-Kronrod 7/15 on a finite interval. The integrand must be
/// finite on (a, b); accuracy target is absolute + relative mixed.
double integrate_gk(const std::function<double(double)>& f, double a, double b,
                    double tol = 1e-11, int max_depth = 48);

/// Integral over (u0, infinity) of a decaying integrand, by geometric
/// panels; stops once a panel contributes below tol relative to the
/// accumulated value. Throws EvaluationError if no decay is detected.
double integrate_to_infinity(const std::function<double(double)>& f, double u0,
                             double tol = 1e-11);

}  // namespace rirs
