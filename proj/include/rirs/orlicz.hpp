#pragma once

#include "rirs/errors.hpp"

#include <string>
#include <vector>

namespace rirs {

/// An Orlicz function: convex, increasing, non-constant, Phi(0) = 0.
/// Catalog: power Phi(t) = t^p (p >= 1), exp Phi(t) = e^t - 1, and convex
/// piecewise-linear entries. Construction runs a sampled convexity check
/// on a log grid.
class OrliczFunction {
public:
    enum class Kind { Power, Exp, PiecewiseLinear };

    static OrliczFunction power(double p);
    static OrliczFunction exponential();
    /// Knots (t_i, slope_i): slope_i on [t_i, t_{i+1}), t_0 = 0, slopes
    /// nondecreasing and eventually positive.
    static OrliczFunction piecewise_linear(std::vector<std::pair<double, double>> knots);

    Kind kind() const { return kind_; }
    double power_exponent() const { return p_; }

    double operator()(double t) const;
    double derivative_right(double t) const;

    /// Doubling condition; decides heart = space for the catalog.
    bool delta2() const;

    /// Phi^{-1}(y) for y >= 0 (right-continuous inverse); used for the
    /// Eq.(1.2)-style L1 comparison constant Phi^{-1}(1).
    double inverse(double y) const;

    /// Fenchel conjugate Psi(s) = sup{ st - Phi(t) : t >= 0 }. Closed form
    /// for power and exp, bracketed golden-section for piecewise-linear.
    /// Returns +infinity when the sup diverges.
    double conjugate(double s) const;

    std::string name() const;

private:
    OrliczFunction() = default;
    void check_shape() const;

    Kind kind_ = Kind::Power;
    double p_ = 1.0;
    std::vector<std::pair<double, double>> knots_;  // (t, slope)
};

}  // namespace rirs
