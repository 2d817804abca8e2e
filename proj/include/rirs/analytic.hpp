#pragma once

#include "rirs/errors.hpp"
#include "rirs/orlicz.hpp"
#include "rirs/rational.hpp"
#include "rirs/step_variable.hpp"

#include <limits>
#include <optional>
#include <variant>
#include <vector>

namespace rirs {

// ---------------------------------------------------------------------------
// Closed-form catalog for decreasing functions on (0,1).
// ---------------------------------------------------------------------------

/// f(t) = c.
struct ConstantForm {
    double c;
};

/// f(t) = coeff * t^(-exponent), 0 < exponent < 1 (integrability).
struct PowerForm {
    double coeff;
    double exponent;
};

/// f(t) = coeff * (ln(1/t))^power, power > 0.
struct LogPowerForm {
    double coeff;
    double power;
};

/// f(t) = n! on [c_{n+1}, c_n) with c_n = 1/(2^n (n+1)!), f = 0 on [c_1, 1).
struct StaircaseForm {};

using SegmentForm = std::variant<ConstantForm, PowerForm, LogPowerForm, StaircaseForm>;

/// One closed-form piece on the interval (lo, hi], with the pointwise
/// transform value(t) = min( (scale*f(t) - shift)^+ , cap ). The transform
/// keeps the catalog closed under the operations the library needs:
/// (q - r)^+, q /\ n, scaling, and scaled equidistributed copies.
struct Segment {
    Rat lo;
    Rat hi;
    SegmentForm form;
    double scale = 1.0;
    double shift = 0.0;
    double cap = std::numeric_limits<double>::infinity();
    double drop_below = 0.0;  // value v becomes 0 where v < drop_below

    double base_value(double t) const;  // f(t) before the transform
    double value(double t) const;
    /// sup over the interval = value at lo+ (may be +infinity).
    double sup_value() const;
    /// inf over the interval = value at hi.
    double inf_value() const;
    bool is_staircase() const { return std::holds_alternative<StaircaseForm>(form); }
};

/// Scalar integrand g for integrate_g: identity, x^p, or Phi(x/lambda).
struct GIdentity {};
struct GPower {
    double p;
};
struct GPhi {
    OrliczFunction phi;
    double lambda;
};
using ScalarG = std::variant<GIdentity, GPower, GPhi>;

/// Value or symbolic +infinity. Divergence is decided per catalog segment
/// (by exponent comparison), never by overflow of a quadrature.
struct IntegralValue {
    double value = 0.0;
    bool divergent = false;

    static IntegralValue finite(double v) { return {v, false}; }
    static IntegralValue infinite() { return {std::numeric_limits<double>::infinity(), true}; }
};

/// A non-increasing, non-negative function q on (0,1) assembled from
/// catalog segments; all tails that a finite grid cannot carry live here.
/// Segments must tile (0, 1] in order (a trailing zero segment is appended
/// when the given ones stop early) and be non-increasing across boundaries.
class AnalyticRearrangement {
public:
    explicit AnalyticRearrangement(std::vector<Segment> segments);

    static AnalyticRearrangement constant(double c);
    static AnalyticRearrangement power_tail(double coeff, double exponent);
    /// coeff * (ln(1/t))^power on all of (0,1].
    static AnalyticRearrangement log_tail(double coeff, double power);
    /// The Appendix-B function sum_n n! 1_{[c_{n+1}, c_n)}.
    static AnalyticRearrangement staircase();
    /// (a*ln(1/t) + b)^+ on (0, upto], zero after; b may be negative.
    static AnalyticRearrangement log_affine(double a, double b, const Rat& upto);

    const std::vector<Segment>& segments() const { return segments_; }
    const Segment& leading() const { return segments_.front(); }

    double value(double t) const;
    /// q(0+); +infinity for unbounded leading forms.
    double sup_value() const;

    /// (q - r)^+ pointwise.
    AnalyticRearrangement shifted_down(double r) const;
    /// q /\ n pointwise.
    AnalyticRearrangement capped(double n) const;
    /// q * 1_{q >= r} pointwise.
    AnalyticRearrangement cropped_below(double r) const;
    /// a*q, a > 0.
    AnalyticRearrangement scaled(double a) const;

private:
    std::vector<Segment> segments_;
};

/// Integral of g(q(t)) over (0, upto]. Closed form where the catalog
/// admits it, adaptive quadrature with the t = e^(-u) substitution near 0
/// otherwise; divergence classified symbolically per segment.
IntegralValue integrate_g(const AnalyticRearrangement& q, const ScalarG& g, const Rat& upto);

/// Same, over the sub-interval (a, b].
IntegralValue integrate_g(const AnalyticRearrangement& q, const ScalarG& g, const Rat& a,
                          const Rat& b);

// ---------------------------------------------------------------------------
// Factorial staircase helpers (shared with the Appendix-B machinery).
// ---------------------------------------------------------------------------

/// T(N) = sum_{n >= N} n! (c_n - c_{n+1}), by direct summation of the
/// positive series (geometric decay, no cancellation).
double staircase_tail_integral(unsigned from_level);

/// Exact value of one staircase level width in doubles: c_n - c_{n+1}.
double staircase_level_width(unsigned n);

/// log(c_n) for large-n work in log space.
double staircase_breakpoint_log(unsigned n);

// ---------------------------------------------------------------------------
// Distributional profile of a non-negative variable: the shape norm
// evaluators consume. Step mass, factorial-staircase tail atoms, and
// general analytic parts; missing mass is zero.
// ---------------------------------------------------------------------------

/// Values (scale*n! - shift)^+ on widths c_n - c_{n+1}, n >= start_level.
/// Total mass c_{start_level}.
struct StaircaseAtom {
    double scale = 1.0;
    double shift = 0.0;
    unsigned start_level = 1;
};

struct AnalyticPart {
    AnalyticRearrangement q;
    Rat lo;  // contributes q restricted to (lo, hi]
    Rat hi;

    Rat mass() const { return hi - lo; }
};

struct Profile {
    std::vector<Cell> cells;  // any order; widths sum to <= 1 with the rest
    std::vector<StaircaseAtom> atoms;
    std::vector<AnalyticPart> analytic;

    Rat explicit_mass() const;
    static Profile from_step(const StepVariable& x);  // takes |x|
    static Profile from_analytic(const AnalyticRearrangement& q);

    Profile shifted_down(double r) const;   // (x - r)^+ in distribution
    Profile cropped_below(double r) const;  // x 1_{x >= r}
    bool step_only() const { return atoms.empty() && analytic.empty(); }
};

/// E[g(x)] for a profile; additive over parts.
IntegralValue profile_expect_g(const Profile& p, const ScalarG& g);

}  // namespace rirs
