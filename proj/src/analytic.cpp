#include "rirs/analytic.hpp"

#include "rirs/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace rirs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSqrtPi = 1.7724538509055160273;

double lfact(unsigned n) { return std::lgamma(static_cast<double>(n) + 1.0); }

double fact_d(unsigned n) {
    return n > 170 ? kInf : std::tgamma(static_cast<double>(n) + 1.0);
}

// Level of the factorial staircase to the left of t: the n with
// c_{n+1} < t <= c_n; 0 for t > c_1 = 1/4. Works in log space.
unsigned staircase_level_left(double t) {
    if (t > 0.25) return 0;
    double lt = std::log(t);
    unsigned n = 1;
    while (staircase_breakpoint_log(n + 1) >= lt) {
        ++n;
        if (n > 100000) throw EvaluationError("staircase level: t too small");
    }
    return n;
}

}  // namespace

double staircase_breakpoint_log(unsigned n) {
    return -static_cast<double>(n) * std::log(2.0) - lfact(n + 1);
}

double staircase_level_width(unsigned n) {
    // c_n - c_{n+1} = c_n (1 - 1/(2(n+2)))
    return std::exp(staircase_breakpoint_log(n)) * (1.0 - 0.5 / (static_cast<double>(n) + 2.0));
}

double staircase_tail_integral(unsigned from_level) {
    // T(N) = sum_{n>=N} n!(c_n - c_{n+1})
    //      = sum_{n>=N} [ 2^-n/(n+1) - 2^-(n+1)/((n+1)(n+2)) ]
    double acc = 0.0;
    for (unsigned n = from_level; n < from_level + 240 && n < 1070; ++n) {
        double p = std::ldexp(1.0, -static_cast<int>(n));
        if (p == 0.0) break;
        double np1 = static_cast<double>(n) + 1.0;
        acc += p / np1 - 0.5 * p / (np1 * (np1 + 1.0));
    }
    return acc;
}

// ---------------------------------------------------------------------------
// Segment values
// ---------------------------------------------------------------------------

double Segment::base_value(double t) const {
    if (std::holds_alternative<ConstantForm>(form)) return std::get<ConstantForm>(form).c;
    if (std::holds_alternative<PowerForm>(form)) {
        const auto& f = std::get<PowerForm>(form);
        return f.coeff * std::pow(t, -f.exponent);
    }
    if (std::holds_alternative<LogPowerForm>(form)) {
        const auto& f = std::get<LogPowerForm>(form);
        return f.coeff * std::pow(std::log(1.0 / t), f.power);
    }
    if (t >= 0.25) return 0.0;
    return fact_d(staircase_level_left(t * (1.0 + 1e-15)) /* level containing t */);
}

double Segment::value(double t) const {
    double v = scale * base_value(t) - shift;
    v = std::min(std::max(v, 0.0), cap);
    if (v < drop_below) v = 0.0;
    return v;
}

double Segment::sup_value() const {
    double raw;
    if (lo == 0) {
        raw = std::holds_alternative<ConstantForm>(form) ? std::get<ConstantForm>(form).c : kInf;
    } else if (std::holds_alternative<StaircaseForm>(form)) {
        // value just right of lo
        unsigned n = staircase_level_left(to_double(lo) * (1.0 + 1e-12));
        if (lo >= Rat(1, 4)) n = 0;
        raw = (n == 0) ? 0.0 : fact_d(n);
    } else {
        raw = base_value(to_double(lo));
    }
    double v = std::isinf(raw) ? kInf : scale * raw - shift;
    v = std::min(std::max(v, 0.0), cap);
    if (v < drop_below) v = 0.0;
    return v;
}

double Segment::inf_value() const { return value(to_double(hi)); }

// ---------------------------------------------------------------------------
// AnalyticRearrangement
// ---------------------------------------------------------------------------

AnalyticRearrangement::AnalyticRearrangement(std::vector<Segment> segments)
    : segments_(std::move(segments)) {
    if (segments_.empty()) throw StructuralError("AnalyticRearrangement: no segments");
    Rat pos = 0;
    for (auto& s : segments_) {
        if (s.lo != pos) throw StructuralError("AnalyticRearrangement: segments must tile (0,1]");
        if (s.hi <= s.lo || s.hi > 1) throw StructuralError("AnalyticRearrangement: bad interval");
        if (s.scale <= 0) throw StructuralError("AnalyticRearrangement: scale must be positive");
        if (std::holds_alternative<PowerForm>(s.form)) {
            const auto& f = std::get<PowerForm>(s.form);
            if (!(f.exponent > 0 && f.exponent < 1) || f.coeff < 0) {
                throw StructuralError("AnalyticRearrangement: power form needs 0 < b < 1, a >= 0");
            }
        }
        if (std::holds_alternative<LogPowerForm>(s.form)) {
            const auto& f = std::get<LogPowerForm>(s.form);
            if (!(f.power > 0) || f.coeff < 0) {
                throw StructuralError("AnalyticRearrangement: log form needs p > 0, c >= 0");
            }
        }
        pos = s.hi;
    }
    if (pos < 1) {
        segments_.push_back({pos, Rat(1), ConstantForm{0.0}});
    }
    for (std::size_t i = 0; i + 1 < segments_.size(); ++i) {
        double left = segments_[i].inf_value();
        double right = segments_[i + 1].sup_value();
        if (right > left * (1.0 + 1e-12) + 1e-12) {
            std::ostringstream os;
            os << "AnalyticRearrangement: increasing across boundary " << rat_str(segments_[i].hi)
               << " (" << left << " -> " << right << ")";
            throw StructuralError(os.str());
        }
    }
}

AnalyticRearrangement AnalyticRearrangement::constant(double c) {
    if (c < 0) throw StructuralError("constant rearrangement: negative value");
    return AnalyticRearrangement({Segment{Rat(0), Rat(1), ConstantForm{c}}});
}

AnalyticRearrangement AnalyticRearrangement::power_tail(double coeff, double exponent) {
    return AnalyticRearrangement({Segment{Rat(0), Rat(1), PowerForm{coeff, exponent}}});
}

AnalyticRearrangement AnalyticRearrangement::log_tail(double coeff, double power) {
    return AnalyticRearrangement({Segment{Rat(0), Rat(1), LogPowerForm{coeff, power}}});
}

AnalyticRearrangement AnalyticRearrangement::staircase() {
    return AnalyticRearrangement({Segment{Rat(0), Rat(1), StaircaseForm{}}});
}

AnalyticRearrangement AnalyticRearrangement::log_affine(double a, double b, const Rat& upto) {
    if (a <= 0) throw StructuralError("log_affine: need a > 0");
    std::vector<Segment> segs;
    Segment s{Rat(0), upto, LogPowerForm{1.0, 1.0}, a, -b, kInf};
    segs.push_back(s);
    return AnalyticRearrangement(std::move(segs));
}

double AnalyticRearrangement::value(double t) const {
    if (!(t > 0.0 && t < 1.0)) throw DomainError("AnalyticRearrangement::value: t outside (0,1)");
    Rat tr = rat_from_double(t);
    for (const auto& s : segments_) {
        if (tr <= s.hi) return s.value(t);
    }
    return segments_.back().value(t);
}

double AnalyticRearrangement::sup_value() const { return segments_.front().sup_value(); }

AnalyticRearrangement AnalyticRearrangement::shifted_down(double r) const {
    if (r < 0) throw DomainError("shifted_down: negative shift");
    std::vector<Segment> segs = segments_;
    for (auto& s : segs) {
        s.shift += r;
        if (s.cap != kInf) s.cap = std::max(0.0, s.cap - r);
        if (s.drop_below > 0) s.drop_below = std::max(0.0, s.drop_below - r);
    }
    return AnalyticRearrangement(std::move(segs));
}

AnalyticRearrangement AnalyticRearrangement::capped(double n) const {
    if (n < 0) throw DomainError("capped: negative level");
    std::vector<Segment> segs = segments_;
    for (auto& s : segs) s.cap = std::min(s.cap, n);
    return AnalyticRearrangement(std::move(segs));
}

AnalyticRearrangement AnalyticRearrangement::cropped_below(double r) const {
    if (r < 0) throw DomainError("cropped_below: negative threshold");
    std::vector<Segment> segs = segments_;
    for (auto& s : segs) s.drop_below = std::max(s.drop_below, r);
    return AnalyticRearrangement(std::move(segs));
}

AnalyticRearrangement AnalyticRearrangement::scaled(double a) const {
    if (a <= 0) throw DomainError("scaled: need a > 0");
    std::vector<Segment> segs = segments_;
    for (auto& s : segs) {
        s.scale *= a;
        s.shift *= a;
        if (s.cap != kInf) s.cap *= a;
        s.drop_below *= a;
    }
    return AnalyticRearrangement(std::move(segs));
}

// ---------------------------------------------------------------------------
// Integration
// ---------------------------------------------------------------------------

namespace {

double g_eval(const ScalarG& g, double x) {
    if (std::holds_alternative<GIdentity>(g)) return x;
    if (std::holds_alternative<GPower>(g)) return x == 0.0 ? 0.0 : std::pow(x, std::get<GPower>(g).p);
    const auto& gp = std::get<GPhi>(g);
    return gp.phi(x / gp.lambda);
}

// Largest t in (0, limit] with scale*f(t) - shift >= y (y >= 0); 0 if never.
double crossing_point(const SegmentForm& form, double scale, double shift, double y,
                      double limit) {
    double target = (y + shift) / scale;  // want f(t) >= target
    if (std::holds_alternative<ConstantForm>(form)) {
        return std::get<ConstantForm>(form).c >= target ? limit : 0.0;
    }
    if (std::holds_alternative<PowerForm>(form)) {
        const auto& f = std::get<PowerForm>(form);
        if (target <= 0) return limit;
        if (f.coeff <= 0) return 0.0;
        if (target <= f.coeff) return limit;  // f >= coeff on (0,1]
        double t = std::pow(f.coeff / target, 1.0 / f.exponent);
        return std::min(t, limit);
    }
    if (std::holds_alternative<LogPowerForm>(form)) {
        const auto& f = std::get<LogPowerForm>(form);
        if (target <= 0) return limit;
        if (f.coeff <= 0) return 0.0;
        double L = std::pow(target / f.coeff, 1.0 / f.power);
        return std::min(std::exp(-L), limit);
    }
    // staircase: f(t) >= target first at t < c_{n*}, n* = min{n : n! >= target}
    if (target <= 0) return limit;
    if (target <= 1.0) return std::min(0.25, limit);
    double lt = std::log(target);
    unsigned n = 1;
    while (lfact(n) < lt && n < 100000) ++n;
    return std::min(std::exp(staircase_breakpoint_log(n)), limit);
}

// ∫_a^b (ln(1/t))^p dt = Γ(p+1, ln(1/b)) - Γ(p+1, ln(1/a)); a == 0 drops
// the second term. Closed forms for p in {1/2, 1, 3/2, 2}; quadrature else.
double log_moment(double p, double a, double b) {
    double Lb = std::log(1.0 / b);
    auto gamma_upper = [&](double x) -> double {
        if (p == 1.0) return (x + 1.0) * std::exp(-x);
        if (p == 2.0) return (x * x + 2.0 * x + 2.0) * std::exp(-x);
        if (p == 0.5) return 0.5 * kSqrtPi * std::erfc(std::sqrt(x)) + std::sqrt(x) * std::exp(-x);
        if (p == 1.5) {
            double g12 = 0.5 * kSqrtPi * std::erfc(std::sqrt(x)) + std::sqrt(x) * std::exp(-x);
            return 1.5 * g12 + std::pow(x, 1.5) * std::exp(-x);
        }
        return -1.0;
    };
    double gb = gamma_upper(Lb);
    if (gb >= 0.0) {
        return (a == 0.0) ? gb : gb - gamma_upper(std::log(1.0 / a));
    }
    auto f = [&](double y) { return std::pow(y, p) * std::exp(-y); };
    if (a == 0.0) return integrate_to_infinity(f, Lb);
    return integrate_gk(f, Lb, std::log(1.0 / a));
}

// ∫ e^{alpha*sqrt(L) - L} dL over [L0, L1]; L1 may be +infinity.
double exp_sqrt_integral(double alpha, double L0, double L1) {
    auto G = [&](double x) {
        return std::exp(-x * x) + 0.5 * alpha * kSqrtPi * std::erfc(x);
    };
    double head = std::exp(0.25 * alpha * alpha);
    double hi_term = std::isinf(L1) ? 0.0 : G(std::sqrt(L1) - 0.5 * alpha);
    return head * (G(std::sqrt(L0) - 0.5 * alpha) - hi_term);
}

// Contribution of staircase levels over (a, b], values (scale*n! - shift)^+.
// The caller has already handled cap plateaus and drop regions. a == 0.0
// triggers the symbolic divergence rules.
IntegralValue staircase_sum(double scale, double shift, const ScalarG& g, double a, double b) {
    double hi_clip = std::min(b, 0.25);
    if (hi_clip <= a) return IntegralValue::finite(0.0);

    // normalize Phi-power to a plain power integrand
    ScalarG gg = g;
    double eff_scale = scale;
    if (std::holds_alternative<GPhi>(g) &&
        std::get<GPhi>(g).phi.kind() == OrliczFunction::Kind::Power) {
        eff_scale = scale / std::get<GPhi>(g).lambda;
        gg = GPower{std::get<GPhi>(g).phi.power_exponent()};
    }
    bool identity = std::holds_alternative<GIdentity>(gg);
    bool power = std::holds_alternative<GPower>(gg);
    double p = power ? std::get<GPower>(gg).p : 1.0;
    bool phi_exp = std::holds_alternative<GPhi>(gg) &&
                   std::get<GPhi>(gg).phi.kind() == OrliczFunction::Kind::Exp;
    bool phi_pwl = std::holds_alternative<GPhi>(gg) &&
                   std::get<GPhi>(gg).phi.kind() == OrliczFunction::Kind::PiecewiseLinear;

    if (a == 0.0) {
        // e^{n!} beats (n+1)! 2^n for every scale; (n!)^p beats it for p > 1
        if (phi_exp) return IntegralValue::infinite();
        if (power && p > 1.0) return IntegralValue::infinite();
    }

    unsigned n = staircase_level_left(hi_clip);
    double acc = 0.0;
    int idle = 0;
    for (; n <= 1100; ++n) {
        double cn = std::exp(staircase_breakpoint_log(n));
        double cn1 = std::exp(staircase_breakpoint_log(n + 1));
        if (a > 0.0 && cn <= a) break;
        double lo_edge = std::max(cn1, a);
        double hi_edge = std::min(cn, hi_clip);
        if (hi_edge <= lo_edge) continue;
        bool full_level = (lo_edge == cn1) && (hi_edge == cn);

        // switch to the exact series once the shift stops biting (identity
        // and pwl tails are affine in the value there)
        double vn_log = std::log(scale) + lfact(n);
        bool shift_negligible = (shift == 0.0) || vn_log > std::log(std::max(shift, 1e-300)) + 35.0;
        if (a == 0.0 && full_level && shift_negligible) {
            if (identity) {
                acc += scale * staircase_tail_integral(n) - shift * cn;
                return IntegralValue::finite(acc);
            }
            if (phi_pwl) {
                const auto& gp = std::get<GPhi>(gg);
                // beyond the last knot Phi is affine: Phi(v) = s_max v - off
                double t_last = 0.0, off = 0.0;
                double s_max = gp.phi.derivative_right(1e18);
                // Phi(v) = Phi(t_last) + s_max (v - t_last) for v >= t_last;
                // pick t_last large enough that every remaining value passes it
                t_last = 1e6;
                off = s_max * t_last - gp.phi(t_last);
                double vlam = scale / gp.lambda;
                if (vn_log - std::log(gp.lambda) > std::log(t_last) + 2.0) {
                    acc += s_max * (vlam * staircase_tail_integral(n) - (shift / gp.lambda) * cn) -
                           off * cn;
                    return IntegralValue::finite(acc);
                }
            }
        }

        double term;
        if (power && n > 150) {
            // log space; shift is negligible at this depth
            double lw = std::log1p(-0.5 / (static_cast<double>(n) + 2.0)) +
                        staircase_breakpoint_log(n);
            double width_log = lw + std::log((hi_edge - lo_edge) / (cn - cn1 + 1e-300));
            term = std::exp(p * (std::log(eff_scale) + lfact(n)) + width_log);
        } else {
            double fv = fact_d(n);
            if (std::isinf(fv)) {
                if (identity) {
                    // exact identity: n!(c_n - c_{n+1}) = 2^-n/(n+1) - ...
                    double pw = std::ldexp(1.0, -static_cast<int>(n));
                    double np1 = static_cast<double>(n) + 1.0;
                    double whole = scale * (pw / np1 - 0.5 * pw / (np1 * (np1 + 1.0)));
                    term = whole * ((hi_edge - lo_edge) / (cn - cn1 + 1e-300));
                } else {
                    throw EvaluationError("staircase integrand overflows double");
                }
            } else {
                double v = std::max(0.0, scale * fv - shift);
                term = g_eval(g, v) * (hi_edge - lo_edge);
            }
        }
        acc += term;
        if (a == 0.0) {
            if (term <= 1e-18 * std::max(1e-300, acc)) {
                if (++idle >= 4) break;
            } else {
                idle = 0;
            }
        }
    }
    return IntegralValue::finite(acc);
}

// Raw integral of g((scale*f - shift)^+) over (a, b], no cap, no drop.
IntegralValue raw_integral(const SegmentForm& form, double scale, double shift, const ScalarG& g,
                           double a, double b) {
    if (b <= a) return IntegralValue::finite(0.0);

    if (std::holds_alternative<StaircaseForm>(form)) {
        return staircase_sum(scale, shift, g, a, b);
    }

    if (std::holds_alternative<ConstantForm>(form)) {
        double v = std::max(0.0, scale * std::get<ConstantForm>(form).c - shift);
        return IntegralValue::finite(g_eval(g, v) * (b - a));
    }

    ScalarG gg = g;
    double eff_scale = scale, eff_shift = shift;
    if (std::holds_alternative<GPhi>(g) &&
        std::get<GPhi>(g).phi.kind() == OrliczFunction::Kind::Power) {
        double lam = std::get<GPhi>(g).lambda;
        eff_scale = scale / lam;
        eff_shift = shift / lam;
        gg = GPower{std::get<GPhi>(g).phi.power_exponent()};
    }

    if (std::holds_alternative<PowerForm>(form)) {
        const auto& f = std::get<PowerForm>(form);
        if (std::holds_alternative<GIdentity>(gg)) {
            double e = f.exponent;
            double head = eff_scale * f.coeff *
                          (std::pow(b, 1.0 - e) - std::pow(a, 1.0 - e)) / (1.0 - e);
            return IntegralValue::finite(head - eff_shift * (b - a));
        }
        if (std::holds_alternative<GPower>(gg)) {
            double p = std::get<GPower>(gg).p;
            double u = eff_scale * f.coeff;
            double ep = f.exponent * p;
            if (a == 0.0 && ep >= 1.0) return IntegralValue::infinite();
            if (eff_shift == 0.0) {
                double val = (std::fabs(ep - 1.0) < 1e-14 && a > 0.0)
                                 ? std::pow(u, p) * std::log(b / a)
                                 : std::pow(u, p) *
                                       (std::pow(b, 1.0 - ep) - std::pow(a, 1.0 - ep)) /
                                       (1.0 - ep);
                return IntegralValue::finite(val);
            }
            auto integrand = [&](double y) {
                double v = std::max(0.0, u * std::exp(y * f.exponent) - eff_shift);
                return std::pow(v, p) * std::exp(-y);
            };
            double y_lo = std::log(1.0 / b);
            if (a == 0.0) return IntegralValue::finite(integrate_to_infinity(integrand, y_lo));
            return IntegralValue::finite(integrate_gk(integrand, y_lo, std::log(1.0 / a)));
        }
        // exp (or piecewise) Phi on a power tail: diverges whenever the
        // segment touches 0 under exp; piecewise-linear grows linearly and
        // behaves like identity.
        const auto& gp = std::get<GPhi>(gg);
        if (gp.phi.kind() == OrliczFunction::Kind::Exp && a == 0.0) {
            return IntegralValue::infinite();
        }
        auto integrand = [&](double y) {
            double v = std::max(0.0, scale * f.coeff * std::exp(y * f.exponent) - shift);
            return gp.phi(v / gp.lambda) * std::exp(-y);
        };
        double y_lo = std::log(1.0 / b);
        if (a == 0.0) return IntegralValue::finite(integrate_to_infinity(integrand, y_lo));
        double top = (scale * f.coeff * std::pow(a, -f.exponent) - shift) / gp.lambda;
        if (gp.phi.kind() == OrliczFunction::Kind::Exp && top > 700.0) {
            throw EvaluationError("analytic: exp overflow on power segment");
        }
        return IntegralValue::finite(integrate_gk(integrand, y_lo, std::log(1.0 / a)));
    }

    const auto& f = std::get<LogPowerForm>(form);
    if (std::holds_alternative<GIdentity>(gg)) {
        double val = eff_scale * f.coeff * log_moment(f.power, a, b) - eff_shift * (b - a);
        return IntegralValue::finite(val);
    }
    if (std::holds_alternative<GPower>(gg)) {
        double p = std::get<GPower>(gg).p;
        double kappa = eff_scale * f.coeff;
        if (eff_shift == 0.0) {
            return IntegralValue::finite(std::pow(kappa, p) * log_moment(f.power * p, a, b));
        }
        auto integrand = [&](double y) {
            double v = std::max(0.0, kappa * std::pow(y, f.power) - eff_shift);
            return std::pow(v, p) * std::exp(-y);
        };
        double y_lo = std::log(1.0 / b);
        if (a == 0.0) return IntegralValue::finite(integrate_to_infinity(integrand, y_lo));
        return IntegralValue::finite(integrate_gk(integrand, y_lo, std::log(1.0 / a)));
    }
    const auto& gp = std::get<GPhi>(gg);
    double lam = gp.lambda;
    double Lb = std::log(1.0 / b);
    double La = (a == 0.0) ? kInf : std::log(1.0 / a);
    if (gp.phi.kind() == OrliczFunction::Kind::Exp) {
        double alpha = scale * f.coeff / lam;
        double delta = shift / lam;
        if (f.power == 1.0) {
            if (a == 0.0 && alpha >= 1.0) return IntegralValue::infinite();
            // ∫_{Lb}^{La} e^{alpha L - delta - L} dL, kept stable as alpha -> 1
            double one = 1.0 - alpha;
            double head;
            if (std::isinf(La)) {
                head = std::exp(-delta - one * Lb) / one;
            } else if (std::fabs(one) < 1e-12) {
                head = std::exp(-delta - one * Lb) * (La - Lb);
            } else {
                head = std::exp(-delta - one * Lb) * (-std::expm1(-one * (La - Lb))) / one;
            }
            return IntegralValue::finite(head - (b - a));
        }
        if (f.power > 1.0) {
            if (a == 0.0) return IntegralValue::infinite();
            double top = (scale * f.coeff * std::pow(La, f.power) - shift) / lam;
            if (top > 700.0) throw EvaluationError("analytic: exp overflow on log segment");
            auto integrand = [&](double y) {
                double v = std::max(0.0, scale * f.coeff * std::pow(y, f.power) - shift);
                return std::expm1(v / lam) * std::exp(-y);
            };
            return IntegralValue::finite(integrate_gk(integrand, Lb, La));
        }
        if (f.power == 0.5) {
            double head = std::exp(-delta) * exp_sqrt_integral(alpha, Lb, La);
            return IntegralValue::finite(head - (b - a));
        }
        auto integrand = [&](double y) {
            double v = std::max(0.0, scale * f.coeff * std::pow(y, f.power) - shift);
            return std::expm1(v / lam) * std::exp(-y);
        };
        if (a == 0.0) return IntegralValue::finite(integrate_to_infinity(integrand, Lb));
        return IntegralValue::finite(integrate_gk(integrand, Lb, La));
    }
    // piecewise-linear Phi: linear growth, converges like the identity
    auto integrand = [&](double y) {
        double v = std::max(0.0, scale * f.coeff * std::pow(y, f.power) - shift);
        return gp.phi(v / lam) * std::exp(-y);
    };
    if (a == 0.0) return IntegralValue::finite(integrate_to_infinity(integrand, Lb));
    return IntegralValue::finite(integrate_gk(integrand, Lb, La));
}

// One segment's contribution over (a, b] ⊆ (seg.lo, seg.hi].
IntegralValue segment_integral(const Segment& seg, const ScalarG& g, double a, double b) {
    if (b <= a) return IntegralValue::finite(0.0);
    if (seg.drop_below > seg.cap) return IntegralValue::finite(0.0);  // everything dropped

    double t_cap = std::isinf(seg.cap)
                       ? 0.0
                       : crossing_point(seg.form, seg.scale, seg.shift, seg.cap, b);
    double live_level = std::max(seg.drop_below, 0.0);
    double t_live = crossing_point(seg.form, seg.scale, seg.shift, live_level, b);

    double acc = 0.0;
    double cap_hi = std::min(t_cap, b);
    if (cap_hi > a) {
        acc += g_eval(g, seg.cap) * (cap_hi - a);
    }
    double raw_lo = std::max(a, cap_hi);
    double raw_hi = std::min(b, t_live);
    if (raw_hi > raw_lo) {
        IntegralValue r = raw_integral(seg.form, seg.scale, seg.shift, g, raw_lo, raw_hi);
        if (r.divergent) return r;
        acc += r.value;
    }
    return IntegralValue::finite(acc);
}

}  // namespace

IntegralValue integrate_g(const AnalyticRearrangement& q, const ScalarG& g, const Rat& a,
                          const Rat& b) {
    if (a < 0 || b > 1 || b <= a) throw DomainError("integrate_g: need 0 <= a < b <= 1");
    double acc = 0.0;
    for (const auto& seg : q.segments()) {
        Rat lo = std::max(a, seg.lo);
        Rat hi = std::min(b, seg.hi);
        if (hi <= lo) continue;
        double lod = (lo == 0) ? 0.0 : to_double(lo);
        IntegralValue r = segment_integral(seg, g, lod, to_double(hi));
        if (r.divergent) return r;
        acc += r.value;
    }
    return IntegralValue::finite(acc);
}

IntegralValue integrate_g(const AnalyticRearrangement& q, const ScalarG& g, const Rat& upto) {
    if (upto <= 0 || upto > 1) throw DomainError("integrate_g: s outside (0,1]");
    return integrate_g(q, g, Rat(0), upto);
}

// ---------------------------------------------------------------------------
// Profile
// ---------------------------------------------------------------------------

Rat Profile::explicit_mass() const {
    Rat m = 0;
    for (const auto& c : cells) m += c.width;
    for (const auto& a : atoms) m += staircase_breakpoint(a.start_level);
    for (const auto& p : analytic) m += p.mass();
    return m;
}

Profile Profile::from_step(const StepVariable& x) {
    Profile p;
    for (const auto& c : x.cells()) {
        if (c.value != 0.0) p.cells.push_back({c.width, std::fabs(c.value)});
    }
    return p;
}

Profile Profile::from_analytic(const AnalyticRearrangement& q) {
    Profile p;
    p.analytic.push_back({q, Rat(0), Rat(1)});
    return p;
}

Profile Profile::shifted_down(double r) const {
    Profile out;
    for (const auto& c : cells) {
        if (c.value > r) out.cells.push_back({c.width, c.value - r});
    }
    for (auto a : atoms) {
        a.shift += r;
        out.atoms.push_back(a);
    }
    for (const auto& ap : analytic) out.analytic.push_back({ap.q.shifted_down(r), ap.lo, ap.hi});
    return out;
}

Profile Profile::cropped_below(double r) const {
    Profile out;
    for (const auto& c : cells) {
        if (c.value >= r) out.cells.push_back(c);
    }
    for (auto a : atoms) {
        // drop the low levels whose value (scale n! - shift)^+ is below r
        unsigned n = a.start_level;
        while (n < 100000) {
            double v = a.scale * fact_d(n) - a.shift;
            if (std::isinf(fact_d(n)) || v >= r) break;
            ++n;
        }
        a.start_level = n;
        out.atoms.push_back(a);
    }
    for (const auto& ap : analytic) out.analytic.push_back({ap.q.cropped_below(r), ap.lo, ap.hi});
    return out;
}

IntegralValue profile_expect_g(const Profile& p, const ScalarG& g) {
    double acc = 0.0;
    for (const auto& c : p.cells) acc += g_eval(g, c.value) * to_double(c.width);
    for (const auto& a : p.atoms) {
        // levels n >= start_level occupy (0, c_{start_level}]
        double upto = std::exp(staircase_breakpoint_log(a.start_level));
        IntegralValue r = staircase_sum(a.scale, a.shift, g, 0.0, upto);
        if (r.divergent) return r;
        acc += r.value;
    }
    for (const auto& ap : p.analytic) {
        IntegralValue r = integrate_g(ap.q, g, ap.lo, ap.hi);
        if (r.divergent) return r;
        acc += r.value;
    }
    return IntegralValue::finite(acc);
}

}  // namespace rirs
