#include "rirs/norms.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace rirs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double lfact(unsigned n) { return std::lgamma(static_cast<double>(n) + 1.0); }

bool profile_is_zero(const Profile& pr) {
    for (const auto& c : pr.cells) {
        if (c.value != 0.0) return false;
    }
    return pr.atoms.empty() && pr.analytic.empty();
}

double profile_sup(const Profile& pr) {
    double m = 0.0;
    for (const auto& c : pr.cells) m = std::max(m, c.value);
    if (!pr.atoms.empty()) return kInf;
    for (const auto& ap : pr.analytic) {
        if (ap.lo == 0) {
            m = std::max(m, ap.q.sup_value());
        } else {
            m = std::max(m, ap.q.value(to_double(ap.lo) * (1.0 + 1e-15)));
        }
    }
    return m;
}

}  // namespace

// ---------------------------------------------------------------------------
// NormSpec
// ---------------------------------------------------------------------------

NormSpec NormSpec::lp(double p) {
    if (!(p >= 1.0)) throw SpecError("NormSpec: Lp needs p >= 1");
    NormSpec n;
    n.tag_ = NormTag::Lp;
    n.p_ = p;
    return n;
}

NormSpec NormSpec::orlicz(OrliczFunction phi) {
    NormSpec n;
    n.tag_ = NormTag::Orlicz;
    n.phi_ = std::move(phi);
    return n;
}

NormSpec NormSpec::appendix_b() {
    NormSpec n;
    n.tag_ = NormTag::AppendixB;
    return n;
}

std::string NormSpec::name() const {
    switch (tag_) {
        case NormTag::Lp: {
            std::ostringstream os;
            if (std::isinf(p_)) return "lp:inf";
            os << "lp:" << p_;
            return os.str();
        }
        case NormTag::Orlicz:
            return "orlicz:" + phi_->name();
        case NormTag::AppendixB:
            return "appendix_b";
    }
    return "?";
}

double NormSpec::evaluate(const Profile& pr, NormAudit* audit) const {
    switch (tag_) {
        case NormTag::Lp:
            if (audit) audit->method = "lp";
            return lp_norm(pr, p_);
        case NormTag::Orlicz: {
            bool analytic = !pr.atoms.empty() || !pr.analytic.empty();
            return luxemburg_norm(pr, *phi_, analytic ? analytic_tolerance : step_tolerance,
                                  audit);
        }
        case NormTag::AppendixB:
            return appendix_b_norm(pr, audit);
    }
    return 0.0;
}

double NormSpec::evaluate(const StepVariable& x, NormAudit* audit) const {
    if (tag_ == NormTag::AppendixB) return to_double(appendix_b_norm_step(x, audit));
    return evaluate(Profile::from_step(x), audit);
}

double NormSpec::evaluate(const AnalyticRearrangement& q, NormAudit* audit) const {
    return evaluate(Profile::from_analytic(q), audit);
}

double NormSpec::l1_comparison_constant() const {
    switch (tag_) {
        case NormTag::Lp:
            return 1.0;
        case NormTag::Orlicz:
            return phi_->inverse(1.0);
        case NormTag::AppendixB:
            return 1.0;
    }
    return 1.0;
}

// ---------------------------------------------------------------------------
// Lp
// ---------------------------------------------------------------------------

double lp_norm(const Profile& pr, double p) {
    if (!(p >= 1.0)) throw DomainError("lp_norm: p >= 1 required");
    if (std::isinf(p)) return profile_sup(pr);
    IntegralValue v = (p == 1.0) ? profile_expect_g(pr, GIdentity{})
                                 : profile_expect_g(pr, GPower{p});
    if (v.divergent) return kInf;
    return (p == 1.0) ? v.value : std::pow(v.value, 1.0 / p);
}

double lp_norm(const StepVariable& x, double p) { return lp_norm(Profile::from_step(x), p); }

// ---------------------------------------------------------------------------
// Luxemburg
// ---------------------------------------------------------------------------

double luxemburg_norm(const Profile& pr, const OrliczFunction& phi, double rel_tol,
                      NormAudit* audit) {
    if (audit) audit->method = "luxemburg-bisection";
    if (profile_is_zero(pr)) return 0.0;

    HeartReport hm = heart_membership(pr, phi);
    if (hm.verdict == HeartVerdict::NotInSpace) return kInf;
    double lambda_floor = (hm.verdict == HeartVerdict::InSpaceNotHeart) ? hm.critical_lambda : 0.0;

    auto feasible = [&](double lam) {
        IntegralValue e = profile_expect_g(pr, GPhi{phi, lam});
        if (audit) audit->bracket.emplace_back(lam, e.divergent ? kInf : e.value);
        return !e.divergent && e.value <= 1.0;
    };

    // bracket: grow lambda_hi geometrically until feasible, shrink
    // lambda_lo until infeasible (or the symbolic floor fires)
    double sup = profile_sup(pr);
    double hi = std::max({1.0, std::isinf(sup) ? 1.0 : sup, 2.0 * lambda_floor});
    int guard = 0;
    while (!feasible(hi)) {
        hi *= 2.0;
        if (++guard > 4000) throw EvaluationError("luxemburg: no feasible lambda found");
    }
    double lo = lambda_floor;
    if (lo == 0.0) {
        lo = hi / 2.0;
        while (lo > 1e-300 && feasible(lo)) {
            hi = lo;
            lo /= 2.0;
        }
        if (lo <= 1e-300) return 0.0;
    }
    // E is non-increasing in lambda, so bisection is exact
    for (int it = 0; it < 300 && (hi - lo) > rel_tol * hi; ++it) {
        double mid = 0.5 * (lo + hi);
        (feasible(mid) ? hi : lo) = mid;
    }
    return hi;
}

double luxemburg_norm(const StepVariable& x, const OrliczFunction& phi, double rel_tol,
                      NormAudit* audit) {
    return luxemburg_norm(Profile::from_step(x), phi, rel_tol, audit);
}

// ---------------------------------------------------------------------------
// Appendix-B norm
// ---------------------------------------------------------------------------

Rat appendix_b_norm_step(const StepVariable& x, NormAudit* audit) {
    if (audit) audit->method = "appb-exact-rational";
    std::vector<Cell> cells;
    for (const auto& c : x.cells()) {
        if (c.value != 0.0) cells.push_back({c.width, std::fabs(c.value)});
    }
    if (cells.empty()) return Rat(0);
    std::sort(cells.begin(), cells.end(),
              [](const Cell& a, const Cell& b) { return a.value > b.value; });

    // once s_n fits inside the top cell, tau_n = v_max n / n! exactly and
    // decreases; evaluate up to that point (at least n = 60)
    unsigned n_bar = 1;
    while (appb_scale(n_bar) > cells.front().width && n_bar < 400) ++n_bar;
    unsigned n_eval = std::max(60u, n_bar);

    Rat best = 0;
    Rat vmax = rat_from_double(cells.front().value);
    for (unsigned n = 1; n <= n_eval; ++n) {
        Rat budget = appb_scale(n);
        Rat integral = 0;
        for (const auto& c : cells) {
            Rat take = std::min(budget, c.width);
            integral += take * rat_from_double(c.value);
            budget -= take;
            if (budget == 0) break;
        }
        Rat tau = Rat(n) * Rat(pow2(n)) * integral;
        if (audit) audit->appb_terms.emplace_back(n, to_double(tau));
        if (tau > best) best = tau;
    }
    // certified remainder: tau_n = v_max n/n! for n > n_eval, decreasing
    Rat tail = vmax * Rat(Int(n_eval + 1), factorial(n_eval + 1));
    if (audit) audit->tail_bound = to_double(tail);
    return std::max(best, tail);
}

namespace {

struct WalkEntry {
    double log_value;  // ordering key
    double width;
    double integral;   // value * width computed stably
    double value;      // may be +inf for deep staircase levels
};

// tau terms for cells + staircase atoms via one merged descending walk.
double appb_mixed(const Profile& pr, NormAudit* audit) {
    std::vector<WalkEntry> entries;
    double cell_vmax = 0.0;
    double cell_wtop = 1.0;
    for (const auto& c : pr.cells) {
        if (c.value <= 0.0) continue;
        double w = to_double(c.width);
        entries.push_back({std::log(c.value), w, c.value * w, c.value});
        if (c.value > cell_vmax) {
            cell_vmax = c.value;
            cell_wtop = w;
        }
    }
    double lim_sum = 0.0, lim_max = 0.0;
    for (const auto& a : pr.atoms) {
        lim_sum += a.scale;
        lim_max = std::max(lim_max, a.scale);
        for (unsigned n = a.start_level; n <= 1070; ++n) {
            double w = staircase_level_width(n);
            if (w == 0.0) break;
            double lv = std::log(a.scale) + lfact(n);
            double v = (n <= 170) ? a.scale * std::tgamma(double(n) + 1.0) - a.shift : kInf;
            if (v <= 0.0 && n <= 170) continue;  // shifted away
            // integral via n!(c_n - c_{n+1}) identities to dodge overflow
            double pw = std::ldexp(1.0, -static_cast<int>(n));
            double np1 = static_cast<double>(n) + 1.0;
            double whole = a.scale * (pw / np1 - 0.5 * pw / (np1 * (np1 + 1.0))) - a.shift * w;
            entries.push_back({(n <= 170 && v < kInf) ? std::log(v) : lv, w, whole, v});
        }
    }
    std::sort(entries.begin(), entries.end(),
              [](const WalkEntry& a, const WalkEntry& b) { return a.log_value > b.log_value; });
    std::vector<double> cum_mass(entries.size() + 1, 0.0), cum_int(entries.size() + 1, 0.0);
    for (std::size_t i = 0; i < entries.size(); ++i) {
        cum_mass[i + 1] = cum_mass[i] + entries[i].width;
        cum_int[i + 1] = cum_int[i] + entries[i].integral;
    }
    auto upper_integral = [&](double s) {
        // ∫_0^s of the merged decreasing profile
        std::size_t lo = 0, hi = entries.size();
        while (lo < hi) {  // first index with cum_mass[idx+1] >= s
            std::size_t mid = (lo + hi) / 2;
            if (cum_mass[mid + 1] >= s) hi = mid; else lo = mid + 1;
        }
        if (lo >= entries.size()) return cum_int.back();
        double frac = (s - cum_mass[lo]) / entries[lo].width;
        return cum_int[lo] + frac * entries[lo].integral;
    };

    unsigned n_bar = 1;
    if (cell_vmax > 0.0) {
        while (std::exp(-double(n_bar) * std::log(2.0) - lfact(n_bar)) > cell_wtop && n_bar < 140)
            ++n_bar;
    }
    unsigned n_eval = std::min(std::max(60u, n_bar), 140u);

    double best = 0.0;
    for (unsigned n = 1; n <= n_eval; ++n) {
        double s = std::exp(-double(n) * std::log(2.0) - lfact(n));
        double tau = double(n) * std::ldexp(1.0, int(n)) * upper_integral(s);
        if (audit) audit->appb_terms.emplace_back(n, tau);
        best = std::max(best, tau);
    }
    // Certified tail for n > n_eval: the pure-tail terms stay strictly
    // below, and converge to, 2*sum(scale) + max(scale); the bounded step
    // part adds at most v_max (n+1)/(n+1)!.
    double tail = 0.0;
    if (!pr.atoms.empty()) tail = 2.0 * lim_sum + lim_max;
    if (cell_vmax > 0.0) tail += cell_vmax * std::exp(std::log(double(n_eval + 1)) - lfact(n_eval + 1));
    if (audit) audit->tail_bound = tail;
    return std::max(best, tail);
}

// Certified sup of tau_n over n > 60 for a single analytic part whose
// leading segment has one of the catalog forms.
double appb_analytic_tail_sup(const Segment& lead) {
    if (lead.hi < appb_scale(61)) {
        throw EvaluationError("appendix-b norm: leading segment thinner than s_61");
    }
    double v0 = lead.sup_value();
    if (!std::isinf(v0)) {
        // bounded leading values: tau_n <= v0 n/n!, decreasing
        return v0 * std::exp(std::log(61.0) - lfact(61));
    }
    if (std::holds_alternative<StaircaseForm>(lead.form)) {
        return 3.0 * lead.scale;  // sup of the scaled staircase terms
    }
    if (std::holds_alternative<PowerForm>(lead.form)) {
        const auto& f = std::get<PowerForm>(lead.form);
        double e = f.exponent;
        double lc = std::log(lead.scale * f.coeff / (1.0 - e));
        // log tau_n = lc + ln n + n ln2 - (1-e)(n ln2 + lfact(n)); unimodal
        auto lt = [&](double n) {
            return lc + std::log(n) + n * std::log(2.0) -
                   (1.0 - e) * (n * std::log(2.0) + std::lgamma(n + 1.0));
        };
        double lo = 61.0, hi = 61.0;
        while (lt(hi * 2.0) > lt(hi)) {
            hi *= 2.0;
            if (hi > 1e70) throw EvaluationError("appendix-b norm: tail sup out of range");
        }
        hi *= 2.0;
        for (int it = 0; it < 400 && hi - lo > 0.5; ++it) {
            double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
            if (lt(m1) < lt(m2)) lo = m1; else hi = m2;
        }
        double peak = std::max(lt(std::floor(lo)), lt(std::ceil(hi)));
        peak = std::max(peak, lt(61.0));
        if (peak > 700.0) throw EvaluationError("appendix-b norm: value exceeds double range");
        return std::exp(peak);
    }
    const auto& f = std::get<LogPowerForm>(lead.form);
    // tau_n <= scale*coeff * n 2^n Γ(p+1, L_n) with L_n = ln(2^n n!);
    // Γ(p+1, L) <= 2 L^p e^{-L} for L >= 2(p+1): terms in log space
    double p = f.power;
    double best = 0.0;
    double prev = kInf;
    int rising = 0;
    for (unsigned n = 61; n <= 4000; ++n) {
        double Ln = double(n) * std::log(2.0) + lfact(n);
        double lt = std::log(2.0 * lead.scale * f.coeff) + std::log(double(n)) + p * std::log(Ln) -
                    lfact(n);
        double term = std::exp(lt);
        best = std::max(best, term);
        if (term > prev) {
            if (++rising > 50) throw EvaluationError("appendix-b norm: log tail not settling");
        }
        if (term < best * 1e-9 && n > 80) break;
        prev = term;
    }
    return best;
}

}  // namespace

double appendix_b_norm(const Profile& pr, NormAudit* audit) {
    if (pr.analytic.empty()) {
        if (pr.atoms.empty()) {
            if (audit) audit->method = "appb-exact-rational";
            // exact rational over the step mass
            std::vector<Cell> cells = pr.cells;
            Rat used = 0;
            for (const auto& c : cells) used += c.width;
            if (used > 1) throw StructuralError("appendix_b_norm: profile mass exceeds 1");
            if (used < 1) cells.push_back({Rat(1) - used, 0.0});
            return to_double(appendix_b_norm_step(StepVariable(std::move(cells)), audit));
        }
        if (audit) audit->method = "appb-merged-walk";
        return appb_mixed(pr, audit);
    }
    if (pr.analytic.size() == 1 && pr.atoms.empty()) {
        bool cells_zero = true;
        for (const auto& c : pr.cells) cells_zero &= (c.value == 0.0);
        if (cells_zero && pr.analytic[0].lo == 0 && pr.analytic[0].hi == 1) {
            if (audit) audit->method = "appb-analytic";
            const AnalyticRearrangement& q = pr.analytic[0].q;
            double best = 0.0;
            for (unsigned n = 1; n <= 60; ++n) {
                IntegralValue v = integrate_g(q, GIdentity{}, appb_scale(n));
                if (v.divergent) throw EvaluationError("appendix_b_norm: divergent partial integral");
                double tau = to_double(Rat(Int(n) * pow2(n))) * v.value;
                if (audit) audit->appb_terms.emplace_back(n, tau);
                best = std::max(best, tau);
            }
            double tail = appb_analytic_tail_sup(q.leading());
            if (audit) audit->tail_bound = tail;
            return std::max(best, tail);
        }
    }
    throw EvaluationError("appendix_b_norm: unsupported mixed representation");
}

// ---------------------------------------------------------------------------
// Hardy-Littlewood
// ---------------------------------------------------------------------------

Rat hardy_littlewood_sup_rat(const StepVariable& x, const StepVariable& y) {
    StepVariable xs = decreasing_rearrangement(x);
    StepVariable ys = decreasing_rearrangement(y);
    return pointwise_product_expectation_rat(xs, ys);
}

double hardy_littlewood_sup(const StepVariable& x, const StepVariable& y) {
    return to_double(hardy_littlewood_sup_rat(x, y));
}

// ---------------------------------------------------------------------------
// Heart membership
// ---------------------------------------------------------------------------

namespace {

HeartReport classify_segment(const Segment& lead, const OrliczFunction& phi) {
    double v0 = lead.sup_value();
    if (!std::isinf(v0)) {
        return {HeartVerdict::InHeart, 0.0, "bounded leading values: L-infinity subset of the heart"};
    }
    switch (phi.kind()) {
        case OrliczFunction::Kind::Power: {
            double p = phi.power_exponent();
            if (std::holds_alternative<PowerForm>(lead.form)) {
                double e = std::get<PowerForm>(lead.form).exponent;
                if (e * p < 1.0) return {HeartVerdict::InHeart, 0.0, "t^(-b) with b*p < 1"};
                return {HeartVerdict::NotInSpace, 0.0, "t^(-b) with b*p >= 1"};
            }
            if (std::holds_alternative<LogPowerForm>(lead.form)) {
                return {HeartVerdict::InHeart, 0.0, "log power vs polynomial Phi"};
            }
            if (std::holds_alternative<StaircaseForm>(lead.form)) {
                if (p <= 1.0) return {HeartVerdict::InHeart, 0.0, "staircase integrable, p <= 1"};
                return {HeartVerdict::NotInSpace, 0.0, "(n!)^p outgrows 2^n (n+1)! for p > 1"};
            }
            break;
        }
        case OrliczFunction::Kind::Exp: {
            if (std::holds_alternative<PowerForm>(lead.form)) {
                return {HeartVerdict::NotInSpace, 0.0, "exp of a power tail diverges at every scale"};
            }
            if (std::holds_alternative<LogPowerForm>(lead.form)) {
                const auto& f = std::get<LogPowerForm>(lead.form);
                if (f.power < 1.0) {
                    return {HeartVerdict::InHeart, 0.0, "subexponential: exp((ln 1/t)^p), p < 1"};
                }
                if (f.power == 1.0) {
                    double lam_star = lead.scale * f.coeff;
                    return {HeartVerdict::InSpaceNotHeart, lam_star,
                            "t^(-c/lambda) integrable exactly for lambda > c"};
                }
                return {HeartVerdict::NotInSpace, 0.0, "exp((ln 1/t)^p) diverges for p > 1"};
            }
            if (std::holds_alternative<StaircaseForm>(lead.form)) {
                return {HeartVerdict::NotInSpace, 0.0, "exp(n!) outgrows every level width"};
            }
            break;
        }
        case OrliczFunction::Kind::PiecewiseLinear:
            return {HeartVerdict::InHeart, 0.0, "linear-growth Phi on an integrable tail"};
    }
    throw ClassificationError("heart_membership: no decision rule for this (form, Phi) pair");
}

}  // namespace

HeartReport heart_membership(const AnalyticRearrangement& q, const OrliczFunction& phi) {
    return classify_segment(q.leading(), phi);
}

HeartReport heart_membership(const Profile& pr, const OrliczFunction& phi) {
    HeartReport out{HeartVerdict::InHeart, 0.0, "bounded step mass"};
    if (!pr.atoms.empty()) {
        Segment s{Rat(0), Rat(1), StaircaseForm{}, pr.atoms[0].scale, pr.atoms[0].shift};
        out = classify_segment(s, phi);
        if (out.verdict == HeartVerdict::NotInSpace) return out;
    }
    for (const auto& ap : pr.analytic) {
        // parts restricted away from 0 carry bounded values
        if (ap.lo > 0) continue;
        HeartReport r = classify_segment(ap.q.leading(), phi);
        if (r.verdict == HeartVerdict::NotInSpace) return r;
        if (r.verdict == HeartVerdict::InSpaceNotHeart) {
            if (out.verdict == HeartVerdict::InHeart || r.critical_lambda > out.critical_lambda) {
                out = r;
            }
        }
    }
    return out;
}

}  // namespace rirs
