#include "rirs/signed_variable.hpp"

#include <cmath>
#include <sstream>

namespace rirs {

SignedVariable SignedVariable::from_step(StepVariable head) {
    SignedVariable v;
    v.head_ = std::move(head);
    return v;
}

SignedVariable SignedVariable::negative_analytic(AnalyticRearrangement q) {
    SignedVariable v;
    v.neg_.push_back({std::move(q), Rat(0), Rat(1)});
    return v;
}

SignedVariable SignedVariable::positive_analytic(AnalyticRearrangement q) {
    SignedVariable v;
    v.pos_.push_back({std::move(q), Rat(0), Rat(1)});
    return v;
}

SignedVariable SignedVariable::make(StepVariable head, std::vector<AnalyticPart> pos,
                                    std::vector<AnalyticPart> neg) {
    Rat tail_mass = 0;
    for (const auto& p : pos) {
        if (p.lo < 0 || p.hi > 1 || p.hi <= p.lo) throw StructuralError("SignedVariable: bad part");
        tail_mass += p.mass();
    }
    for (const auto& p : neg) {
        if (p.lo < 0 || p.hi > 1 || p.hi <= p.lo) throw StructuralError("SignedVariable: bad part");
        tail_mass += p.mass();
    }
    Rat zero_mass = 0;
    for (const auto& c : head.cells()) {
        if (c.value == 0.0) zero_mass += c.width;
    }
    if (tail_mass > zero_mass) {
        throw StructuralError("SignedVariable: analytic tails need " + rat_str(tail_mass) +
                              " of zero head mass, only " + rat_str(zero_mass) + " available");
    }
    SignedVariable v;
    v.head_ = std::move(head);
    v.pos_ = std::move(pos);
    v.neg_ = std::move(neg);
    return v;
}

double SignedVariable::expectation() const {
    double e = head_.expectation();
    for (const auto& p : pos_) {
        IntegralValue v = integrate_g(p.q, GIdentity{}, p.lo, p.hi);
        if (v.divergent) throw EvaluationError("SignedVariable: positive tail not integrable");
        e += v.value;
    }
    for (const auto& p : neg_) {
        IntegralValue v = integrate_g(p.q, GIdentity{}, p.lo, p.hi);
        if (v.divergent) throw EvaluationError("SignedVariable: negative tail not integrable");
        e -= v.value;
    }
    return e;
}

SignedVariable SignedVariable::truncated(double n) const {
    if (n < 0) throw DomainError("truncated: negative level");
    SignedVariable v;
    v.head_ = head_.clamped(n);
    for (const auto& p : pos_) v.pos_.push_back({p.q.capped(n), p.lo, p.hi});
    for (const auto& p : neg_) v.neg_.push_back({p.q.capped(n), p.lo, p.hi});
    return v;
}

SignedVariable SignedVariable::shifted(double m) const {
    if (step_only()) return from_step(head_.shifted(m));
    // X + m: the negative tail loses m (values (q - m)^+), but the stretch
    // of tail with q < m flips sign into a bounded piece. We support the
    // cash-invariance uses: tails unbounded so the flipped piece is bounded
    // and lands in the head mass. Only the distributional bookkeeping of
    // the bounded remainder is involved; we keep it analytic via caps.
    throw PreconditionError("SignedVariable::shifted: supported for step-only variables; "
                            "shift analytic inputs through the measure's cash-invariance instead");
}

Profile SignedVariable::abs_profile() const {
    Profile pr;
    for (const auto& c : head_.cells()) {
        if (c.value != 0.0) pr.cells.push_back({c.width, std::fabs(c.value)});
    }
    for (const auto& p : pos_) pr.analytic.push_back(p);
    for (const auto& p : neg_) pr.analytic.push_back(p);
    return pr;
}

Profile SignedVariable::negative_profile() const {
    Profile pr;
    for (const auto& c : head_.cells()) {
        if (c.value < 0.0) pr.cells.push_back({c.width, -c.value});
    }
    for (const auto& p : neg_) pr.analytic.push_back(p);
    return pr;
}

Profile SignedVariable::positive_profile() const {
    Profile pr;
    for (const auto& c : head_.cells()) {
        if (c.value > 0.0) pr.cells.push_back({c.width, c.value});
    }
    for (const auto& p : pos_) pr.analytic.push_back(p);
    return pr;
}

std::string SignedVariable::describe() const {
    std::ostringstream os;
    os << "step[" << head_.size() << " cells]";
    if (!pos_.empty()) os << " + " << pos_.size() << " pos tail(s)";
    if (!neg_.empty()) os << " - " << neg_.size() << " neg tail(s)";
    return os.str();
}

SignedVariable lemma31_mix_step(const StepVariable& x, const StepVariable& y, double c,
                                const Rat& a) {
    if (c < 0) throw PreconditionError("lemma31_mix: c must be >= 0");
    if (a <= 0 || a >= 1) throw DomainError("lemma31_mix: mass outside (0,1)");
    // A = (0, a]; on A take y, elsewhere x + c
    StepVariable xs = x.split_at({a});
    StepVariable ys = y.split_at({a});
    Refinement r = refine(xs, ys);
    std::vector<Cell> cells(r.widths.size());
    Rat pos = 0;
    for (std::size_t i = 0; i < r.widths.size(); ++i) {
        bool in_a = pos < a;
        double xv = r.a_values[i], yv = r.b_values[i];
        if (yv < xv - 1e-12 * std::max(1.0, std::fabs(xv))) {
            std::ostringstream os;
            os << "lemma31_mix: Y < X at mass " << rat_str(pos) << " (" << yv << " < " << xv << ")";
            throw PreconditionError(os.str());
        }
        cells[i] = {r.widths[i], in_a ? yv : xv + c};
        pos += r.widths[i];
    }
    return SignedVariable::from_step(StepVariable(std::move(cells)));
}

}  // namespace rirs
