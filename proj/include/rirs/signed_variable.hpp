#pragma once

#include "rirs/analytic.hpp"
#include "rirs/step_variable.hpp"

#include <optional>
#include <string>
#include <vector>

namespace rirs {

/// A signed random variable: a bounded step head plus analytic tails for
/// the positive and negative parts, with disjoint supports (the analytic
/// mass must fit inside the head's zero-valued cells). Tails are carried
/// distributionally — X+ and X- contributions as restricted decreasing
/// pieces — which is all the law-invariant machinery needs.
class SignedVariable {
public:
    static SignedVariable from_step(StepVariable head);
    /// X = -q(U): pure negative analytic tail.
    static SignedVariable negative_analytic(AnalyticRearrangement q);
    static SignedVariable positive_analytic(AnalyticRearrangement q);
    static SignedVariable make(StepVariable head, std::vector<AnalyticPart> pos,
                               std::vector<AnalyticPart> neg);

    const StepVariable& head() const { return head_; }
    const std::vector<AnalyticPart>& pos_parts() const { return pos_; }
    const std::vector<AnalyticPart>& neg_parts() const { return neg_; }

    bool step_only() const { return pos_.empty() && neg_.empty(); }

    /// Throws EvaluationError if a tail integral diverges.
    double expectation() const;

    /// median(-n, X, n) pointwise; order-converges to X as n grows.
    SignedVariable truncated(double n) const;

    /// X + m: head shifted; tails exchange mass between the positive and
    /// negative side only through bounded pieces, so only constant-free
    /// cases are supported: requires m >= 0 with no positive tails crossing
    /// zero, or step-only input. Throws otherwise.
    SignedVariable shifted(double m) const;

    Profile abs_profile() const;
    Profile negative_profile() const;
    Profile positive_profile() const;

    std::string describe() const;

private:
    SignedVariable() : head_(StepVariable::constant(0.0)) {}

    StepVariable head_;
    std::vector<AnalyticPart> pos_;
    std::vector<AnalyticPart> neg_;
};

/// Probe target for the Y of the lemma: Y = X or Y = X^+.
enum class Lemma31Target { SameX, PositivePart };

/// Y_n = X 1_{A_n^c} + c 1_{A_n^c} + Y 1_{A_n} of the probe lemma for step
/// inputs, with A_n realized as the left interval (0, a]. Throws
/// PreconditionError with a witness when Y >= X fails. Analytic inputs are
/// handled inside the probe itself via closed-form parts.
SignedVariable lemma31_mix_step(const StepVariable& x, const StepVariable& y, double c,
                                const Rat& a);

}  // namespace rirs
