#pragma once

#include "rirs/analytic.hpp"
#include "rirs/orlicz.hpp"
#include "rirs/step_variable.hpp"

#include <optional>
#include <string>
#include <vector>

namespace rirs {

/// Trace record for a single norm evaluation (emitted under --trace).
struct NormAudit {
    std::string method;
    std::vector<std::pair<double, double>> bracket;     // Luxemburg (lambda, E[Phi])
    std::vector<std::pair<unsigned, double>> appb_terms;  // (n, tau_n)
    double tail_bound = 0.0;                            // certified sup of the uncomputed terms
};

enum class NormTag { Lp, Orlicz, AppendixB };

/// A tagged rearrangement-invariant norm with a uniform evaluation
/// contract over step and analytic representations.
class NormSpec {
public:
    static NormSpec lp(double p);
    static NormSpec orlicz(OrliczFunction phi);
    static NormSpec appendix_b();

    NormTag tag() const { return tag_; }
    double p() const { return p_; }
    const OrliczFunction& phi() const { return phi_.value(); }
    std::string name() const;

    double step_tolerance = 1e-12;
    double analytic_tolerance = 1e-8;

    double evaluate(const Profile& pr, NormAudit* audit = nullptr) const;
    double evaluate(const StepVariable& x, NormAudit* audit = nullptr) const;
    double evaluate(const AnalyticRearrangement& q, NormAudit* audit = nullptr) const;

    /// C with ||X||_1 <= C ||X||: 1 for Lp and the Appendix-B norm (tau_1
    /// dominates the L1 norm), Phi^{-1}(1) for Luxemburg via Jensen.
    double l1_comparison_constant() const;

private:
    NormTag tag_ = NormTag::Lp;
    double p_ = 1.0;
    std::optional<OrliczFunction> phi_;
};

double lp_norm(const Profile& pr, double p);
double lp_norm(const StepVariable& x, double p);

double luxemburg_norm(const Profile& pr, const OrliczFunction& phi, double rel_tol = 1e-10,
                      NormAudit* audit = nullptr);
double luxemburg_norm(const StepVariable& x, const OrliczFunction& phi, double rel_tol = 1e-12,
                      NormAudit* audit = nullptr);

/// Exact rational Appendix-B norm of a step variable:
/// sup_n n 2^n ∫_0^{s_n} X^*, s_n = 1/(2^n n!). The sup is certified: past
/// the evaluated range the terms are v_max n/n!, strictly decreasing.
Rat appendix_b_norm_step(const StepVariable& x, NormAudit* audit = nullptr);

/// Appendix-B norm of a profile. Exact-rational for pure step mass; the
/// fast merged-walk evaluator for step + staircase atoms (certified tail
/// term 2*sum(scale) + max(scale)); leading-form certified maxima for a
/// single analytic part. Other mixes throw EvaluationError.
double appendix_b_norm(const Profile& pr, NormAudit* audit = nullptr);

/// Exact ∫_0^1 X※ Y※ dt over sorted merges (X※ the decreasing
/// rearrangement of |X|). Equals sup over X' ~ X of E[X'Y] for Y >= 0.
Rat hardy_littlewood_sup_rat(const StepVariable& x, const StepVariable& y);
double hardy_littlewood_sup(const StepVariable& x, const StepVariable& y);

enum class HeartVerdict { InHeart, InSpaceNotHeart, NotInSpace };

struct HeartReport {
    HeartVerdict verdict;
    /// Critical scale when InSpaceNotHeart: E[Phi(q/lambda)] < infinity
    /// exactly for lambda > critical_lambda.
    double critical_lambda = 0.0;
    std::string rule;
};

/// Symbolic convergence classification of ∫ Phi(q/lambda) across lambda.
HeartReport heart_membership(const AnalyticRearrangement& q, const OrliczFunction& phi);

/// Classification extended to profiles (used by the Luxemburg bracket).
HeartReport heart_membership(const Profile& pr, const OrliczFunction& phi);

}  // namespace rirs
