#pragma once

#include "rirs/norms.hpp"
#include "rirs/rng.hpp"
#include "rirs/signed_variable.hpp"
#include "rirs/step_variable.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace rirs {

// ---------------------------------------------------------------------------
// Concrete functionals
// ---------------------------------------------------------------------------

/// ES_alpha(X) = -(1/alpha) ∫_0^alpha q_X(t) dt, exact on step functions.
/// Sign convention: positions are gains, rho is a capital requirement
/// (cash invariance rho(X + m) = rho(X) - m).
Rat expected_shortfall_rat(const StepVariable& x, const Rat& alpha);
double expected_shortfall(const StepVariable& x, const Rat& alpha);

/// Concave-or-not distortion g on [0,1] with g(0)=0, g(1)=1, nondecreasing.
struct DistortionSpec {
    enum class Kind { Identity, EsCap, Power };
    Kind kind = Kind::Identity;
    Rat alpha = Rat(1, 2);  // EsCap: g(u) = min(u/alpha, 1)
    Rat theta = Rat(1);     // Power: g(u) = u^theta, rational theta

    void validate() const;
    double operator()(double u) const;
    Rat eval_rat(const Rat& u) const;  // exact for Identity, EsCap, integer theta
    bool exact() const;
    bool concave() const;
    std::string name() const;
};

/// Choquet integral of -X under g∘P via sorted cells.
Rat distortion_rho_rat(const StepVariable& x, const DistortionSpec& g);
double distortion_rho(const StepVariable& x, const DistortionSpec& g);

/// phi(X) = sup{ E[w X'] : X' ~ X } for nonnegative weights w: the
/// rearrangement pairing (sort both descending on the common refinement).
Rat phi_sup_rat(const StepVariable& weights, const StepVariable& x);
double phi_sup(const StepVariable& weights, const StepVariable& x);

/// rho(X) = phi(-X) - E[X].
Rat counterexample_rho_rat(const StepVariable& weights, const StepVariable& x);
double counterexample_rho(const StepVariable& weights, const StepVariable& x);

/// Grid floor for the discretization harness: 0 stays 0, v > 0 maps to
/// a^n with a^n <= v < a^{n+1}. Requires x >= 0.
StepVariable geometric_floor(const StepVariable& x, double ratio);

/// phi values along a ratio schedule, each evaluated at the cumulative
/// pointwise max of the grid floors (so the sequence of discrete
/// witnesses U_k <= X is nondecreasing and the phi values are monotone).
std::vector<double> phi_discretization_chain(const StepVariable& weights, const StepVariable& x,
                                             const std::vector<double>& ratios);

// ---------------------------------------------------------------------------
// Measure objects
// ---------------------------------------------------------------------------

enum class MeasureKind { NegMean, ExpectedShortfall, Distortion, SupPhi, Example21, BrokenSecondMoment };

struct MeasureSpec {
    MeasureKind kind = MeasureKind::NegMean;
    Rat alpha = Rat(1, 2);
    DistortionSpec g;
    std::optional<StepVariable> weights;
    std::optional<NormSpec> norm;

    std::string name() const;
};

enum class Axiom { Decreasing, Subadditive, PositivelyHomogeneous, CashInvariant, LawInvariant };
std::string axiom_name(Axiom a);

class RiskMeasure {
public:
    virtual ~RiskMeasure() = default;
    virtual std::string name() const = 0;
    virtual double evaluate(const StepVariable& x) const = 0;
    /// Analytic-capable measures override; default handles step-only input.
    virtual double evaluate_signed(const SignedVariable& x) const;
    /// rho from (negative-part profile, expectation) when the measure is of
    /// the d(X^-) - E[X] family; nullopt otherwise.
    virtual std::optional<double> evaluate_parts(const Profile& neg, double expectation) const;
    /// Axioms this measure contracts to satisfy (the suite checks all).
    virtual std::vector<Axiom> expected_axioms() const;
};

std::unique_ptr<RiskMeasure> make_measure(const MeasureSpec& spec);

// ---------------------------------------------------------------------------
// Coherence suite
// ---------------------------------------------------------------------------

struct AxiomFailure {
    Axiom axiom;
    double lhs = 0.0;
    double rhs = 0.0;
    std::string witness;
};

struct CoherenceReport {
    std::string measure;
    unsigned trials = 0;
    std::uint64_t seed = 0;
    std::vector<Axiom> checked;
    std::vector<Axiom> contract;         // axioms the measure declares
    std::vector<AxiomFailure> failures;  // capped at 32 entries

    bool all_passed() const { return failures.empty(); }
    bool failed(Axiom a) const;
    /// No failure touches a declared axiom.
    bool within_contract() const;
};

/// Randomized tests of the four coherence axioms plus law invariance under
/// random_rearrangement. Trials are sharded deterministically by seed.
CoherenceReport coherence_suite(const RiskMeasure& rho, unsigned trials, std::uint64_t seed,
                                unsigned threads = 1);

}  // namespace rirs
