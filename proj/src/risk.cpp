#include "rirs/risk.hpp"

#include "rirs/order_structure.hpp"
#include "rirs/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <sstream>

namespace rirs {

// ---------------------------------------------------------------------------
// ES
// ---------------------------------------------------------------------------

Rat expected_shortfall_rat(const StepVariable& x, const Rat& alpha) {
    if (alpha <= 0 || alpha > 1) throw DomainError("expected_shortfall: alpha outside (0,1]");
    return -lower_quantile_integral_rat(x, alpha) / alpha;
}

double expected_shortfall(const StepVariable& x, const Rat& alpha) {
    return to_double(expected_shortfall_rat(x, alpha));
}

// ---------------------------------------------------------------------------
// Distortion
// ---------------------------------------------------------------------------

void DistortionSpec::validate() const {
    switch (kind) {
        case Kind::Identity:
            return;
        case Kind::EsCap:
            if (alpha <= 0 || alpha > 1) throw SpecError("distortion es-cap: alpha outside (0,1]");
            return;
        case Kind::Power:
            if (theta <= 0) throw SpecError("distortion power: theta must be positive");
            return;
    }
}

double DistortionSpec::operator()(double u) const {
    if (u < 0.0 || u > 1.0) throw DomainError("distortion: u outside [0,1]");
    switch (kind) {
        case Kind::Identity:
            return u;
        case Kind::EsCap:
            return std::min(u / to_double(alpha), 1.0);
        case Kind::Power:
            return std::pow(u, to_double(theta));
    }
    return u;
}

Rat DistortionSpec::eval_rat(const Rat& u) const {
    switch (kind) {
        case Kind::Identity:
            return u;
        case Kind::EsCap:
            return std::min(Rat(u / alpha), Rat(1));
        case Kind::Power: {
            if (denominator(theta) != 1) {
                throw EvaluationError("distortion power: exact evaluation needs integer theta");
            }
            Rat r = 1;
            for (Int i = 0; i < numerator(theta); ++i) r *= u;
            return r;
        }
    }
    return u;
}

bool DistortionSpec::exact() const {
    return kind != Kind::Power || denominator(theta) == 1;
}

bool DistortionSpec::concave() const {
    switch (kind) {
        case Kind::Identity:
        case Kind::EsCap:
            return true;
        case Kind::Power:
            return theta <= 1;
    }
    return true;
}

std::string DistortionSpec::name() const {
    switch (kind) {
        case Kind::Identity:
            return "identity";
        case Kind::EsCap:
            return "es-cap:" + rat_str(alpha);
        case Kind::Power:
            return "power:" + rat_str(theta);
    }
    return "?";
}

Rat distortion_rho_rat(const StepVariable& x, const DistortionSpec& g) {
    g.validate();
    if (!g.exact()) throw EvaluationError("distortion_rho_rat: non-exact distortion");
    // Choquet integral of Z = -X: sum z_i (g(m_i) - g(m_{i-1})) over the
    // descending values of Z with cumulative tail masses m_i
    auto dist = distribution(x);  // ascending in x => descending in -x reversed
    Rat rho = 0;
    Rat mass_prev = 0;
    Rat g_prev = 0;
    for (const auto& [v, w] : dist) {
        Rat mass = mass_prev + w;
        Rat gm = g.eval_rat(mass);
        rho += rat_from_double(-v) * (gm - g_prev);
        mass_prev = mass;
        g_prev = gm;
    }
    return rho;
}

double distortion_rho(const StepVariable& x, const DistortionSpec& g) {
    g.validate();
    if (g.exact()) return to_double(distortion_rho_rat(x, g));
    auto dist = distribution(x);
    double rho = 0.0;
    Rat mass_prev = 0;
    double g_prev = 0.0;
    for (const auto& [v, w] : dist) {
        Rat mass = mass_prev + w;
        double gm = g(to_double(mass));
        rho += -v * (gm - g_prev);
        mass_prev = mass;
        g_prev = gm;
    }
    return rho;
}

// ---------------------------------------------------------------------------
// phi
// ---------------------------------------------------------------------------

Rat phi_sup_rat(const StepVariable& weights, const StepVariable& x) {
    if (weights.min_value() < 0.0) {
        throw PreconditionError("phi_sup: weights must be nonnegative");
    }
    // Hardy-Littlewood pairing with signed values: sort both descending
    return pointwise_product_expectation_rat(sorted_descending(weights), sorted_descending(x));
}

double phi_sup(const StepVariable& weights, const StepVariable& x) {
    return to_double(phi_sup_rat(weights, x));
}

Rat counterexample_rho_rat(const StepVariable& weights, const StepVariable& x) {
    return phi_sup_rat(weights, x.scaled(-1.0)) - x.expectation_rat();
}

double counterexample_rho(const StepVariable& weights, const StepVariable& x) {
    return to_double(counterexample_rho_rat(weights, x));
}

StepVariable geometric_floor(const StepVariable& x, double ratio) {
    if (!(ratio > 1.0)) throw DomainError("geometric_floor: ratio must exceed 1");
    if (x.min_value() < 0.0) throw PreconditionError("geometric_floor: input must be >= 0");
    return x.map([ratio](double v) {
        if (v <= 0.0) return 0.0;
        double n = std::log(v) / std::log(ratio);
        // a value sitting on the grid up to representation noise floors to
        // itself; otherwise walk to the exact bracket
        if (std::fabs(n - std::round(n)) < 1e-9) return v;
        double f = std::pow(ratio, std::floor(n));
        while (f > v) f /= ratio;
        while (f * ratio <= v) f *= ratio;
        return f;
    });
}

std::vector<double> phi_discretization_chain(const StepVariable& weights, const StepVariable& x,
                                             const std::vector<double>& ratios) {
    std::vector<double> out;
    out.reserve(ratios.size());
    StepVariable u = geometric_floor(x, ratios.empty() ? 2.0 : ratios.front());
    for (std::size_t i = 0; i < ratios.size(); ++i) {
        StepVariable ui = geometric_floor(x, ratios[i]);
        u = (i == 0) ? ui : max_of(u, ui);  // cumulative witness, still <= x
        out.push_back(phi_sup(weights, u));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Measures
// ---------------------------------------------------------------------------

std::string axiom_name(Axiom a) {
    switch (a) {
        case Axiom::Decreasing: return "decreasing";
        case Axiom::Subadditive: return "subadditive";
        case Axiom::PositivelyHomogeneous: return "positively-homogeneous";
        case Axiom::CashInvariant: return "cash-invariant";
        case Axiom::LawInvariant: return "law-invariant";
    }
    return "?";
}

double RiskMeasure::evaluate_signed(const SignedVariable& x) const {
    if (!x.step_only()) {
        throw PreconditionError(name() + ": analytic inputs not supported by this measure");
    }
    return evaluate(x.head());
}

std::optional<double> RiskMeasure::evaluate_parts(const Profile&, double) const {
    return std::nullopt;
}

std::vector<Axiom> RiskMeasure::expected_axioms() const {
    return {Axiom::Decreasing, Axiom::Subadditive, Axiom::PositivelyHomogeneous,
            Axiom::CashInvariant, Axiom::LawInvariant};
}

namespace {

struct NegMeanMeasure : RiskMeasure {
    std::string name() const override { return "neg-mean"; }
    double evaluate(const StepVariable& x) const override { return -x.expectation(); }
    double evaluate_signed(const SignedVariable& x) const override { return -x.expectation(); }
    std::optional<double> evaluate_parts(const Profile&, double e) const override { return -e; }
};

struct EsMeasure : RiskMeasure {
    explicit EsMeasure(Rat a) : alpha(std::move(a)) {}
    Rat alpha;
    std::string name() const override { return "es:" + rat_str(alpha); }
    double evaluate(const StepVariable& x) const override {
        return expected_shortfall(x, alpha);
    }
};

struct DistortionMeasure : RiskMeasure {
    explicit DistortionMeasure(DistortionSpec spec) : g(std::move(spec)) { g.validate(); }
    DistortionSpec g;
    std::string name() const override { return "distortion:" + g.name(); }
    double evaluate(const StepVariable& x) const override { return distortion_rho(x, g); }
    std::vector<Axiom> expected_axioms() const override {
        if (g.concave()) return RiskMeasure::expected_axioms();
        return {Axiom::Decreasing, Axiom::PositivelyHomogeneous, Axiom::CashInvariant,
                Axiom::LawInvariant};
    }
};

struct SupPhiMeasure : RiskMeasure {
    explicit SupPhiMeasure(StepVariable w) : weights(std::move(w)) {
        if (weights.min_value() < 0.0) throw PreconditionError("supphi: negative weight");
    }
    StepVariable weights;
    std::string name() const override { return "supphi"; }
    double evaluate(const StepVariable& x) const override {
        return counterexample_rho(weights, x);
    }
    // The grid-scale f never vanishes on L-infinity (only f = 0 does), so
    // cash invariance is out of testable scope for this construction.
    std::vector<Axiom> expected_axioms() const override {
        return {Axiom::Decreasing, Axiom::Subadditive, Axiom::PositivelyHomogeneous,
                Axiom::LawInvariant};
    }
};

struct Example21Measure : RiskMeasure {
    explicit Example21Measure(NormSpec n) : norm(std::move(n)) {}
    NormSpec norm;
    std::string name() const override { return "example21:" + norm.name(); }
    double evaluate(const StepVariable& x) const override {
        // bounded input: d(X^-, X_a) = 0
        return -x.expectation();
    }
    double evaluate_signed(const SignedVariable& x) const override {
        return example21_rho(x, norm);
    }
    std::optional<double> evaluate_parts(const Profile& neg, double e) const override {
        return distance_to_oc_part(neg, norm).value - e;
    }
};

struct BrokenSecondMoment : RiskMeasure {
    std::string name() const override { return "broken:second-moment"; }
    double evaluate(const StepVariable& x) const override {
        return to_double(pointwise_product_expectation_rat(x, x));
    }
    std::vector<Axiom> expected_axioms() const override { return {Axiom::LawInvariant}; }
};

}  // namespace

std::string MeasureSpec::name() const {
    switch (kind) {
        case MeasureKind::NegMean: return "neg-mean";
        case MeasureKind::ExpectedShortfall: return "es:" + rat_str(alpha);
        case MeasureKind::Distortion: return "distortion:" + g.name();
        case MeasureKind::SupPhi: return "supphi";
        case MeasureKind::Example21:
            return "example21:" + (norm ? norm->name() : std::string("?"));
        case MeasureKind::BrokenSecondMoment: return "broken:second-moment";
    }
    return "?";
}

std::unique_ptr<RiskMeasure> make_measure(const MeasureSpec& spec) {
    switch (spec.kind) {
        case MeasureKind::NegMean:
            return std::make_unique<NegMeanMeasure>();
        case MeasureKind::ExpectedShortfall:
            if (spec.alpha <= 0 || spec.alpha > 1) throw SpecError("es: alpha outside (0,1]");
            return std::make_unique<EsMeasure>(spec.alpha);
        case MeasureKind::Distortion:
            return std::make_unique<DistortionMeasure>(spec.g);
        case MeasureKind::SupPhi:
            if (!spec.weights) throw SpecError("supphi: missing weights");
            return std::make_unique<SupPhiMeasure>(*spec.weights);
        case MeasureKind::Example21:
            if (!spec.norm) throw SpecError("example21: missing norm");
            return std::make_unique<Example21Measure>(*spec.norm);
        case MeasureKind::BrokenSecondMoment:
            return std::make_unique<BrokenSecondMoment>();
    }
    throw SpecError("make_measure: unknown kind");
}

// ---------------------------------------------------------------------------
// Coherence suite
// ---------------------------------------------------------------------------

bool CoherenceReport::failed(Axiom a) const {
    for (const auto& f : failures) {
        if (f.axiom == a) return true;
    }
    return false;
}

bool CoherenceReport::within_contract() const {
    for (Axiom a : contract) {
        if (failed(a)) return false;
    }
    return true;
}

namespace {

std::string describe_step(const StepVariable& x) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (i) os << ", ";
        os << rat_str(x.cells()[i].width) << ":" << x.cells()[i].value;
    }
    os << "]";
    return os.str();
}

}  // namespace

CoherenceReport coherence_suite(const RiskMeasure& rho, unsigned trials, std::uint64_t seed,
                                unsigned threads) {
    CoherenceReport report;
    report.measure = rho.name();
    report.trials = trials;
    report.seed = seed;
    report.checked = {Axiom::Decreasing, Axiom::Subadditive, Axiom::PositivelyHomogeneous,
                      Axiom::CashInvariant, Axiom::LawInvariant};
    report.contract = rho.expected_axioms();

    std::vector<std::vector<AxiomFailure>> shard_failures(trials);
    Rng root(seed);
    const double tol = 1e-9;

    parallel_for(trials, threads, [&](std::size_t i) {
        Rng rng = root.fork(i);
        std::vector<AxiomFailure>& fails = shard_failures[i];
        auto record = [&](Axiom a, double lhs, double rhs, const std::string& witness) {
            fails.push_back({a, lhs, rhs, witness});
        };
        StepVariable x1 = random_step_variable(rng, 6, 8.0, true);
        StepVariable x2 = random_step_variable(rng, 6, 8.0, true);
        double scale = std::max({1.0, x1.max_abs(), x2.max_abs()});

        // decreasing: X1 + |Z| >= X1
        StepVariable bump = random_step_variable(rng, 4, 4.0, true).abs();
        double up = rho.evaluate(add(x1, bump));
        double base = rho.evaluate(x1);
        if (up > base + tol * scale) {
            record(Axiom::Decreasing, up, base,
                   "X=" + describe_step(x1) + " bump=" + describe_step(bump));
        }
        // subadditive
        double both = rho.evaluate(add(x1, x2));
        double sum = rho.evaluate(x1) + rho.evaluate(x2);
        if (both > sum + tol * scale) {
            record(Axiom::Subadditive, both, sum,
                   "X1=" + describe_step(x1) + " X2=" + describe_step(x2));
        }
        // positive homogeneity
        static const double lambdas[] = {0.5, 2.0, 3.0};
        double lam = lambdas[rng.below(3)];
        double lhs = rho.evaluate(x1.scaled(lam));
        double rhs = lam * base;
        if (std::fabs(lhs - rhs) > tol * scale * lam) {
            record(Axiom::PositivelyHomogeneous, lhs, rhs,
                   "lambda=" + std::to_string(lam) + " X=" + describe_step(x1));
        }
        // cash invariance
        double m = static_cast<double>(rng.range(-4, 4));
        double shifted = rho.evaluate(x1.shifted(m));
        if (std::fabs(shifted - (base - m)) > tol * scale) {
            record(Axiom::CashInvariant, shifted, base - m,
                   "m=" + std::to_string(m) + " X=" + describe_step(x1));
        }
        // law invariance under a seeded rearrangement
        StepVariable re = random_rearrangement(x1, rng.next_u64(), 3);
        double lre = rho.evaluate(re);
        if (std::fabs(lre - base) > tol * scale) {
            record(Axiom::LawInvariant, lre, base, "X=" + describe_step(x1));
        }
    });

    for (auto& shard : shard_failures) {
        for (auto& f : shard) {
            if (report.failures.size() < 32) report.failures.push_back(std::move(f));
        }
    }
    return report;
}

}  // namespace rirs
