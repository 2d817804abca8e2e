#include <doctest.h>

#include "rirs/analytic.hpp"
#include "rirs/rng.hpp"
#include "rirs/signed_variable.hpp"
#include "rirs/step_variable.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

using namespace rirs;

namespace {

// independent oracle: quantile by direct CDF inversion over the value list
double quantile_oracle(const StepVariable& x, const Rat& t) {
    auto dist = distribution(x);
    Rat cum = 0;
    for (const auto& [v, w] : dist) {
        cum += w;
        if (cum >= t) return v;
    }
    return dist.back().first;
}

// independent oracle: composite Simpson for ∫_a^b f, used against the
// closed-form segment integrals
double simpson(const std::function<double(double)>& f, double a, double b, int n = 4000) {
    double h = (b - a) / n;
    double acc = f(a) + f(b);
    for (int i = 1; i < n; ++i) acc += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

StepVariable truncated_staircase_step(unsigned levels) {
    // value n! on [c_{n+1}, c_n) for n = 1..levels, value levels! on (0, c_{levels+1})
    std::vector<Cell> cells;
    cells.push_back({staircase_breakpoint(levels + 1), to_double(Rat(factorial(levels)))});
    for (unsigned n = levels; n >= 1; --n) {
        cells.push_back({staircase_breakpoint(n) - staircase_breakpoint(n + 1),
                         to_double(Rat(factorial(n)))});
    }
    cells.push_back({Rat(1) - staircase_breakpoint(1), 0.0});
    return StepVariable(std::move(cells));
}

}  // namespace

TEST_CASE("step variable invariants") {
    CHECK_THROWS_AS(StepVariable({{Rat(1, 2), 1.0}}), StructuralError);
    CHECK_THROWS_AS(StepVariable({{Rat(0), 1.0}, {Rat(1), 0.0}}), StructuralError);
    StepVariable x = StepVariable::uniform({1, 2, 3, 4});
    CHECK(x.size() == 4);
    CHECK(x.expectation() == doctest::Approx(2.5).epsilon(1e-15));
}

TEST_CASE("decreasing rearrangement") {
    // identity on a constant
    StepVariable c = StepVariable::constant(3.5);
    CHECK(equidistributed(decreasing_rearrangement(c), c));

    // |values| sorted descending
    StepVariable x = StepVariable::uniform({2, -3, 0, 1});
    StepVariable r = decreasing_rearrangement(x);
    std::vector<double> vals;
    for (const auto& cell : r.cells()) vals.push_back(cell.value);
    CHECK(vals == std::vector<double>{3, 2, 1, 0});
    for (const auto& cell : r.cells()) CHECK(cell.width == Rat(1, 4));

    // the truncated staircase is already decreasing
    StepVariable s = truncated_staircase_step(4);
    StepVariable sr = decreasing_rearrangement(s);
    CHECK(sr.coalesced().cells() == s.coalesced().cells());
}

TEST_CASE("rearrangement is idempotent and law-invariant, exactly") {
    Rng rng(42);
    for (int trial = 0; trial < 200; ++trial) {
        StepVariable x = random_step_variable(rng, 7, 5.0, false);
        StepVariable r1 = decreasing_rearrangement(x);
        CHECK(decreasing_rearrangement(r1).cells() == r1.cells());
        StepVariable y = random_rearrangement(x, rng.next_u64(), 3);
        CHECK(equidistributed(x, y));
        CHECK(decreasing_rearrangement(y).coalesced().cells() == r1.coalesced().cells());
    }
}

TEST_CASE("quantile: left continuity and oracle agreement") {
    StepVariable c = StepVariable::constant(7.0);
    CHECK(quantile(c, 0.9) == 7.0);

    StepVariable x = StepVariable::uniform({1, 2, 3, 4});
    CHECK(quantile(x, 0.3) == 2.0);
    CHECK(quantile(x, 0.25) == 1.0);  // left continuity at the breakpoint
    CHECK_THROWS_AS(quantile(x, 0.0), DomainError);
    CHECK_THROWS_AS(quantile(x, 1.0), DomainError);

    Rng rng(7);
    for (int trial = 0; trial < 300; ++trial) {
        StepVariable y = random_step_variable(rng, 6, 8.0, true);
        Rat t(1 + rng.below(99), 100);
        CHECK(quantile(y, t) == quantile_oracle(y, t));
    }
    // nondecreasing in t
    for (int k = 1; k < 40; ++k) {
        CHECK(quantile(x, Rat(k, 40)) <= quantile(x, Rat(k + 1, 41)) + 1e-15);
    }
}

TEST_CASE("comonotone coupling: named examples") {
    StepVariable x1 = StepVariable::uniform({1, 2, 3});
    SUBCASE("identity") {
        StepVariable out = comonotone_coupling(x1, x1);
        CHECK(equidistributed(out, x1));
        Refinement r = refine(out, x1);
        for (std::size_t i = 0; i < r.widths.size(); ++i) {
            CHECK(r.a_values[i] == r.b_values[i]);
        }
    }
    SUBCASE("aligned ranks") {
        StepVariable x2 = StepVariable::uniform({0, 1, 2});
        StepVariable out = comonotone_coupling(x1, x2);
        CHECK(equidistributed(out, x2));
        std::vector<double> vals;
        for (const auto& cell : out.cells()) vals.push_back(cell.value);
        CHECK(vals == std::vector<double>{0, 1, 2});
    }
    SUBCASE("permuted ranks with brute-force dominance check") {
        StepVariable x1p = StepVariable::uniform({3, 1, 2});
        StepVariable x2 = StepVariable::uniform({2, 0, 1});
        StepVariable out = comonotone_coupling(x1p, x2);
        std::vector<double> vals;
        for (const auto& cell : out.cells()) vals.push_back(cell.value);
        CHECK(vals == std::vector<double>{2, 0, 1});
        // brute force over all placements: the output must achieve the
        // maximal E[X1' X2'] among dominated equidistributed placements
        std::vector<double> target{2, 0, 1};
        std::sort(target.begin(), target.end());
        double best = -1e18;
        do {
            bool dominated = true;
            for (int i = 0; i < 3; ++i) dominated &= target[i] <= x1p.cells()[i].value;
            if (dominated) {
                double e = 0;
                for (int i = 0; i < 3; ++i) e += target[i] * x1p.cells()[i].value / 3.0;
                best = std::max(best, e);
            }
        } while (std::next_permutation(target.begin(), target.end()));
        CHECK(to_double(pointwise_product_expectation_rat(out, x1p)) == doctest::Approx(best));
    }
}

TEST_CASE("comonotone coupling: dominance violation reports a witness") {
    StepVariable x1 = StepVariable::uniform({0, 1});
    StepVariable x2 = StepVariable::uniform({2, 3});
    CHECK_THROWS_WITH_AS(comonotone_coupling(x1, x2),
                         doctest::Contains("quantile dominance fails"), PreconditionError);
}

TEST_CASE("comonotone coupling: random dominated pairs stay dominated and equidistributed") {
    Rng rng(2024);
    for (int trial = 0; trial < 1000; ++trial) {
        StepVariable x2 = random_step_variable(rng, 5, 4.0, true);
        StepVariable lift = random_step_variable(rng, 4, 3.0, true).abs();
        StepVariable x1 = random_rearrangement(add(x2, lift), rng.next_u64(), 2);
        StepVariable x2target = random_rearrangement(x2, rng.next_u64(), 2);
        StepVariable out = comonotone_coupling(x1, x2target);
        CHECK(equidistributed(out, x2));
        Refinement r = refine(out, x1);
        for (std::size_t i = 0; i < r.widths.size(); ++i) {
            CHECK(r.a_values[i] <= r.b_values[i] + 1e-12);
        }
    }
}

TEST_CASE("conditional expectation") {
    StepVariable x = StepVariable::uniform({1, 2, 3, 4});
    SUBCASE("single block gives the mean") {
        auto ce = conditional_expectation(x, Partition::trivial(x));
        CHECK(ce.block_means[0] == Rat(5, 2));
        for (const auto& c : ce.variable.cells()) CHECK(c.value == 2.5);
    }
    SUBCASE("two blocks") {
        Partition pi{{{0, 1}, {2, 3}}};
        auto ce = conditional_expectation(x, pi);
        CHECK(ce.block_means[0] == Rat(3, 2));
        CHECK(ce.block_means[1] == Rat(7, 2));
        std::vector<double> vals;
        for (const auto& c : ce.variable.cells()) vals.push_back(c.value);
        CHECK(vals == std::vector<double>{1.5, 1.5, 3.5, 3.5});
    }
    SUBCASE("mean preservation holds exactly at the rational level") {
        Rng rng(5);
        for (int trial = 0; trial < 200; ++trial) {
            StepVariable y = random_step_variable(rng, 8, 8.0, false);
            std::size_t n = y.size();
            if (n < 2) continue;
            Partition pi{{{}, {}}};
            for (std::size_t i = 0; i < n; ++i) pi.blocks[i % 2].push_back(i);
            auto ce = conditional_expectation(y, pi);
            Rat total = 0;
            for (std::size_t j = 0; j < pi.blocks.size(); ++j) {
                total += pi.block_mass(y, j) * ce.block_means[j];
            }
            CHECK(total == y.expectation_rat());
        }
    }
    SUBCASE("tower property and idempotence, exact on dyadic-friendly grids") {
        Rng rng(6);
        for (int trial = 0; trial < 200; ++trial) {
            // 8 equal cells, integer values: all block means are dyadic, so
            // the step-variable view is itself exact
            std::vector<double> vals(8);
            for (auto& v : vals) vals[&v - vals.data()] = static_cast<double>(rng.range(-8, 8));
            StepVariable y = StepVariable::uniform(vals);
            Partition pi2{{{0, 1}, {2, 3}, {4, 5}, {6, 7}}};
            Partition pi1{{{0, 1, 2, 3}, {4, 5, 6, 7}}};
            auto inner = conditional_expectation(y, pi2);
            auto lhs = conditional_expectation(inner.variable, pi1);
            auto rhs = conditional_expectation(y, pi1);
            CHECK(lhs.block_means == rhs.block_means);
            CHECK(inner.variable.expectation_rat() == y.expectation_rat());
            auto again = conditional_expectation(inner.variable, pi2);
            CHECK(again.block_means == inner.block_means);
        }
    }
    SUBCASE("incompatible partition") {
        Partition bad{{{0, 1}, {1, 2, 3}}};
        CHECK_THROWS_AS(conditional_expectation(x, bad), StructuralError);
    }
}

TEST_CASE("random rearrangement is equidistributed and seed-deterministic") {
    StepVariable one = StepVariable::constant(2.0);
    StepVariable same = random_rearrangement(one, 99, 0);
    CHECK(same.cells() == one.cells());

    StepVariable x = StepVariable::uniform({1, 2, 3, 4});
    for (std::uint64_t s = 0; s < 1000; ++s) {
        CHECK(equidistributed(random_rearrangement(x, s, 4), x));
    }
    CHECK(random_rearrangement(x, 7, 4).cells() == random_rearrangement(x, 7, 4).cells());
}

TEST_CASE("place equidistributed copy") {
    StepVariable zero = StepVariable::constant(0.0);
    CHECK(equidistributed(place_equidistributed_copy(zero, {0}), zero));

    StepVariable ind = StepVariable::indicator(Rat(1, 4)).split_at({Rat(1, 2)});
    // cells: [1 on (0,1/4)], [0 on (1/4,1/2)], [0 on (1/2,1)]
    StepVariable placed = place_equidistributed_copy(ind, {2});
    CHECK(equidistributed(placed, ind));
    // zero outside the support region (first half stays zero)
    auto bps = placed.breakpoints();
    for (std::size_t i = 0; i < placed.size(); ++i) {
        if (bps[i + 1] <= Rat(1, 2)) CHECK(placed.cells()[i].value == 0.0);
    }

    // support mass below P(X != 0) must be rejected
    StepVariable fine = StepVariable::indicator(Rat(1, 4)).split_at({Rat(3, 8), Rat(1, 2)});
    CHECK_THROWS_AS(place_equidistributed_copy(fine, {1}), CapacityError);
}

TEST_CASE("truncation") {
    SignedVariable bounded = SignedVariable::from_step(StepVariable::uniform({-1, 2}));
    SignedVariable t = bounded.truncated(5.0);
    CHECK(t.head().cells() == bounded.head().cells());
    CHECK(bounded.truncated(0.0).head().max_abs() == 0.0);

    // analytic: q = ln(1/t) capped at 2
    SignedVariable x = SignedVariable::negative_analytic(AnalyticRearrangement::log_tail(1.0, 1.0));
    SignedVariable xn = x.truncated(2.0);
    const AnalyticRearrangement& q = xn.neg_parts()[0].q;
    CHECK(q.value(std::exp(-3.0)) == doctest::Approx(2.0));      // capped region
    CHECK(q.value(std::exp(-1.0)) == doctest::Approx(1.0));      // untouched region
    // E[min(q, 2)] = 1 - e^{-2}
    CHECK(-xn.expectation() == doctest::Approx(1.0 - std::exp(-2.0)).epsilon(1e-12));
}

TEST_CASE("integrate_g: closed forms, divergence, quadrature cross-check") {
    AnalyticRearrangement c2 = AnalyticRearrangement::constant(2.5);
    CHECK(integrate_g(c2, GIdentity{}, Rat(1)).value == doctest::Approx(2.5));

    AnalyticRearrangement logq = AnalyticRearrangement::log_tail(1.0, 1.0);
    // E[Phi(q/1)] with Phi = e^t - 1: ∫ (1/t - 1) diverges
    CHECK(integrate_g(logq, GPhi{OrliczFunction::exponential(), 1.0}, Rat(1)).divergent);
    // E[Phi(q/2)] = ∫ (t^{-1/2} - 1) dt = 1
    IntegralValue half = integrate_g(logq, GPhi{OrliczFunction::exponential(), 2.0}, Rat(1));
    CHECK_FALSE(half.divergent);
    CHECK(half.value == doctest::Approx(1.0).epsilon(1e-12));

    // quadrature oracle vs closed forms on a subinterval
    double a = 0.01, b = 0.5;
    double oracle = simpson([](double t) { return std::log(1.0 / t); }, a, b);
    IntegralValue closed =
        integrate_g(logq, GIdentity{}, rat_from_double(a), rat_from_double(b));
    CHECK(closed.value == doctest::Approx(oracle).epsilon(1e-9));

    // E[q] for the sqrt-log tail = Gamma(3/2) = sqrt(pi)/2
    AnalyticRearrangement sq = AnalyticRearrangement::log_tail(1.0, 0.5);
    CHECK(integrate_g(sq, GIdentity{}, Rat(1)).value ==
          doctest::Approx(std::sqrt(M_PI) / 2.0).epsilon(1e-10));

    // power tail: ∫ t^{-1/2} = 2; second moment diverges
    AnalyticRearrangement pw = AnalyticRearrangement::power_tail(1.0, 0.5);
    CHECK(integrate_g(pw, GIdentity{}, Rat(1)).value == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(integrate_g(pw, GPower{2.0}, Rat(1)).divergent);
}

TEST_CASE("E[g(|X|)] equals the rearranged integral") {
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        StepVariable x = random_step_variable(rng, 7, 5.0, false);
        StepVariable xs = decreasing_rearrangement(x);
        // exact: expectations agree cell-by-cell after sorting
        CHECK(x.abs().expectation_rat() == xs.expectation_rat());
    }
    // analytic: E[q^2] via closed form vs the substituted Simpson oracle
    AnalyticRearrangement logq = AnalyticRearrangement::log_tail(1.0, 1.0);
    double closed = integrate_g(logq, GPower{2.0}, Rat(1)).value;
    double oracle = simpson([](double u) { return u * u * std::exp(-u); }, 0.0, 60.0, 20000);
    CHECK(closed == doctest::Approx(oracle).epsilon(1e-10));
    CHECK(closed == doctest::Approx(2.0).epsilon(1e-10));  // Gamma(3) = 2
}

TEST_CASE("staircase values and analytic assembly") {
    AnalyticRearrangement st = AnalyticRearrangement::staircase();
    CHECK(st.value(0.3) == 0.0);
    CHECK(st.value(to_double(staircase_breakpoint(1)) * 0.9) == 1.0);
    CHECK(st.value(to_double(staircase_breakpoint(2)) * 0.9) == 2.0);
    CHECK(st.value(to_double(staircase_breakpoint(4)) * 0.99) == 24.0);
    // E[X] = T(1), the exact level series
    CHECK(integrate_g(st, GIdentity{}, Rat(1)).value ==
          doctest::Approx(staircase_tail_integral(1)).epsilon(1e-14));

    // increasing assemblies are rejected
    CHECK_THROWS_AS(AnalyticRearrangement({Segment{Rat(0), Rat(1, 2), ConstantForm{1.0}},
                                           Segment{Rat(1, 2), Rat(1), ConstantForm{2.0}}}),
                    StructuralError);
}

TEST_CASE("signed variable bookkeeping") {
    // head must leave zero mass for the tails
    StepVariable nz = StepVariable::uniform({1, 2});
    CHECK_THROWS_AS(SignedVariable::make(
                        nz, {}, {{AnalyticRearrangement::log_tail(1.0, 1.0), Rat(0), Rat(1)}}),
                    StructuralError);

    SignedVariable x = SignedVariable::negative_analytic(AnalyticRearrangement::log_tail(1.0, 1.0));
    CHECK(x.expectation() == doctest::Approx(-1.0).epsilon(1e-12));
    Profile neg = x.negative_profile();
    CHECK(neg.analytic.size() == 1);
    CHECK(x.positive_profile().analytic.empty());
}

TEST_CASE("lemma31 mix on step inputs") {
    StepVariable x = StepVariable::uniform({-2, 1, 3, -1});
    SignedVariable yn = lemma31_mix_step(x, x.positive_part(), 0.5, Rat(1, 8));
    // on (0, 1/8]: Y = X^+ = 0 (x = -2 there); beyond: x + 0.5
    const auto& cells = yn.head().cells();
    CHECK(cells[0].width == Rat(1, 8));
    CHECK(cells[0].value == 0.0);
    CHECK(cells[1].value == -1.5);
    // Y >= X precondition violation carries a witness
    StepVariable below = x.shifted(-1.0);
    CHECK_THROWS_AS(lemma31_mix_step(x, below, 0.1, Rat(1, 8)), PreconditionError);
}
