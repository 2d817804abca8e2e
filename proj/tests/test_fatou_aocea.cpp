#include <doctest.h>

#include "rirs/fatou.hpp"
#include "rirs/order_structure.hpp"
#include "rirs/rng.hpp"

#include <cmath>

using namespace rirs;

namespace {

MeasureSpec example21_exp_spec() {
    MeasureSpec spec;
    spec.kind = MeasureKind::Example21;
    spec.norm = NormSpec::orlicz(OrliczFunction::exponential());
    return spec;
}

std::vector<double> powers_of_two(unsigned upto) {
    std::vector<double> v;
    for (unsigned n = 0; (1u << n) <= upto; ++n) v.push_back(static_cast<double>(1u << n));
    return v;
}

}  // namespace

TEST_CASE("truncation probe: dominated convergence for the mean") {
    MeasureSpec nm;
    nm.kind = MeasureKind::NegMean;
    auto rho = make_measure(nm);
    SignedVariable x =
        SignedVariable::negative_analytic(AnalyticRearrangement::log_tail(1.0, 1.0));
    FatouProbeReport rep = fatou_probe_truncation(*rho, x, powers_of_two(128));
    CHECK(rep.verdict == "FATOU_HOLDS");
    CHECK(std::fabs(rep.gap) <= 1e-6);
}

TEST_CASE("truncation probe: the example 2.1 gap equals the distance term") {
    auto rho = make_measure(example21_exp_spec());
    SignedVariable x =
        SignedVariable::negative_analytic(AnalyticRearrangement::log_tail(1.0, 1.0));
    FatouProbeReport rep = fatou_probe_truncation(*rho, x, powers_of_two(128));
    CHECK(rep.verdict == "FATOU_FAILS");
    CHECK(rep.rho_at_x == doctest::Approx(2.0).epsilon(1e-7));
    CHECK(rep.liminf_estimate == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(rep.gap == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("truncation probe: ES on bounded input has no gap") {
    MeasureSpec es;
    es.kind = MeasureKind::ExpectedShortfall;
    es.alpha = Rat(1, 2);
    auto rho = make_measure(es);
    SignedVariable x = SignedVariable::from_step(StepVariable::uniform({-3, 1, 4, 2}));
    FatouProbeReport rep = fatou_probe_truncation(*rho, x, powers_of_two(64));
    CHECK(rep.verdict == "FATOU_HOLDS");
    CHECK(rep.gap == doctest::Approx(0.0));
}

TEST_CASE("lemma 3.1 probe on step inputs") {
    MeasureSpec nm;
    nm.kind = MeasureKind::NegMean;
    auto rho = make_measure(nm);
    StepVariable x = StepVariable::uniform({-2, 1, 3, -1});
    std::vector<double> cs;
    std::vector<Rat> as;
    for (unsigned n = 1; n <= 40; ++n) {
        cs.push_back(std::ldexp(1.0, -static_cast<int>(n)));
        as.push_back(Rat(1, Int(1) << (n + 1)));
    }
    FatouProbeReport rep = fatou_probe_lemma31(*rho, SignedVariable::from_step(x),
                                               Lemma31Target::SameX, cs, as);
    CHECK(rep.verdict == "FATOU_HOLDS");
    CHECK(std::fabs(rep.gap) <= 1e-6);

    MeasureSpec es;
    es.kind = MeasureKind::ExpectedShortfall;
    es.alpha = Rat(1, 4);
    auto rho_es = make_measure(es);
    FatouProbeReport rep_es = fatou_probe_lemma31(*rho_es, SignedVariable::from_step(x),
                                                  Lemma31Target::PositivePart, cs, as);
    CHECK(rep_es.verdict == "FATOU_HOLDS");
}

TEST_CASE("lemma 3.1 probe: the persistent gap when X^- leaves the heart") {
    auto rho = make_measure(example21_exp_spec());
    SignedVariable x =
        SignedVariable::negative_analytic(AnalyticRearrangement::log_tail(1.0, 1.0));
    std::vector<double> cs;
    std::vector<Rat> as;
    for (unsigned n = 1; n <= 40; ++n) {
        cs.push_back(std::ldexp(1.0, -static_cast<int>(n)));
        as.push_back(Rat(1, Int(1) << (n + 4)));
    }
    FatouProbeReport rep =
        fatou_probe_lemma31(*rho, x, Lemma31Target::PositivePart, cs, as);
    // rho(Y_n) -> -E[X] = 1 while rho(X) = 2
    CHECK(rep.verdict == "FATOU_FAILS");
    CHECK(rep.gap == doctest::Approx(1.0).epsilon(1e-6));
    // every Y_n >= X, so the decreasing measure satisfies rho(Y_n) <= rho(X)
    for (double v : rep.rho_values) CHECK(v <= rep.rho_at_x + 1e-9);
}

TEST_CASE("aocea certificate: the worked epsilon ladder") {
    AnalyticRearrangement q = AnalyticRearrangement::log_tail(1.0, 1.0);
    OrliczFunction phi = OrliczFunction::exponential();

    AoceaCertificate c1 = aocea_orlicz_certificate(q, phi, 0.1);
    CHECK(c1.eta == doctest::Approx(0.5));
    CHECK(c1.k == 20);
    REQUIRE_FALSE(c1.indices.empty());
    for (unsigned n : c1.indices) CHECK(n == 8);
    CHECK(c1.budget == doctest::Approx(20.0 * (2.0 * std::exp(-4.0) - std::exp(-8.0))).epsilon(1e-9));
    CHECK(c1.budget <= 1.0);
    CHECK(c1.reevaluated_norm <= 0.1 + 1e-9);
    CHECK(c1.invariants_ok());

    AoceaCertificate c2 = aocea_orlicz_certificate(q, phi, 0.01);
    CHECK(c2.k == 200);
    for (unsigned n : c2.indices) CHECK(n == 12);
    CHECK(c2.budget <= 1.0);
    CHECK(c2.reevaluated_norm <= 0.01 + 1e-10);
    CHECK(c2.invariants_ok());
}

TEST_CASE("aocea certificate: bounded input is trivial") {
    AnalyticRearrangement one = AnalyticRearrangement::constant(1.0);
    AoceaCertificate c = aocea_orlicz_certificate(one, OrliczFunction::exponential(), 0.1);
    CHECK(c.k == 1);
    CHECK(c.budget == 0.0);
    CHECK(c.reevaluated_norm == 0.0);
    CHECK(c.invariants_ok());
}

TEST_CASE("aocea certificate: rejects inputs outside the space") {
    CHECK_THROWS_AS(aocea_orlicz_certificate(AnalyticRearrangement::power_tail(1.0, 0.5),
                                             OrliczFunction::exponential(), 0.1),
                    PreconditionError);
}

TEST_CASE("appendix-b inequality chain, exact") {
    auto rows = verify_appendix_b_chain(2, 12);
    CHECK(rows.size() == 11);
    for (const auto& r : rows) {
        CHECK(r.lower_ok);
        CHECK(r.upper_ok);
        CHECK(r.tau_hi <= 3.0 + 1e-12);
        CHECK(r.tau_lo <= r.tau_hi);
    }
    // m = 2 bracket pins the tau_2 value
    CHECK(rows[0].tau_lo == doctest::Approx(1.6355323334386875).epsilon(1e-10));
}

TEST_CASE("appendix-b search: distances never fall below the separation constant") {
    AoceaSearchReport rep = aocea_search_appendix_b(5, 4, 200, 99, 2);
    CHECK(rep.trials == 200);
    CHECK(rep.min_distance >= 0.25 - 1e-9);
    // in fact the averages keep 2*sum(lambda) + max(lambda) of tail norm
    CHECK(rep.min_distance >= 2.0);
    // the L1 control collapses: the same candidates are almost order
    // continuous in an order-continuous norm
    CHECK(rep.control_min_distance_l1 <= 0.01);
}

TEST_CASE("appendix-b search: single full copy has distance 3") {
    SignedVariable x = SignedVariable::positive_analytic(AnalyticRearrangement::staircase());
    Profile p;
    p.atoms.push_back({1.0, 0.0, 1});
    DistanceReport d = distance_to_oc_part(p, NormSpec::appendix_b());
    CHECK(d.value == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(d.converged);
    // every probed truncation level keeps the separation
    for (auto [r, v] : d.ladder) CHECK(v >= 0.25);
}

TEST_CASE("blockwise equidistributed average") {
    NormSpec l1 = NormSpec::lp(1.0);
    SUBCASE("single block preserves the mean") {
        StepVariable x = StepVariable::uniform({1, 2, 3, 4});
        auto res = blockwise_equidistributed_average(x, Partition::trivial(x), 0.25, l1, 3, 5);
        CHECK(res.blockwise_equidistributed);
        CHECK(res.conditional_mean_preserved);
        CHECK(res.distance == 0.0);
    }
    SUBCASE("two blocks on four cells") {
        StepVariable x = StepVariable::uniform({1, 2, 3, 4});
        Partition pi{{{0, 1}, {2, 3}}};
        auto res = blockwise_equidistributed_average(x, pi, 0.1, l1, 4, 17);
        CHECK(res.blockwise_equidistributed);
        CHECK(res.conditional_mean_preserved);
        // E[X'|pi] = [1.5, 1.5, 3.5, 3.5]
        auto ce = conditional_expectation(x, pi);
        CHECK(ce.block_means[0] == Rat(3, 2));
        CHECK(ce.block_means[1] == Rat(7, 2));
    }
    SUBCASE("1000 random instances, exact rational checks") {
        Rng rng(71);
        for (int t = 0; t < 1000; ++t) {
            StepVariable x = random_step_variable(rng, 8, 6.0, false);
            std::size_t n = x.size();
            Partition pi;
            pi.blocks.assign(1 + rng.below(std::min<std::size_t>(n, 3)), {});
            for (std::size_t i = 0; i < n; ++i) pi.blocks[i % pi.blocks.size()].push_back(i);
            auto res = blockwise_equidistributed_average(x, pi, 0.5, l1,
                                                         1 + unsigned(rng.below(4)), rng.next_u64());
            CHECK(res.blockwise_equidistributed);
            CHECK(res.conditional_mean_preserved);
        }
    }
}

TEST_CASE("paired swap average") {
    NormSpec l1 = NormSpec::lp(1.0);
    SUBCASE("m1 = m2 = 1 is the identity") {
        StepVariable x = StepVariable::uniform({4, 1, 3, 2});
        Partition pi{{{0, 1}, {2, 3}}};
        StepVariable v = conditional_expectation(x, pi).variable;
        PairedSwapReport rep = paired_swap_average(x, v, pi, 1, 1, l1);
        CHECK(rep.pairs == 1);
        CHECK(rep.each_pair_equidistributed);
        CHECK(rep.eq42_equidistributed);
        CHECK(rep.v_average_exact);
        CHECK(rep.final_bound_holds);
    }
    SUBCASE("m1 = m2 = 2 on eight equal cells, full enumeration") {
        StepVariable x = StepVariable::uniform({5, 1, 4, 2, 8, 6, 3, 7});
        Partition pi{{{0, 1, 2, 3}, {4, 5, 6, 7}}};
        // V constant on the four equal-mass sub-blocks (2 per block)
        StepVariable v = StepVariable::uniform({2, 2, 4, 4, 6, 6, 7, 7});
        PairedSwapReport rep = paired_swap_average(x, v, pi, 2, 2, l1);
        CHECK(rep.pairs == 4);
        CHECK(rep.each_pair_equidistributed);
        CHECK(rep.eq42_equidistributed);
        CHECK(rep.v_average_exact);
        CHECK(rep.final_bound_holds);
        CHECK(rep.bound_lhs <= rep.bound_rhs);
    }
    SUBCASE("V = E[X|pi] directly") {
        StepVariable x = StepVariable::uniform({5, 1, 4, 2, 8, 6, 3, 7});
        Partition pi{{{0, 1, 2, 3}, {4, 5, 6, 7}}};
        StepVariable v = conditional_expectation(x, pi).variable;
        PairedSwapReport rep = paired_swap_average(x, v, pi, 2, 2, l1);
        CHECK(rep.each_pair_equidistributed);
        CHECK(rep.eq42_equidistributed);
        CHECK(rep.v_average_exact);
        CHECK(rep.final_bound_holds);
    }
    SUBCASE("large pair counts fall back to a seeded sample") {
        StepVariable x = StepVariable::uniform({5, 1, 4, 2, 8, 6, 3, 7});
        Partition pi{{{0, 1, 2, 3}, {4, 5, 6, 7}}};
        StepVariable v = StepVariable::uniform({2, 2, 4, 4, 6, 6, 7, 7});
        PairedSwapReport rep = paired_swap_average(x, v, pi, 2, 2, NormSpec::lp(1.0), 2, 9);
        CHECK(rep.pairs == 2);
        CHECK(rep.each_pair_equidistributed);
        CHECK(rep.eq42_equidistributed);
    }
    SUBCASE("V not constant on a sub-block is a structural error") {
        StepVariable x = StepVariable::uniform({5, 1, 4, 2, 8, 6, 3, 7});
        Partition pi{{{0, 1, 2, 3}, {4, 5, 6, 7}}};
        StepVariable v = StepVariable::uniform({1, 2, 3, 4, 5, 6, 7, 8});
        CHECK_THROWS_AS(paired_swap_average(x, v, pi, 2, 2, NormSpec::lp(1.0)),
                        StructuralError);
    }
}

TEST_CASE("corollary 2.5 control: heart negative part closes the gap") {
    auto rho = make_measure(example21_exp_spec());
    SignedVariable x =
        SignedVariable::negative_analytic(AnalyticRearrangement::log_tail(1.0, 0.5));
    FatouProbeReport rep = fatou_probe_truncation(*rho, x, powers_of_two(128));
    CHECK(rep.verdict == "FATOU_HOLDS");
    CHECK(std::fabs(rep.gap) <= 1e-6);
}
