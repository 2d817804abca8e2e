#include <doctest.h>

#include "rirs/order_structure.hpp"
#include "rirs/rng.hpp"

#include <cmath>

using namespace rirs;

namespace {

double simpson(const std::function<double(double)>& f, double a, double b, int n = 40000) {
    double h = (b - a) / n;
    double acc = f(a) + f(b);
    for (int i = 1; i < n; ++i) acc += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

// independent oracle for ||q 1_{q >= r}||_Phi, q = ln(1/t), Phi = e^t - 1,
// with the singularity flattened by t = s^kappa
double cropped_tail_norm_oracle(double r) {
    auto expectation = [&](double lam) {
        double kappa = 4.0 / (1.0 - 1.0 / lam);
        double s_hi = std::exp(-r / kappa);
        auto f = [&](double s) {
            if (s <= 0.0) return 0.0;
            double ls = std::log(s);
            return kappa * (std::exp((kappa * (1.0 - 1.0 / lam) - 1.0) * ls) -
                            std::exp((kappa - 1.0) * ls));
        };
        return simpson(f, 0.0, s_hi, 40000);
    };
    double lo = 1.0, hi = 8.0;
    for (int it = 0; it < 90; ++it) {
        double mid = 0.5 * (lo + hi);
        (expectation(mid) <= 1.0 ? hi : lo) = mid;
    }
    return hi;
}

}  // namespace

TEST_CASE("tail norm profile: bounded input") {
    SignedVariable x = SignedVariable::from_step(StepVariable::uniform({-2, 1, 3}));
    NormSpec l2 = NormSpec::lp(2.0);
    TailProfile tp = tail_norm_profile(x, l2, {4, 8, 16});
    for (double v : tp.norms) CHECK(v == 0.0);
    CHECK(tp.limit == 0.0);
    CHECK(tp.converged);
}

TEST_CASE("tail norm profile: exp/log boundary case has limit 1") {
    SignedVariable x =
        SignedVariable::negative_analytic(AnalyticRearrangement::log_tail(1.0, 1.0));
    NormSpec orl = NormSpec::orlicz(OrliczFunction::exponential());
    TailProfile tp = tail_norm_profile(x, orl, {2, 4, 8, 16});
    CHECK(tp.limit == doctest::Approx(1.0));
    CHECK(tp.closed_form);
    for (std::size_t i = 0; i < tp.thresholds.size(); ++i) {
        CHECK(tp.norms[i] ==
              doctest::Approx(cropped_tail_norm_oracle(tp.thresholds[i])).epsilon(1e-6));
    }
    for (std::size_t i = 1; i < tp.norms.size(); ++i) CHECK(tp.norms[i] <= tp.norms[i - 1]);
    CHECK(tp.norms.back() >= 1.0);
}

TEST_CASE("tail norm profile: subexponential tail is in the heart, limit 0") {
    SignedVariable x =
        SignedVariable::negative_analytic(AnalyticRearrangement::log_tail(1.0, 0.5));
    NormSpec orl = NormSpec::orlicz(OrliczFunction::exponential());
    TailProfile tp = tail_norm_profile(x, orl, {2, 4, 8});
    CHECK(tp.limit == 0.0);
    CHECK(tp.closed_form);
    CHECK(tp.norms.back() < tp.norms.front());
}

TEST_CASE("tail norm profile: not-in-space inputs are reported, not guessed") {
    SignedVariable x =
        SignedVariable::positive_analytic(AnalyticRearrangement::power_tail(1.0, 0.5));
    NormSpec orl = NormSpec::orlicz(OrliczFunction::exponential());
    TailProfile tp = tail_norm_profile(x, orl, {2, 4});
    CHECK(tp.not_in_space);
    CHECK(std::isinf(tp.limit));
}

TEST_CASE("distance to the order-continuous part") {
    NormSpec orl = NormSpec::orlicz(OrliczFunction::exponential());
    SUBCASE("nonnegative X has X^- = 0") {
        SignedVariable x = SignedVariable::from_step(StepVariable::uniform({0, 1, 2}));
        DistanceReport d = distance_to_oc_part(x.negative_profile(), orl);
        CHECK(d.value == 0.0);
        CHECK(d.converged);
    }
    SUBCASE("any step variable is bounded, distance 0") {
        Rng rng(3);
        for (int t = 0; t < 50; ++t) {
            StepVariable x = random_step_variable(rng, 6, 9.0, false);
            DistanceReport d =
                distance_to_oc_part(SignedVariable::from_step(x).negative_profile(), orl);
            CHECK(d.value == 0.0);
        }
    }
    SUBCASE("c ln(1/t) tail: ladder values c(1 + e^{-r/c}), limit exactly c") {
        for (double c : {1.0, 2.0}) {
            SignedVariable x =
                SignedVariable::negative_analytic(AnalyticRearrangement::log_tail(c, 1.0));
            DistanceReport d = distance_to_oc_part(x.negative_profile(), orl);
            CHECK(d.converged);
            CHECK(d.value == doctest::Approx(c).epsilon(1e-7));
            for (auto [r, v] : d.ladder) {
                CHECK(v == doctest::Approx(c * (1.0 + std::exp(-r / c))).epsilon(1e-7));
            }
        }
    }
}

TEST_CASE("example 2.1 rho") {
    NormSpec orl = NormSpec::orlicz(OrliczFunction::exponential());
    SUBCASE("cash instance on constants") {
        for (double m : {-2.0, 0.5, 3.0}) {
            SignedVariable x = SignedVariable::from_step(StepVariable::constant(m));
            CHECK(example21_rho(x, orl) == doctest::Approx(-m));
        }
    }
    SUBCASE("the counterexample value rho(X) = 2") {
        SignedVariable x =
            SignedVariable::negative_analytic(AnalyticRearrangement::log_tail(1.0, 1.0));
        CHECK(example21_rho(x, orl) == doctest::Approx(2.0).epsilon(1e-7));
    }
    SUBCASE("truncations collapse to -E[X_n]") {
        SignedVariable x =
            SignedVariable::negative_analytic(AnalyticRearrangement::log_tail(1.0, 1.0));
        for (double n : {2.0, 8.0, 32.0}) {
            SignedVariable xn = x.truncated(n);
            double expect = 1.0 - std::exp(-n);  // -E[X_n]
            CHECK(example21_rho(xn, orl) == doctest::Approx(expect).epsilon(1e-9));
        }
    }
    SUBCASE("cash invariance through the parts route") {
        SignedVariable x =
            SignedVariable::negative_analytic(AnalyticRearrangement::log_tail(1.0, 1.0));
        double rho_x = example21_rho(x, orl);
        for (double m : {0.5, 1.0, 2.0}) {
            Profile neg_shifted = x.negative_profile().shifted_down(m);
            DistanceReport d = distance_to_oc_part(neg_shifted, orl);
            double rho_shifted = d.value - (x.expectation() + m);
            CHECK(rho_shifted == doctest::Approx(rho_x - m).epsilon(1e-6));
        }
    }
    SUBCASE("positive homogeneity on the closed-form ladder") {
        SignedVariable x =
            SignedVariable::negative_analytic(AnalyticRearrangement::log_tail(1.0, 1.0));
        double rho_x = example21_rho(x, orl);
        for (double lam : {0.5, 2.0, 3.0}) {
            SignedVariable lx =
                SignedVariable::negative_analytic(AnalyticRearrangement::log_tail(lam, 1.0));
            CHECK(example21_rho(lx, orl) == doctest::Approx(lam * rho_x).epsilon(1e-6));
        }
    }
}

TEST_CASE("heart membership matches the vanishing tail limit across the catalog") {
    NormSpec orl = NormSpec::orlicz(OrliczFunction::exponential());
    struct Case {
        AnalyticRearrangement q;
        bool in_heart;
    };
    std::vector<Case> cases;
    cases.push_back({AnalyticRearrangement::constant(3.0), true});
    cases.push_back({AnalyticRearrangement::log_tail(1.0, 0.5), true});
    cases.push_back({AnalyticRearrangement::log_tail(1.0, 1.0), false});
    cases.push_back({AnalyticRearrangement::log_tail(0.5, 1.0), false});
    for (const auto& c : cases) {
        HeartReport hm = heart_membership(c.q, OrliczFunction::exponential());
        SignedVariable x = SignedVariable::negative_analytic(c.q);
        TailProfile tp = tail_norm_profile(x, orl, {2, 4, 8, 16});
        if (c.in_heart) {
            CHECK(hm.verdict == HeartVerdict::InHeart);
            CHECK(tp.limit == 0.0);
        } else {
            CHECK(hm.verdict == HeartVerdict::InSpaceNotHeart);
            CHECK(tp.limit > 0.0);
        }
    }
}
