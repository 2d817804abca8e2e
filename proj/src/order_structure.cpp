#include "rirs/order_structure.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace rirs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Closed-form limit of the tail norms when the classification decides it:
// 0 in the heart, the critical scale for the exp/log boundary case.
struct LimitRule {
    bool known = false;
    double value = 0.0;
    std::string note;
};

LimitRule classify_limit(const Profile& pr, const NormSpec& norm) {
    if (pr.step_only()) return {true, 0.0, "bounded: tail norms vanish at finite r"};
    if (norm.tag() == NormTag::Orlicz) {
        HeartReport hm = heart_membership(pr, norm.phi());
        if (hm.verdict == HeartVerdict::InHeart) return {true, 0.0, "in the Orlicz heart: " + hm.rule};
        if (hm.verdict == HeartVerdict::InSpaceNotHeart) {
            return {true, hm.critical_lambda, "critical scale: " + hm.rule};
        }
        return {false, kInf, "not in the space"};
    }
    if (norm.tag() == NormTag::Lp && !std::isinf(norm.p())) {
        // Lp is order continuous: limit 0 whenever the norm is finite
        IntegralValue v = profile_expect_g(pr, norm.p() == 1.0
                                                   ? ScalarG{GIdentity{}}
                                                   : ScalarG{GPower{norm.p()}});
        if (!v.divergent) return {true, 0.0, "Lp (p < inf) is order continuous"};
        return {false, kInf, "not in Lp"};
    }
    return {false, 0.0, ""};
}

double median_value(const Profile& pr) {
    // value with at least half the mass at or above it; analytic parts
    // counted through their interval mass at a coarse level
    std::vector<std::pair<double, Rat>> vals;
    Rat total = 0;
    for (const auto& c : pr.cells) {
        vals.emplace_back(c.value, c.width);
        total += c.width;
    }
    for (const auto& ap : pr.analytic) {
        double mid = ap.q.value(to_double(ap.lo + ap.mass() / 2) * (1.0 - 1e-15) + 1e-300);
        vals.emplace_back(mid, ap.mass());
        total += ap.mass();
    }
    for (const auto& a : pr.atoms) {
        vals.emplace_back(1.0, staircase_breakpoint(a.start_level));
        total += staircase_breakpoint(a.start_level);
    }
    if (vals.empty()) return 0.0;
    Rat zero_mass = Rat(1) - total;
    if (zero_mass > 0) vals.emplace_back(0.0, zero_mass);
    std::sort(vals.begin(), vals.end());
    Rat acc = 0;
    for (const auto& [v, w] : vals) {
        acc += w;
        if (acc >= Rat(1, 2)) return v;
    }
    return vals.back().first;
}

}  // namespace

TailProfile tail_norm_profile(const SignedVariable& x, const NormSpec& norm,
                              const std::vector<double>& thresholds) {
    if (thresholds.empty()) throw DomainError("tail_norm_profile: no thresholds");
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
        if (thresholds[i] < 0 || (i > 0 && thresholds[i] <= thresholds[i - 1])) {
            throw DomainError("tail_norm_profile: thresholds must be strictly increasing, >= 0");
        }
    }
    Profile base = x.abs_profile();
    TailProfile out;
    out.thresholds = thresholds;
    for (double r : thresholds) {
        double v = norm.evaluate(base.cropped_below(r));
        if (std::isinf(v) && out.norms.empty()) {
            out.not_in_space = true;
            out.note = "norm infinite at the smallest threshold: not in the space";
        }
        if (!out.norms.empty() && v > out.norms.back() * (1.0 + 1e-9) + 1e-12) {
            throw EvaluationError("tail_norm_profile: norm sequence increased along thresholds");
        }
        out.norms.push_back(v);
    }
    LimitRule rule = classify_limit(base, norm);
    if (out.not_in_space) {
        out.limit = kInf;
        return out;
    }
    if (rule.known) {
        out.limit = rule.value;
        out.closed_form = true;
        out.converged = true;
        out.note = rule.note;
        return out;
    }
    // extrapolate: stabilized when three successive relative changes are small
    out.limit = out.norms.back();
    std::size_t n = out.norms.size();
    if (n >= 3) {
        double d1 = std::fabs(out.norms[n - 1] - out.norms[n - 2]);
        double d2 = std::fabs(out.norms[n - 2] - out.norms[n - 3]);
        double scale = std::max(1e-300, std::fabs(out.norms[n - 1]));
        if (d1 / scale < 1e-8 && d2 / scale < 1e-8) {
            out.converged = true;
        } else {
            out.error_band = d1 + d2;
            out.note = "not stabilized; limit reported with band";
        }
    } else {
        out.error_band = kInf;
        out.note = "too few thresholds to extrapolate";
    }
    return out;
}

DistanceReport distance_to_oc_part(const Profile& xminus, const NormSpec& norm) {
    DistanceReport out;
    // bounded step mass: already in X_a, distance 0 through any lattice norm
    if (xminus.step_only()) {
        bool zero = true;
        for (const auto& c : xminus.cells) zero &= (c.value == 0.0);
        out.value = 0.0;
        out.converged = true;
        out.note = zero ? "zero input" : "bounded input: L-infinity subset of X_a";
        return out;
    }
    double r0 = median_value(xminus);
    if (!(r0 > 0)) r0 = 1.0;
    double prev = kInf;
    int stable = 0;
    double r = r0;
    for (int k = 0; k < 80; ++k) {
        double v = norm.evaluate(xminus.shifted_down(r));
        out.ladder.emplace_back(r, v);
        if (v > prev * (1.0 + 1e-9) + 1e-12) {
            throw EvaluationError("distance_to_oc_part: ladder value increased (numerical fault)");
        }
        if (std::isfinite(v) && std::isfinite(prev) &&
            std::fabs(v - prev) <= 1e-8 * std::max(1e-300, std::fabs(v))) {
            if (++stable >= 3) {
                out.value = v;
                out.converged = true;
                return out;
            }
        } else {
            stable = 0;
        }
        prev = v;
        r *= 2.0;
    }
    out.value = prev;
    out.converged = false;
    out.error_band = std::fabs(out.ladder[out.ladder.size() - 1].second -
                               out.ladder[out.ladder.size() - 2].second);
    out.note = "ladder exhausted before stabilization";
    return out;
}

double example21_rho(const SignedVariable& x, const NormSpec& norm) {
    double e = x.expectation();
    DistanceReport d = distance_to_oc_part(x.negative_profile(), norm);
    return d.value - e;
}

}  // namespace rirs
