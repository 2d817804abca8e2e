#include "rirs/catalog.hpp"

#include "rirs/serialization.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace rirs::catalog {

namespace {

std::string nearest(const std::string& name, const std::vector<std::string>& options) {
    auto dist = [](const std::string& a, const std::string& b) {
        std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
        for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
        for (std::size_t i = 1; i <= a.size(); ++i) {
            cur[0] = i;
            for (std::size_t j = 1; j <= b.size(); ++j) {
                std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
                cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
            }
            std::swap(prev, cur);
        }
        return prev[b.size()];
    };
    std::string best = options.front();
    std::size_t best_d = dist(name, best);
    for (const auto& o : options) {
        std::size_t d = dist(name, o);
        if (d < best_d) {
            best = o;
            best_d = d;
        }
    }
    return best;
}

[[noreturn]] void unknown(const std::string& what, const std::string& name,
                          const std::vector<std::string>& options) {
    throw SpecError("unknown " + what + " '" + name + "' (nearest match: " +
                    nearest(name, options) + ")");
}

Rat parse_rat(const std::string& s) {
    try {
        auto slash = s.find('/');
        if (slash != std::string::npos) {
            return Rat(Int(s.substr(0, slash)), Int(s.substr(slash + 1)));
        }
        if (s.find('.') != std::string::npos || s.find('e') != std::string::npos) {
            std::size_t used = 0;
            double v = std::stod(s, &used);
            if (used != s.size()) throw SpecError("");
            return rat_from_double(v);
        }
        return Rat(Int(s));
    } catch (const SpecError&) {
        throw SpecError("cannot parse '" + s + "' as a rational (use p/q or a decimal)");
    } catch (const std::exception&) {
        throw SpecError("cannot parse '" + s + "' as a rational (use p/q or a decimal)");
    }
}

}  // namespace

std::vector<std::string> variable_names() {
    return {"constant-one",  "coin",           "uniform4",      "indicator-quarter",
            "neg-log-tail",  "neg-sqrt-log-tail", "appb-staircase", "power-tail-half",
            "weights-w012"};
}

std::vector<std::string> norm_names() {
    return {"lp:1", "lp:2", "lp:inf", "orlicz:exp", "orlicz:power:2", "appendix_b"};
}

std::vector<std::string> measure_names() {
    return {"neg-mean",          "es:1/2",
            "distortion:es-cap:1/2", "distortion:power:2",
            "supphi:weights-w012",   "example21:orlicz:exp",
            "broken:second-moment"};
}

SignedVariable variable(const std::string& name) {
    if (name == "constant-one") return SignedVariable::from_step(StepVariable::constant(1.0));
    if (name == "coin") return SignedVariable::from_step(StepVariable::uniform({-1.0, 1.0}));
    if (name == "uniform4") {
        return SignedVariable::from_step(StepVariable::uniform({1.0, 2.0, 3.0, 4.0}));
    }
    if (name == "indicator-quarter") {
        return SignedVariable::from_step(StepVariable::indicator(Rat(1, 4)));
    }
    if (name == "neg-log-tail") {
        // Example 2.1 instance: X = -q(U), q(t) = ln(1/t)
        return SignedVariable::negative_analytic(AnalyticRearrangement::log_tail(1.0, 1.0));
    }
    if (name == "neg-sqrt-log-tail") {
        // the in-heart control: q(t) = (ln(1/t))^(1/2)
        return SignedVariable::negative_analytic(AnalyticRearrangement::log_tail(1.0, 0.5));
    }
    if (name == "appb-staircase") {
        return SignedVariable::positive_analytic(AnalyticRearrangement::staircase());
    }
    if (name == "power-tail-half") {
        return SignedVariable::positive_analytic(AnalyticRearrangement::power_tail(1.0, 0.5));
    }
    if (name == "weights-w012") {
        return SignedVariable::from_step(StepVariable::uniform({0.0, 1.0, 2.0}));
    }
    unknown("variable", name, variable_names());
}

NormSpec parse_norm(const std::string& s) {
    if (s == "appendix_b") return NormSpec::appendix_b();
    if (s.rfind("lp:", 0) == 0) {
        std::string p = s.substr(3);
        if (p == "inf") return NormSpec::lp(std::numeric_limits<double>::infinity());
        return NormSpec::lp(to_double(parse_rat(p)));
    }
    if (s.rfind("orlicz:", 0) == 0) {
        std::string rest = s.substr(7);
        if (rest == "exp") return NormSpec::orlicz(OrliczFunction::exponential());
        if (rest.rfind("power:", 0) == 0) {
            return NormSpec::orlicz(OrliczFunction::power(to_double(parse_rat(rest.substr(6)))));
        }
    }
    unknown("norm", s, norm_names());
}

MeasureSpec parse_measure(const std::string& s) {
    MeasureSpec m;
    if (s == "neg-mean") {
        m.kind = MeasureKind::NegMean;
        return m;
    }
    if (s == "broken:second-moment") {
        m.kind = MeasureKind::BrokenSecondMoment;
        return m;
    }
    if (s.rfind("es:", 0) == 0) {
        m.kind = MeasureKind::ExpectedShortfall;
        m.alpha = parse_rat(s.substr(3));
        return m;
    }
    if (s.rfind("distortion:", 0) == 0) {
        m.kind = MeasureKind::Distortion;
        std::string rest = s.substr(11);
        if (rest == "identity") {
            m.g.kind = DistortionSpec::Kind::Identity;
        } else if (rest.rfind("es-cap:", 0) == 0) {
            m.g.kind = DistortionSpec::Kind::EsCap;
            m.g.alpha = parse_rat(rest.substr(7));
        } else if (rest.rfind("power:", 0) == 0) {
            m.g.kind = DistortionSpec::Kind::Power;
            m.g.theta = parse_rat(rest.substr(6));
        } else {
            unknown("measure", s, measure_names());
        }
        m.g.validate();
        return m;
    }
    if (s.rfind("supphi:", 0) == 0) {
        m.kind = MeasureKind::SupPhi;
        m.weights = variable(s.substr(7)).head();
        return m;
    }
    if (s.rfind("example21:", 0) == 0) {
        m.kind = MeasureKind::Example21;
        m.norm = parse_norm(s.substr(10));
        return m;
    }
    unknown("measure", s, measure_names());
}

SignedVariable parse_variable(const std::string& s) {
    if (s.rfind("catalog:", 0) == 0) return variable(s.substr(8));
    if (!s.empty() && s[0] == '@') {
        std::ifstream in(s.substr(1));
        if (!in) throw SpecError("cannot open variable file '" + s.substr(1) + "'");
        Json j;
        in >> j;
        return variable_from_json(j);
    }
    if (!s.empty() && (s[0] == '{' || s[0] == '[')) {
        return variable_from_json(Json::parse(s));
    }
    // bare catalog name as a convenience
    return variable(s);
}

}  // namespace rirs::catalog
