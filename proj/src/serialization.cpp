#include "rirs/serialization.hpp"

#include <cmath>
#include <limits>

namespace rirs {

namespace {

constexpr std::int64_t kSafe = 9007199254740992LL;  // 2^53

Json int_to_json(const Int& v) {
    if (v >= -Int(kSafe) && v <= Int(kSafe)) return Json(v.convert_to<std::int64_t>());
    return Json(v.str());
}

Int int_from_json(const Json& j) {
    if (j.is_number_integer()) return Int(j.get<std::int64_t>());
    if (j.is_string()) return Int(j.get<std::string>());
    throw SpecError("rational component must be an integer or a decimal string");
}

}  // namespace

Json rat_to_json(const Rat& r) { return Json::array({int_to_json(numerator(r)), int_to_json(denominator(r))}); }

Rat rat_from_json(const Json& j) {
    if (j.is_number_integer()) return Rat(j.get<std::int64_t>());
    if (!j.is_array() || j.size() != 2) throw SpecError("rational must be [num, den]");
    Int den = int_from_json(j[1]);
    if (den == 0) throw SpecError("rational with zero denominator");
    return Rat(int_from_json(j[0]), den);
}

Json to_json(const StepVariable& x) {
    Json cells = Json::array();
    for (const auto& c : x.cells()) {
        cells.push_back(Json::array({int_to_json(numerator(c.width)),
                                     int_to_json(denominator(c.width)), c.value}));
    }
    return Json{{"kind", "step"}, {"cells", cells}};
}

StepVariable step_from_json(const Json& j) {
    if (!j.contains("cells") || !j["cells"].is_array()) throw SpecError("step: missing cells");
    std::vector<Cell> cells;
    for (const auto& cj : j["cells"]) {
        if (!cj.is_array() || cj.size() != 3) throw SpecError("step cell must be [num, den, value]");
        Int num = int_from_json(cj[0]);
        Int den = int_from_json(cj[1]);
        if (den == 0) throw SpecError("step cell with zero denominator");
        cells.push_back({Rat(num, den), cj[2].get<double>()});
    }
    return StepVariable(std::move(cells));
}

namespace {

Json segment_to_json(const Segment& s) {
    Json j;
    if (std::holds_alternative<ConstantForm>(s.form)) {
        j["form"] = "constant";
        j["c"] = std::get<ConstantForm>(s.form).c;
    } else if (std::holds_alternative<PowerForm>(s.form)) {
        j["form"] = "power";
        j["coeff"] = std::get<PowerForm>(s.form).coeff;
        j["exponent"] = std::get<PowerForm>(s.form).exponent;
    } else if (std::holds_alternative<LogPowerForm>(s.form)) {
        j["form"] = "log_power";
        j["coeff"] = std::get<LogPowerForm>(s.form).coeff;
        j["power"] = std::get<LogPowerForm>(s.form).power;
    } else {
        j["form"] = "staircase";
    }
    j["lo"] = rat_to_json(s.lo);
    j["hi"] = rat_to_json(s.hi);
    if (s.scale != 1.0) j["scale"] = s.scale;
    if (s.shift != 0.0) j["shift"] = s.shift;
    if (!std::isinf(s.cap)) j["cap"] = s.cap;
    if (s.drop_below != 0.0) j["drop_below"] = s.drop_below;
    return j;
}

Segment segment_from_json(const Json& j) {
    Segment s;
    std::string form = j.value("form", "");
    if (form == "constant") {
        s.form = ConstantForm{j.at("c").get<double>()};
    } else if (form == "power") {
        s.form = PowerForm{j.at("coeff").get<double>(), j.at("exponent").get<double>()};
    } else if (form == "log_power") {
        s.form = LogPowerForm{j.at("coeff").get<double>(), j.at("power").get<double>()};
    } else if (form == "staircase") {
        s.form = StaircaseForm{};
    } else {
        throw SpecError("segment: unknown form '" + form + "'");
    }
    s.lo = rat_from_json(j.at("lo"));
    s.hi = rat_from_json(j.at("hi"));
    s.scale = j.value("scale", 1.0);
    s.shift = j.value("shift", 0.0);
    s.cap = j.contains("cap") ? j["cap"].get<double>() : std::numeric_limits<double>::infinity();
    s.drop_below = j.value("drop_below", 0.0);
    return s;
}

}  // namespace

Json to_json(const AnalyticRearrangement& q) {
    Json segs = Json::array();
    for (const auto& s : q.segments()) segs.push_back(segment_to_json(s));
    return Json{{"kind", "analytic"}, {"segments", segs}};
}

AnalyticRearrangement analytic_from_json(const Json& j) {
    if (!j.contains("segments") || !j["segments"].is_array() || j["segments"].empty()) {
        throw SpecError("analytic: missing segments");
    }
    std::vector<Segment> segs;
    for (const auto& sj : j["segments"]) segs.push_back(segment_from_json(sj));
    return AnalyticRearrangement(std::move(segs));
}

Json to_json(const SignedVariable& x) {
    Json j{{"kind", "signed"}, {"head", to_json(x.head())}};
    auto parts = [](const std::vector<AnalyticPart>& ps) {
        Json arr = Json::array();
        for (const auto& p : ps) {
            arr.push_back(Json{{"analytic", to_json(p.q)},
                               {"lo", rat_to_json(p.lo)},
                               {"hi", rat_to_json(p.hi)}});
        }
        return arr;
    };
    j["pos"] = parts(x.pos_parts());
    j["neg"] = parts(x.neg_parts());
    return j;
}

SignedVariable signed_from_json(const Json& j) {
    StepVariable head = step_from_json(j.at("head"));
    auto parts = [](const Json& arr) {
        std::vector<AnalyticPart> out;
        for (const auto& pj : arr) {
            out.push_back({analytic_from_json(pj.at("analytic")), rat_from_json(pj.at("lo")),
                           rat_from_json(pj.at("hi"))});
        }
        return out;
    };
    return SignedVariable::make(std::move(head), parts(j.value("pos", Json::array())),
                                parts(j.value("neg", Json::array())));
}

SignedVariable variable_from_json(const Json& j) {
    std::string kind = j.value("kind", "");
    if (kind == "step") return SignedVariable::from_step(step_from_json(j));
    if (kind == "analytic") return SignedVariable::positive_analytic(analytic_from_json(j));
    if (kind == "signed") return signed_from_json(j);
    throw SpecError("variable: unknown kind '" + kind + "'");
}

Json variable_to_json(const SignedVariable& x) {
    if (x.step_only()) return to_json(x.head());
    return to_json(x);
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

Json to_json(const NormAudit& a) {
    Json j{{"method", a.method}};
    if (!a.bracket.empty()) {
        Json b = Json::array();
        for (auto [lam, e] : a.bracket) b.push_back(Json::array({lam, e}));
        j["bracket"] = b;
    }
    if (!a.appb_terms.empty()) {
        Json t = Json::array();
        for (auto [n, tau] : a.appb_terms) t.push_back(Json::array({n, tau}));
        j["appb_terms"] = t;
        j["tail_bound"] = a.tail_bound;
    }
    return j;
}

Json to_json(const HeartReport& r) {
    const char* v = r.verdict == HeartVerdict::InHeart
                        ? "InHeart"
                        : (r.verdict == HeartVerdict::InSpaceNotHeart ? "InSpaceNotHeart"
                                                                      : "NotInSpace");
    Json j{{"verdict", v}, {"rule", r.rule}};
    if (r.verdict == HeartVerdict::InSpaceNotHeart) j["critical_lambda"] = r.critical_lambda;
    return j;
}

Json to_json(const TailProfile& p) {
    return Json{{"thresholds", p.thresholds}, {"norms", p.norms},     {"limit", p.limit},
                {"error_band", p.error_band}, {"converged", p.converged},
                {"closed_form", p.closed_form}, {"not_in_space", p.not_in_space},
                {"note", p.note}};
}

Json to_json(const DistanceReport& r) {
    Json ladder = Json::array();
    for (auto [rr, v] : r.ladder) ladder.push_back(Json::array({rr, v}));
    return Json{{"value", r.value},
                {"converged", r.converged},
                {"error_band", r.error_band},
                {"ladder", ladder},
                {"note", r.note}};
}

Json to_json(const CoherenceReport& r) {
    Json axioms = Json::array();
    for (Axiom a : r.checked) axioms.push_back(axiom_name(a));
    Json contract = Json::array();
    for (Axiom a : r.contract) contract.push_back(axiom_name(a));
    Json fails = Json::array();
    for (const auto& f : r.failures) {
        fails.push_back(Json{{"axiom", axiom_name(f.axiom)},
                             {"lhs", f.lhs},
                             {"rhs", f.rhs},
                             {"witness", f.witness}});
    }
    return Json{{"measure", r.measure},   {"trials", r.trials},
                {"seed", r.seed},         {"checked", axioms},
                {"contract", contract},   {"failures", fails},
                {"passed", r.all_passed()}, {"within_contract", r.within_contract()}};
}

Json to_json(const FatouProbeReport& r) {
    return Json{{"measure", r.measure},
                {"variable", r.variable},
                {"sequence", r.sequence_kind},
                {"levels", r.levels},
                {"rho_values", r.rho_values},
                {"rho_at_x", r.rho_at_x},
                {"liminf_estimate", r.liminf_estimate},
                {"gap", r.gap},
                {"verdict", r.verdict},
                {"note", r.note}};
}

Json to_json(const AoceaCertificate& c) {
    return Json{{"epsilon", c.epsilon},
                {"eta", c.eta},
                {"k", c.k},
                {"indices", c.indices},
                {"tail_integrals", c.tail_integrals},
                {"budget", c.budget},
                {"certified_bound", c.certified_bound},
                {"reevaluated_norm", c.reevaluated_norm},
                {"invariants_ok", c.invariants_ok()}};
}

Json to_json(const AppendixBChainRow& row) {
    return Json{{"m", row.m},
                {"lower_partial", rat_str(row.lower_partial)},
                {"lower_target", rat_str(row.lower_target)},
                {"lower_ok", row.lower_ok},
                {"upper_bound", rat_str(row.upper_bound)},
                {"upper_target", rat_str(row.upper_target)},
                {"upper_ok", row.upper_ok},
                {"tau_bracket", Json::array({row.tau_lo, row.tau_hi})}};
}

Json to_json(const AoceaSearchReport& r) {
    return Json{{"trials", r.trials},
                {"n_head", r.n_head},
                {"max_copies", r.max_copies},
                {"seed", r.seed},
                {"min_distance", r.min_distance},
                {"argmin_trial", r.argmin_trial},
                {"argmin_copies", r.argmin_copies},
                {"control_min_distance_l1", r.control_min_distance_l1},
                {"sample_distances", r.sample_distances}};
}

Json to_json(const DualGapReport& r) {
    return Json{{"measure", r.measure},
                {"rho", r.rho_value},
                {"biconjugate", r.biconjugate_value},
                {"gap", r.gap},
                {"method", r.method},
                {"weak_duality_exact", r.weak_duality_exact},
                {"lower_bound_only", r.lower_bound_only},
                {"optimizer", to_json(r.optimizer)}};
}

Json to_json(const PairedSwapReport& r) {
    return Json{{"m1", r.m1},
                {"m2", r.m2},
                {"pairs", r.pairs},
                {"each_pair_equidistributed", r.each_pair_equidistributed},
                {"eq42_equidistributed", r.eq42_equidistributed},
                {"v_average_exact", r.v_average_exact},
                {"final_bound_holds", r.final_bound_holds},
                {"bound_lhs", r.bound_lhs},
                {"bound_rhs", r.bound_rhs},
                {"constant_used", r.constant_used}};
}

}  // namespace rirs
