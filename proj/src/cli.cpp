#include "rirs/cli.hpp"

#include "rirs/catalog.hpp"
#include "rirs/duality.hpp"
#include "rirs/fatou.hpp"
#include "rirs/order_structure.hpp"
#include "rirs/parallel.hpp"
#include "rirs/serialization.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace rirs {

namespace {

constexpr const char* kVersion = "rirs 0.1.0";

std::string fnv1a_hex(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

Json envelope(const std::string& command, const Json& config, Json report) {
    std::string canon = command + "|" + config.dump();
    return Json{{"tool", kVersion},
                {"command", command},
                {"config", config},
                {"config_hash", fnv1a_hex(canon)},
                {"report", std::move(report)}};
}

std::vector<double> parse_levels(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) out.push_back(std::stod(tok));
    }
    if (out.empty()) throw SpecError("empty level list");
    return out;
}

std::pair<unsigned, unsigned> parse_range(const std::string& s) {
    auto dots = s.find("..");
    if (dots == std::string::npos) {
        unsigned m = static_cast<unsigned>(std::stoul(s));
        return {m, m};
    }
    return {static_cast<unsigned>(std::stoul(s.substr(0, dots))),
            static_cast<unsigned>(std::stoul(s.substr(dots + 2)))};
}

}  // namespace

int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    // --config FILE: flat key=value lines become flags the command line has
    // not set already, so explicit flags always win
    try {
        for (std::size_t i = 0; i < args.size(); ++i) {
            if (args[i] != "--config") continue;
            if (i + 1 >= args.size()) throw SpecError("--config needs a file path");
            std::ifstream in(args[i + 1]);
            if (!in) throw SpecError("cannot open config file '" + args[i + 1] + "'");
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
                       args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
            std::string line;
            unsigned lineno = 0;
            std::vector<std::string> extra;
            while (std::getline(in, line)) {
                ++lineno;
                if (line.empty() || line[0] == '#') continue;
                auto eq = line.find('=');
                if (eq == std::string::npos || eq == 0) {
                    throw SpecError("config line " + std::to_string(lineno) +
                                    ": expected key=value, got '" + line + "'");
                }
                std::string key = "--" + line.substr(0, eq);
                bool present = false;
                for (const auto& a : args) present |= (a == key || a.rfind(key + "=", 0) == 0);
                if (!present) {
                    extra.push_back(key);
                    extra.push_back(line.substr(eq + 1));
                }
            }
            args.insert(args.end(), extra.begin(), extra.end());
            break;
        }
    } catch (const SpecError& e) {
        err << "usage error: " << e.what() << "\n";
        return 2;
    }

    CLI::App app{"rearrangement-invariant spaces and law-invariant risk measures, at desk scale"};
    app.require_subcommand(1);

    std::string norm_s = "lp:1";
    std::string measure_s = "neg-mean";
    std::string variable_s = "catalog:uniform4";
    std::string format = "json";
    std::string sequence = "truncation";
    std::string levels_s;
    std::string thresholds_s = "1,2,4,8,16,32,64";
    std::string method_s = "auto";
    std::string m_range = "2..12";
    std::uint64_t seed = 1;
    unsigned trials = 1000;
    unsigned threads = default_threads();
    unsigned head = 6, copies = 6, cells = 6, count = 100;
    double eps = 0.1, tol = 1e-6, gap_tol = 1e-10;
    bool trace = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--format", format, "json or csv");
        cmd->add_option("--seed", seed, "PRNG seed");
        cmd->add_option("--threads", threads, "worker count (default RIRS_THREADS or cores)");
    };

    auto* c_norm = app.add_subcommand("norm", "evaluate a norm on a variable");
    c_norm->add_option("--norm", norm_s)->required();
    c_norm->add_option("--variable", variable_s)->required();
    c_norm->add_flag("--trace", trace, "emit the evaluation audit record");
    add_common(c_norm);

    auto* c_dist = app.add_subcommand("distance", "tail profile and distance to the order-continuous part");
    c_dist->add_option("--norm", norm_s)->required();
    c_dist->add_option("--variable", variable_s)->required();
    c_dist->add_option("--thresholds", thresholds_s, "comma-separated tail thresholds");
    add_common(c_dist);

    auto* c_rho = app.add_subcommand("rho", "evaluate a risk measure on a variable");
    c_rho->add_option("--measure", measure_s)->required();
    c_rho->add_option("--variable", variable_s)->required();
    add_common(c_rho);

    auto* c_ax = app.add_subcommand("axioms", "run the coherence suite");
    c_ax->add_option("--measure", measure_s)->required();
    c_ax->add_option("--trials", trials);
    add_common(c_ax);

    auto* c_fp = app.add_subcommand("fatou-probe", "probe the Fatou property along a sequence");
    c_fp->add_option("--measure", measure_s)->required();
    c_fp->add_option("--variable", variable_s)->required();
    c_fp->add_option("--sequence", sequence, "truncation | lemma31-same | lemma31-pospart");
    c_fp->add_option("--levels", levels_s, "comma-separated levels (default powers of two)");
    c_fp->add_option("--tol", tol, "gap tolerance for the verdict");
    add_common(c_fp);

    std::string cert_norm_s = "orlicz:exp";
    auto* c_cert = app.add_subcommand("aocea-cert", "constructive AOCEA certificate (Orlicz)");
    c_cert->add_option("--variable", variable_s)->required();
    c_cert->add_option("--orlicz", cert_norm_s, "orlicz:exp or orlicz:power:<p>");
    c_cert->add_option("--eps", eps);
    add_common(c_cert);

    auto* c_search = app.add_subcommand("aocea-search", "equidistributed-average search in the Appendix-B space");
    c_search->add_option("--head", head, "explicit staircase head level");
    c_search->add_option("--copies", copies, "max copies per candidate");
    c_search->add_option("--trials", trials);
    add_common(c_search);

    auto* c_chain = app.add_subcommand("verify-appendixb", "exact Appendix-B inequality chain");
    c_chain->add_option("--m", m_range, "level range, e.g. 2..12");
    add_common(c_chain);

    auto* c_dual = app.add_subcommand("dual-gap", "Fenchel-Moreau gap check on step variables");
    c_dual->add_option("--measure", measure_s)->required();
    c_dual->add_option("--count", count, "number of random variables");
    c_dual->add_option("--cells", cells, "max cells per variable");
    c_dual->add_option("--method", method_s, "auto | closed | vertex | ascent");
    c_dual->add_option("--tol", gap_tol, "acceptance gap tolerance");
    add_common(c_dual);

    auto* c_cat = app.add_subcommand("catalog", "list catalog entries");
    add_common(c_cat);

    try {
        std::vector<const char*> argv;
        argv.push_back("rirs");
        for (const auto& a : args) argv.push_back(a.c_str());
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help() << "\n";
            return 0;
        }
        err << "usage error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (*c_norm) {
            Json cfg{{"norm", norm_s}, {"variable", variable_s}, {"trace", trace}};
            NormSpec norm = catalog::parse_norm(norm_s);
            SignedVariable x = catalog::parse_variable(variable_s);
            NormAudit audit;
            double v = norm.evaluate(x.abs_profile(), trace ? &audit : nullptr);
            Json rep{{"norm", norm.name()}, {"value", v},
                     {"provenance", trace ? to_json(audit) : Json{{"method", "norm-evaluation"}}}};
            out << envelope("norm", cfg, rep).dump(2) << "\n";
            return 0;
        }
        if (*c_dist) {
            Json cfg{{"norm", norm_s}, {"variable", variable_s}, {"thresholds", thresholds_s}};
            NormSpec norm = catalog::parse_norm(norm_s);
            SignedVariable x = catalog::parse_variable(variable_s);
            TailProfile tp = tail_norm_profile(x, norm, parse_levels(thresholds_s));
            DistanceReport dr = distance_to_oc_part(x.negative_profile(), norm);
            if (format == "csv") {
                out << "threshold,norm\n";
                for (std::size_t i = 0; i < tp.thresholds.size(); ++i) {
                    out << tp.thresholds[i] << "," << tp.norms[i] << "\n";
                }
                out << "# limit," << tp.limit << "\n# distance_to_oc_part," << dr.value << "\n";
            } else {
                Json rep{{"tail_profile", to_json(tp)}, {"distance_to_oc_part", to_json(dr)}};
                out << envelope("distance", cfg, rep).dump(2) << "\n";
            }
            return 0;
        }
        if (*c_rho) {
            Json cfg{{"measure", measure_s}, {"variable", variable_s}};
            MeasureSpec spec = catalog::parse_measure(measure_s);
            auto rho = make_measure(spec);
            SignedVariable x = catalog::parse_variable(variable_s);
            double v = rho->evaluate_signed(x);
            Json rep{{"measure", rho->name()}, {"value", v},
                     {"provenance", x.step_only() ? "exact-step" : "analytic-closed-forms"}};
            out << envelope("rho", cfg, rep).dump(2) << "\n";
            return 0;
        }
        if (*c_ax) {
            Json cfg{{"measure", measure_s}, {"trials", trials}, {"seed", seed},
                     {"threads", threads}};
            MeasureSpec spec = catalog::parse_measure(measure_s);
            auto rho = make_measure(spec);
            CoherenceReport rep = coherence_suite(*rho, trials, seed, threads);
            out << envelope("axioms", cfg, to_json(rep)).dump(2) << "\n";
            return rep.all_passed() ? 0 : 1;
        }
        if (*c_fp) {
            Json cfg{{"measure", measure_s}, {"variable", variable_s}, {"sequence", sequence},
                     {"tol", tol}};
            MeasureSpec spec = catalog::parse_measure(measure_s);
            auto rho = make_measure(spec);
            SignedVariable x = catalog::parse_variable(variable_s);
            FatouProbeReport rep;
            if (sequence == "truncation") {
                std::vector<double> levels = levels_s.empty()
                                                 ? std::vector<double>{1, 2, 4, 8, 16, 32, 64, 128}
                                                 : parse_levels(levels_s);
                rep = fatou_probe_truncation(*rho, x, levels, tol);
            } else if (sequence == "lemma31-same" || sequence == "lemma31-pospart") {
                Lemma31Target target = sequence == "lemma31-same" ? Lemma31Target::SameX
                                                                  : Lemma31Target::PositivePart;
                std::vector<double> cs;
                std::vector<Rat> as;
                for (unsigned n = 1; n <= 40; ++n) {
                    cs.push_back(std::ldexp(1.0, -static_cast<int>(n)));
                    as.push_back(Rat(1, Int(1) << (n + 1)));
                }
                rep = fatou_probe_lemma31(*rho, x, target, cs, as, tol);
            } else {
                throw SpecError("unknown sequence '" + sequence + "'");
            }
            out << envelope("fatou-probe", cfg, to_json(rep)).dump(2) << "\n";
            return 0;
        }
        if (*c_cert) {
            Json cfg{{"variable", variable_s}, {"orlicz", cert_norm_s}, {"eps", eps}};
            NormSpec norm = catalog::parse_norm(cert_norm_s);
            if (norm.tag() != NormTag::Orlicz) throw SpecError("aocea-cert needs an Orlicz norm");
            SignedVariable x = catalog::parse_variable(variable_s);
            const std::vector<AnalyticPart>& parts =
                x.pos_parts().empty() ? x.neg_parts() : x.pos_parts();
            if (parts.size() != 1 || parts[0].lo != 0 || parts[0].hi != 1) {
                throw SpecError("aocea-cert needs a pure analytic variable");
            }
            AoceaCertificate cert = aocea_orlicz_certificate(parts[0].q, norm.phi(), eps);
            out << envelope("aocea-cert", cfg, to_json(cert)).dump(2) << "\n";
            return cert.invariants_ok() ? 0 : 1;
        }
        if (*c_search) {
            Json cfg{{"head", head}, {"copies", copies}, {"trials", trials}, {"seed", seed},
                     {"threads", threads}};
            AoceaSearchReport rep = aocea_search_appendix_b(head, copies, trials, seed, threads);
            out << envelope("aocea-search", cfg, to_json(rep)).dump(2) << "\n";
            // a distance below the paper's separation constant is a finding
            return rep.min_distance >= 0.25 - 1e-9 ? 0 : 1;
        }
        if (*c_chain) {
            auto [mlo, mhi] = parse_range(m_range);
            Json cfg{{"m_lo", mlo}, {"m_hi", mhi}};
            auto rows = verify_appendix_b_chain(mlo, mhi);
            Json arr = Json::array();
            for (const auto& r : rows) arr.push_back(to_json(r));
            out << envelope("verify-appendixb", cfg, Json{{"rows", arr}, {"all_ok", true}}).dump(2)
                << "\n";
            return 0;
        }
        if (*c_dual) {
            Json cfg{{"measure", measure_s}, {"count", count}, {"cells", cells},
                     {"method", method_s}, {"seed", seed}, {"tol", gap_tol}};
            MeasureSpec spec = catalog::parse_measure(measure_s);
            DualMethod method = DualMethod::Auto;
            if (method_s == "closed") method = DualMethod::ClosedForm;
            else if (method_s == "vertex") method = DualMethod::Vertex;
            else if (method_s == "ascent") method = DualMethod::Ascent;
            else if (method_s != "auto") throw SpecError("unknown method '" + method_s + "'");
            Rng rng(seed);
            std::vector<StepVariable> xs;
            for (unsigned i = 0; i < count; ++i) {
                xs.push_back(random_step_variable(rng, cells, 8.0, false));
            }
            auto rows = dual_gap_sweep(spec, xs, method, seed);
            double max_gap = 0.0;
            for (const auto& r : rows) max_gap = std::max(max_gap, r.gap);
            bool ok = true;
            for (const auto& r : rows) ok = ok && (r.lower_bound_only || r.gap <= gap_tol);
            if (format == "csv") {
                out << "index,rho,biconjugate,gap,method,weak_duality_exact,lower_bound_only\n";
                for (std::size_t i = 0; i < rows.size(); ++i) {
                    const auto& r = rows[i];
                    out << i << "," << std::setprecision(17) << r.rho_value << ","
                        << r.biconjugate_value << "," << r.gap << "," << r.method << ","
                        << r.weak_duality_exact << "," << r.lower_bound_only << "\n";
                }
            } else {
                Json arr = Json::array();
                for (const auto& r : rows) arr.push_back(to_json(r));
                out << envelope("dual-gap", cfg,
                                Json{{"rows", arr}, {"max_gap", max_gap}, {"within_tol", ok}})
                           .dump(2)
                    << "\n";
            }
            return ok ? 0 : 1;
        }
        if (*c_cat) {
            Json rep{{"variables", catalog::variable_names()},
                     {"norms", catalog::norm_names()},
                     {"measures", catalog::measure_names()}};
            out << envelope("catalog", Json::object(), rep).dump(2) << "\n";
            return 0;
        }
    } catch (const SpecError& e) {
        err << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const DomainError& e) {
        err << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    err << "usage error: no command\n";
    return 2;
}

}  // namespace rirs
