#include "rirs/fatou.hpp"

#include "rirs/order_structure.hpp"
#include "rirs/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace rirs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool is_decreasing_measure(const RiskMeasure& rho) {
    auto ax = rho.expected_axioms();
    return std::find(ax.begin(), ax.end(), Axiom::Decreasing) != ax.end();
}

void finalize_probe(FatouProbeReport& r, double tol) {
    std::size_t n = r.rho_values.size();
    bool stabilized = false;
    if (n >= 3) {
        double v1 = r.rho_values[n - 1], v2 = r.rho_values[n - 2], v3 = r.rho_values[n - 3];
        double scale = std::max({1e-300, std::fabs(v1), std::fabs(v2)});
        stabilized = std::fabs(v1 - v2) / scale < 1e-7 && std::fabs(v2 - v3) / scale < 1e-7;
        r.liminf_estimate = (v1 + v2 + v3) / 3.0;
    } else if (n > 0) {
        r.liminf_estimate = r.rho_values.back();
    }
    r.gap = r.rho_at_x - r.liminf_estimate;
    if (!stabilized) {
        r.verdict = "INCONCLUSIVE";
        std::ostringstream os;
        os << "sequence not stabilized after " << n << " levels";
        if (n >= 2) {
            os << " (last change " << std::fabs(r.rho_values[n - 1] - r.rho_values[n - 2]) << ")";
        }
        r.note = os.str();
    } else {
        r.verdict = (r.gap > tol) ? "FATOU_FAILS" : "FATOU_HOLDS";
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// Probes
// ---------------------------------------------------------------------------

FatouProbeReport fatou_probe_truncation(const RiskMeasure& rho, const SignedVariable& x,
                                        const std::vector<double>& levels, double tol) {
    if (levels.empty()) throw DomainError("fatou_probe_truncation: no levels");
    FatouProbeReport r;
    r.measure = rho.name();
    r.variable = x.describe();
    r.sequence_kind = "truncation";
    r.rho_at_x = rho.evaluate_signed(x);
    for (double n : levels) {
        if (n < 0) throw DomainError("fatou_probe_truncation: negative level");
        r.levels.push_back(n);
        r.rho_values.push_back(rho.evaluate_signed(x.truncated(n)));
    }
    finalize_probe(r, tol);
    return r;
}

FatouProbeReport fatou_probe_lemma31(const RiskMeasure& rho, const SignedVariable& x,
                                     Lemma31Target target, const std::vector<double>& c_seq,
                                     const std::vector<Rat>& a_seq, double tol) {
    if (c_seq.size() != a_seq.size() || c_seq.empty()) {
        throw DomainError("fatou_probe_lemma31: c and A sequences must align");
    }
    for (std::size_t i = 0; i < c_seq.size(); ++i) {
        if (c_seq[i] < 0) throw PreconditionError("fatou_probe_lemma31: c_n must be >= 0");
        if (i > 0 && (c_seq[i] > c_seq[i - 1] || a_seq[i] > a_seq[i - 1])) {
            throw PreconditionError("fatou_probe_lemma31: c_n and A_n must decrease");
        }
        if (a_seq[i] <= 0 || a_seq[i] >= 1) {
            throw PreconditionError("fatou_probe_lemma31: masses must lie in (0,1)");
        }
    }
    FatouProbeReport r;
    r.measure = rho.name();
    r.variable = x.describe();
    r.sequence_kind = target == Lemma31Target::SameX ? "lemma31:same" : "lemma31:pospart";
    r.rho_at_x = rho.evaluate_signed(x);
    const bool assert_dominance = is_decreasing_measure(rho);

    if (x.step_only()) {
        const StepVariable& h = x.head();
        StepVariable y = (target == Lemma31Target::SameX) ? h : h.positive_part();
        for (std::size_t i = 0; i < c_seq.size(); ++i) {
            SignedVariable yn = lemma31_mix_step(h, y, c_seq[i], a_seq[i]);
            double v = rho.evaluate_signed(yn);
            if (assert_dominance && v > r.rho_at_x + 1e-9 * std::max(1.0, std::fabs(r.rho_at_x))) {
                throw EvaluationError("fatou_probe_lemma31: rho(Y_n) > rho(X) for a decreasing measure");
            }
            r.levels.push_back(c_seq[i]);
            r.rho_values.push_back(v);
        }
        finalize_probe(r, tol);
        return r;
    }

    // analytic path: single negative tail, closed-form parts
    if (!x.pos_parts().empty() || x.neg_parts().size() != 1) {
        throw PreconditionError("fatou_probe_lemma31: analytic inputs need exactly one negative tail");
    }
    const AnalyticPart& tail = x.neg_parts()[0];
    double e_x = x.expectation();
    for (std::size_t i = 0; i < c_seq.size(); ++i) {
        double c = c_seq[i];
        Rat a = a_seq[i];
        if (a >= tail.mass()) {
            throw PreconditionError("fatou_probe_lemma31: A_n mass exceeds the negative tail");
        }
        // deepest mass a of the tail is A_n
        IntegralValue head_int = integrate_g(tail.q, GIdentity{}, tail.lo, tail.lo + a);
        if (head_int.divergent) throw EvaluationError("fatou_probe_lemma31: tail not integrable");

        double e_yn;
        Profile neg;
        for (const auto& cell : x.head().cells()) {
            double v = cell.value + c;
            if (cell.value != 0.0 && v < 0.0) neg.cells.push_back({cell.width, -v});
        }
        if (target == Lemma31Target::SameX) {
            // Y_n = X + c 1_{A_n^c}
            e_yn = e_x + c * to_double(Rat(1) - a);
            neg.analytic.push_back({tail.q, tail.lo, tail.lo + a});
            neg.analytic.push_back({tail.q.shifted_down(c), tail.lo + a, tail.hi});
        } else {
            // Y_n = (X + c) 1_{A_n^c}; the deepest tail mass becomes zeros
            e_yn = e_x + c * to_double(Rat(1) - a) + head_int.value;
            neg.analytic.push_back({tail.q.shifted_down(c), tail.lo + a, tail.hi});
        }
        auto v = rho.evaluate_parts(neg, e_yn);
        if (!v) {
            throw PreconditionError("fatou_probe_lemma31: measure '" + rho.name() +
                                    "' cannot evaluate analytic probe sequences");
        }
        if (assert_dominance && *v > r.rho_at_x + 1e-9 * std::max(1.0, std::fabs(r.rho_at_x))) {
            throw EvaluationError("fatou_probe_lemma31: rho(Y_n) > rho(X) for a decreasing measure");
        }
        r.levels.push_back(c);
        r.rho_values.push_back(*v);
    }
    finalize_probe(r, tol);
    return r;
}

// ---------------------------------------------------------------------------
// AOCEA certificate
// ---------------------------------------------------------------------------

AoceaCertificate aocea_orlicz_certificate(const AnalyticRearrangement& x,
                                          const OrliczFunction& phi, double eps) {
    if (!(eps > 0)) throw DomainError("aocea_orlicz_certificate: eps must be positive");
    HeartReport hm = heart_membership(x, phi);
    if (hm.verdict == HeartVerdict::NotInSpace) {
        throw PreconditionError("aocea_orlicz_certificate: X not in the Orlicz space (" + hm.rule + ")");
    }
    AoceaCertificate cert;
    cert.epsilon = eps;
    // in the heart every scale has a finite Phi-moment, so eta = 1/eps
    // already gives k = 1; at the boundary, halve past the critical scale
    cert.eta = (hm.verdict == HeartVerdict::InHeart) ? 1.0 / eps
                                                     : 1.0 / (2.0 * hm.critical_lambda);
    {
        IntegralValue full = integrate_g(x, GPhi{phi, 1.0 / cert.eta}, Rat(1));
        if (full.divergent) {
            throw EvaluationError("aocea_orlicz_certificate: E[Phi(eta X)] diverged at the chosen eta");
        }
    }
    cert.k = static_cast<unsigned>(std::ceil(1.0 / (cert.eta * eps) - 1e-12));
    if (cert.k == 0) cert.k = 1;

    // uniform tail index: smallest n with k E[Phi(eta X 1_{X >= n})] <= 1
    auto tail_integral = [&](unsigned n) {
        Profile p = Profile::from_analytic(x).cropped_below(static_cast<double>(n));
        IntegralValue v = profile_expect_g(p, GPhi{phi, 1.0 / cert.eta});
        if (v.divergent) throw EvaluationError("aocea_orlicz_certificate: tail integral diverged");
        return v.value;
    };
    unsigned n_star = 1;
    double e_tail = tail_integral(n_star);
    unsigned guard = 0;
    while (static_cast<double>(cert.k) * e_tail > 1.0) {
        n_star = n_star * 2;
        e_tail = tail_integral(n_star);
        if (++guard > 64) {
            throw EvaluationError("aocea_orlicz_certificate: budget unreachable within index bound");
        }
    }
    // walk back to the minimal feasible index
    while (n_star > 1) {
        double prev = tail_integral(n_star - 1);
        if (static_cast<double>(cert.k) * prev <= 1.0) {
            n_star -= 1;
            e_tail = prev;
        } else {
            break;
        }
    }
    cert.indices.assign(cert.k, n_star);
    cert.tail_integrals.assign(cert.k, e_tail);
    cert.budget = static_cast<double>(cert.k) * e_tail;
    cert.certified_bound = eps;

    // Z = (1/k) sum of k disjoint copies of X 1_{A_{n*}}: by disjointness
    // E[Phi(Z/eps)] = sum_i E[Phi(eta X 1_{A_{n_i}} / (k eta eps))] <= budget <= 1
    AnalyticRearrangement piece = x.cropped_below(static_cast<double>(n_star))
                                      .scaled(1.0 / static_cast<double>(cert.k));
    for (unsigned i = 0; i < cert.k; ++i) cert.z.analytic.push_back({piece, Rat(0), Rat(1)});
    cert.reevaluated_norm = luxemburg_norm(cert.z, phi, 1e-10);
    return cert;
}

// ---------------------------------------------------------------------------
// Appendix B chain
// ---------------------------------------------------------------------------

std::vector<AppendixBChainRow> verify_appendix_b_chain(unsigned m_lo, unsigned m_hi) {
    if (m_lo < 2 || m_hi < m_lo || m_hi > 60) {
        throw DomainError("verify_appendix_b_chain: need 2 <= m_lo <= m_hi <= 60");
    }
    std::vector<AppendixBChainRow> rows;
    for (unsigned m = m_lo; m <= m_hi; ++m) {
        AppendixBChainRow row;
        row.m = m;
        const unsigned M = m + 40;
        // partial sum of ∫_0^{c_m} X* = Σ_{n>=m} n!(c_n - c_{n+1}), truncated
        Rat partial = 0;
        for (unsigned n = m; n <= M; ++n) {
            partial += Rat(factorial(n)) * (staircase_breakpoint(n) - staircase_breakpoint(n + 1));
        }
        row.lower_partial = partial;
        row.lower_target = Rat(1, Rat(Int(m) + 1).convert_to<Int>() * pow2(m));
        row.lower_ok = partial >= row.lower_target;

        // certified upper bound of ∫_0^{s_m} X*: the head run on [c_m, s_m)
        // at value (m-1)!, the explicit levels to M, and the exact tail
        // majorant Σ_{n>M} n! c_n <= 2^{-M}/(M+2)
        Rat sm = appb_scale(m);
        Rat head = Rat(factorial(m - 1)) * (sm - staircase_breakpoint(m));
        Rat tail_majorant = Rat(1, pow2(M) * Int(M + 2));
        row.upper_bound = head + partial + tail_majorant;
        row.upper_target = Rat(3, Int(m) * pow2(m));
        row.upper_ok = row.upper_bound <= row.upper_target;

        Rat scale = Rat(Int(m) * pow2(m));
        row.tau_lo = to_double(Rat(scale * (head + partial)));
        row.tau_hi = to_double(Rat(scale * row.upper_bound));
        if (!row.lower_ok || !row.upper_ok) {
            std::ostringstream os;
            os << "verify_appendix_b_chain: inequality violated at m = " << m
               << " (implementation bug)";
            throw EvaluationError(os.str());
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Appendix B search
// ---------------------------------------------------------------------------

namespace {

struct TrialOutcome {
    double appb_distance = kInf;
    double l1_distance = kInf;
    unsigned copies = 0;
};

// one equidistributed copy of the staircase head: pieces relocated inside
// (0, 3/4), tail slot left as zeros
StepVariable random_head_copy(const std::vector<Cell>& pieces, const Rat& zero_budget,
                              Rng& rng) {
    std::vector<Cell> items = pieces;
    // optional split of one piece for layout variety
    if (rng.below(2) == 0) {
        std::size_t k = rng.below(items.size());
        Rat frac = rng.unit_rational(8);
        Rat left = items[k].width * frac;
        Cell right{items[k].width - left, items[k].value};
        items[k].width = left;
        items.insert(items.begin() + static_cast<std::ptrdiff_t>(k) + 1, right);
    }
    // zero fillers with random rational sizes summing to the budget
    Rat r1 = rng.unit_rational(16), r2 = rng.unit_rational(16), r3 = rng.unit_rational(16);
    Rat total = r1 + r2 + r3;
    items.push_back({zero_budget * r1 / total, 0.0});
    items.push_back({zero_budget * r2 / total, 0.0});
    items.push_back({zero_budget * r3 / total, 0.0});
    for (std::size_t i = items.size(); i > 1; --i) {
        std::size_t j = rng.below(i);
        std::swap(items[i - 1], items[j]);
    }
    items.push_back({Rat(1, 4), 0.0});  // tail slot region (3/4, 1)
    return StepVariable(std::move(items));
}

}  // namespace

AoceaSearchReport aocea_search_appendix_b(unsigned n_head, unsigned max_copies, unsigned trials,
                                          std::uint64_t seed, unsigned threads) {
    if (n_head < 1 || n_head > 18) throw DomainError("aocea_search: head level must be in [1, 18]");
    if (max_copies < 1 || trials < 1) throw DomainError("aocea_search: copies and trials >= 1");

    std::vector<Cell> pieces;
    Rat head_mass = 0;
    for (unsigned n = 1; n <= n_head; ++n) {
        Rat w = staircase_breakpoint(n) - staircase_breakpoint(n + 1);
        pieces.push_back({w, to_double(Rat(factorial(n)))});
        head_mass += w;
    }
    const Rat zero_budget = Rat(3, 4) - head_mass;
    const auto piece_dist = distribution(StepVariable([&] {
        std::vector<Cell> cs = pieces;
        cs.push_back({Rat(1) - head_mass, 0.0});
        return cs;
    }()));
    const NormSpec appb = NormSpec::appendix_b();
    const NormSpec l1 = NormSpec::lp(1.0);

    std::vector<TrialOutcome> outcomes(trials);
    Rng root(seed);
    parallel_for(trials, threads, [&](std::size_t t) {
        Rng rng = root.fork(t);
        unsigned m = 1 + static_cast<unsigned>(rng.below(max_copies));
        // weights: uniform half the time, random rationals otherwise
        std::vector<Rat> lambdas(m);
        if (rng.below(2) == 0) {
            for (auto& l : lambdas) l = Rat(1, m);
        } else {
            Rat total = 0;
            for (auto& l : lambdas) {
                l = Rat(1 + rng.below(8));
                total += l;
            }
            for (auto& l : lambdas) l /= total;
        }
        std::vector<StepVariable> copies;
        copies.reserve(m);
        for (unsigned j = 0; j < m; ++j) {
            StepVariable c = random_head_copy(pieces, zero_budget, rng);
            if (distribution(c) != piece_dist) {
                throw EvaluationError("aocea_search: generated copy not equidistributed");
            }
            copies.push_back(std::move(c));
        }
        StepVariable y_step = convex_combination(copies, lambdas);
        if (y_step.size() > 100000) {
            std::ostringstream os;
            os << "aocea_search: representation overflow at trial " << t << " (" << y_step.size()
               << " cells)";
            throw CapacityError(os.str());
        }
        Profile profile = Profile::from_step(y_step);
        for (unsigned j = 0; j < m; ++j) {
            profile.atoms.push_back({to_double(lambdas[j]), 0.0, n_head + 1});
        }
        TrialOutcome& out = outcomes[t];
        out.copies = m;
        out.appb_distance = distance_to_oc_part(profile, appb).value;
        out.l1_distance = distance_to_oc_part(profile, l1).value;
    });

    AoceaSearchReport rep;
    rep.trials = trials;
    rep.n_head = n_head;
    rep.max_copies = max_copies;
    rep.seed = seed;
    rep.min_distance = kInf;
    rep.control_min_distance_l1 = kInf;
    for (std::size_t t = 0; t < trials; ++t) {
        if (outcomes[t].appb_distance < rep.min_distance) {
            rep.min_distance = outcomes[t].appb_distance;
            rep.argmin_trial = t;
            rep.argmin_copies = outcomes[t].copies;
        }
        rep.control_min_distance_l1 = std::min(rep.control_min_distance_l1, outcomes[t].l1_distance);
        if (t < 8) rep.sample_distances.push_back(outcomes[t].appb_distance);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Partition averaging
// ---------------------------------------------------------------------------

namespace {

using Interval = std::pair<Rat, Rat>;

std::vector<Interval> block_intervals(const StepVariable& x, const std::vector<std::size_t>& blk) {
    auto bps = x.breakpoints();
    std::vector<Interval> iv;
    for (std::size_t idx : blk) iv.push_back({bps[idx], bps[idx + 1]});
    std::sort(iv.begin(), iv.end());
    // merge adjacent
    std::vector<Interval> merged;
    for (const auto& i : iv) {
        if (!merged.empty() && merged.back().second == i.first) {
            merged.back().second = i.second;
        } else {
            merged.push_back(i);
        }
    }
    return merged;
}

std::vector<Cell> extract_content(const StepVariable& x, const std::vector<Interval>& ivs) {
    std::vector<Cell> content;
    auto bps = x.breakpoints();
    for (const auto& [lo, hi] : ivs) {
        for (std::size_t i = 0; i < x.size(); ++i) {
            Rat clo = std::max(bps[i], lo);
            Rat chi = std::min(bps[i + 1], hi);
            if (chi > clo) content.push_back({chi - clo, x.cells()[i].value});
        }
    }
    return content;
}

StepVariable pour_content(const StepVariable& base, const std::vector<Interval>& ivs,
                          const std::vector<Cell>& content) {
    // overlay content (in order) onto the intervals, keep base elsewhere
    auto bps = base.breakpoints();
    std::vector<Cell> out;
    std::size_t ci = 0;
    Rat pending = content.empty() ? Rat(0) : content[0].width;
    auto inside = [&](const Rat& p) -> bool {
        for (const auto& [lo, hi] : ivs) {
            if (p >= lo && p < hi) return true;
        }
        return false;
    };
    // walk the merged breakpoint grid of base and intervals
    std::vector<Rat> marks;
    for (const auto& [lo, hi] : ivs) {
        if (lo > 0 && lo < 1) marks.push_back(lo);
        if (hi > 0 && hi < 1) marks.push_back(hi);
    }
    StepVariable split = base.split_at(marks);
    auto sbps = split.breakpoints();
    for (std::size_t i = 0; i < split.size(); ++i) {
        Rat lo = sbps[i], hi = sbps[i + 1];
        if (!inside(lo)) {
            out.push_back(split.cells()[i]);
            continue;
        }
        Rat need = hi - lo;
        while (need > 0) {
            if (ci >= content.size()) throw StructuralError("pour_content: content exhausted");
            Rat take = std::min(need, pending);
            out.push_back({take, content[ci].value});
            need -= take;
            pending -= take;
            if (pending == 0 && ++ci < content.size()) pending = content[ci].width;
        }
    }
    if (ci < content.size() && pending != 0) {
        throw StructuralError("pour_content: content left over");
    }
    return StepVariable(std::move(out));
}

Rat integral_over(const StepVariable& v, const std::vector<Interval>& ivs) {
    Rat acc = 0;
    auto bps = v.breakpoints();
    for (const auto& [lo, hi] : ivs) {
        for (std::size_t i = 0; i < v.size(); ++i) {
            Rat clo = std::max(bps[i], lo);
            Rat chi = std::min(bps[i + 1], hi);
            if (chi > clo) acc += (chi - clo) * rat_from_double(v.cells()[i].value);
        }
    }
    return acc;
}

std::multiset<std::pair<double, Rat>> content_multiset(const std::vector<Cell>& cells) {
    std::map<double, Rat> agg;
    for (const auto& c : cells) agg[c.value] += c.width;
    return {agg.begin(), agg.end()};
}

// exact-rational convex combination of step variables with aligned splits
struct RationalCombo {
    std::vector<Rat> widths;
    std::vector<Rat> values;

    StepVariable to_step() const {
        std::vector<Cell> cells(widths.size());
        for (std::size_t i = 0; i < widths.size(); ++i) cells[i] = {widths[i], to_double(values[i])};
        return StepVariable(std::move(cells));
    }
};

RationalCombo rational_convex_combination(const std::vector<StepVariable>& xs,
                                          const std::vector<Rat>& lambdas) {
    // iterate pairwise refinement, accumulating exact values
    std::vector<Rat> widths;
    std::vector<Rat> values;
    for (const auto& c : xs[0].cells()) {
        widths.push_back(c.width);
        values.push_back(lambdas[0] * rat_from_double(c.value));
    }
    for (std::size_t k = 1; k < xs.size(); ++k) {
        std::vector<Rat> nw, nv;
        const auto& cells = xs[k].cells();
        std::size_t i = 0, j = 0;
        Rat ai = widths[0], bj = cells[0].width;
        while (true) {
            Rat w = std::min(ai, bj);
            nw.push_back(w);
            nv.push_back(values[i] + lambdas[k] * rat_from_double(cells[j].value));
            ai -= w;
            bj -= w;
            if (ai == 0) {
                if (++i == widths.size()) break;
                ai = widths[i];
            }
            if (bj == 0) {
                if (++j == cells.size()) break;
                bj = cells[j].width;
            }
        }
        widths = std::move(nw);
        values = std::move(nv);
    }
    return {std::move(widths), std::move(values)};
}

}  // namespace

BlockwiseAverageResult blockwise_equidistributed_average(const StepVariable& x,
                                                         const Partition& pi, double eps,
                                                         const NormSpec& norm, unsigned copies,
                                                         std::uint64_t seed) {
    pi.validate(x);
    if (copies < 1) throw DomainError("blockwise_equidistributed_average: copies >= 1");
    Rng rng(seed);

    std::vector<std::vector<Interval>> intervals;
    intervals.reserve(pi.blocks.size());
    for (const auto& blk : pi.blocks) intervals.push_back(block_intervals(x, blk));

    std::vector<StepVariable> xs;
    xs.reserve(copies);
    bool blockwise_ok = true;
    for (unsigned i = 0; i < copies; ++i) {
        StepVariable xi = x;
        for (const auto& ivs : intervals) {
            std::vector<Cell> content = extract_content(x, ivs);
            // seeded shuffle with occasional splits
            unsigned splits = static_cast<unsigned>(rng.below(3));
            for (unsigned s = 0; s < splits; ++s) {
                std::size_t k = rng.below(content.size());
                Rat frac = rng.unit_rational(8);
                Rat left = content[k].width * frac;
                Cell right{content[k].width - left, content[k].value};
                content[k].width = left;
                content.insert(content.begin() + static_cast<std::ptrdiff_t>(k) + 1, right);
            }
            for (std::size_t n = content.size(); n > 1; --n) {
                std::swap(content[n - 1], content[rng.below(n)]);
            }
            xi = pour_content(xi, ivs, content);
            blockwise_ok = blockwise_ok &&
                           content_multiset(extract_content(xi, ivs)) ==
                               content_multiset(extract_content(x, ivs));
        }
        xs.push_back(std::move(xi));
    }
    // dyadic random weights: a_i / 64 with sum 64
    std::vector<Rat> lambdas(copies, Rat(1, copies));
    if (copies > 1) {
        std::vector<unsigned> a(copies, 1);
        unsigned rest = 64 - copies;
        for (unsigned i = 0; i + 1 < copies && rest > 0; ++i) {
            unsigned take = static_cast<unsigned>(rng.below(rest + 1));
            a[i] += take;
            rest -= take;
        }
        a[copies - 1] += rest;
        for (unsigned i = 0; i < copies; ++i) lambdas[i] = Rat(a[i], 64);
    }

    RationalCombo combo = rational_convex_combination(xs, lambdas);
    BlockwiseAverageResult res{combo.to_step(), combo.to_step(), lambdas, eps, 0.0, false, false};
    res.blockwise_equidistributed = blockwise_ok;

    // exact conditional means: integral per block of the rational combo
    bool means_ok = true;
    for (const auto& ivs : intervals) {
        Rat target = integral_over(x, ivs);
        // integrate the exact combo over the block
        Rat acc = 0;
        Rat pos = 0;
        std::size_t ci = 0;
        Rat remaining = combo.widths.empty() ? Rat(0) : combo.widths[0];
        for (const auto& [lo, hi] : ivs) {
            // advance to lo
            while (pos < lo) {
                Rat step = std::min(remaining, Rat(lo - pos));
                pos += step;
                remaining -= step;
                if (remaining == 0 && ++ci < combo.widths.size()) remaining = combo.widths[ci];
            }
            while (pos < hi) {
                Rat step = std::min(remaining, Rat(hi - pos));
                acc += step * combo.values[ci];
                pos += step;
                remaining -= step;
                if (remaining == 0 && ++ci < combo.widths.size()) remaining = combo.widths[ci];
            }
        }
        means_ok = means_ok && (acc == target);
    }
    res.conditional_mean_preserved = means_ok;

    // at step scale the average is itself bounded, so V = X' and d = 0
    res.v = res.x_prime;
    res.distance = 0.0;
    (void)norm;
    return res;
}

PairedSwapReport paired_swap_average(const StepVariable& x_prime, const StepVariable& v,
                                     const Partition& pi, unsigned m1, unsigned m2,
                                     const NormSpec& norm, std::size_t max_pairs,
                                     std::uint64_t seed) {
    pi.validate(x_prime);
    if (pi.blocks.size() != 2) {
        throw StructuralError("paired_swap_average: needs a two-block partition");
    }
    if (m1 < 1 || m2 < 1) throw StructuralError("paired_swap_average: m1, m2 >= 1");

    std::vector<Interval> iv_a = block_intervals(x_prime, pi.blocks[0]);
    std::vector<Interval> iv_b = block_intervals(x_prime, pi.blocks[1]);
    Rat mass_a = 0, mass_b = 0;
    for (const auto& [lo, hi] : iv_a) mass_a += hi - lo;
    for (const auto& [lo, hi] : iv_b) mass_b += hi - lo;

    // positional equal-mass subdivision of each block
    auto subdivide = [](const std::vector<Interval>& ivs, const Rat& mass, unsigned parts) {
        std::vector<std::vector<Interval>> subs(parts);
        Rat per = mass / parts;
        std::size_t k = 0;
        Rat filled = 0;
        for (auto [lo, hi] : ivs) {
            while (lo < hi) {
                Rat room = per - filled;
                Rat take = std::min(room, Rat(hi - lo));
                subs[k].push_back({lo, lo + take});
                lo += take;
                filled += take;
                if (filled == per && k + 1 < parts) {
                    ++k;
                    filled = 0;
                }
            }
        }
        return subs;
    };
    auto subs_a = subdivide(iv_a, mass_a, m1);
    auto subs_b = subdivide(iv_b, mass_b, m2);

    // V must be constant on each sub-block
    std::vector<Rat> a_vals(m1), b_vals(m2);
    auto const_value = [&](const std::vector<Interval>& sub) {
        auto content = extract_content(v, sub);
        for (const auto& c : content) {
            if (c.value != content[0].value) {
                throw StructuralError("paired_swap_average: V not constant on a sub-block");
            }
        }
        return rat_from_double(content[0].value);
    };
    for (unsigned j = 0; j < m1; ++j) a_vals[j] = const_value(subs_a[j]);
    for (unsigned l = 0; l < m2; ++l) b_vals[l] = const_value(subs_b[l]);

    // all pairs when the count is small, a seeded sample otherwise
    double total_pairs = 1.0;
    for (unsigned i = 2; i <= m1; ++i) total_pairs *= i;
    for (unsigned i = 2; i <= m2; ++i) total_pairs *= i;
    std::vector<std::pair<std::vector<unsigned>, std::vector<unsigned>>> pairs;
    if (total_pairs <= static_cast<double>(max_pairs)) {
        std::vector<unsigned> tau(m1), sigma(m2);
        std::iota(tau.begin(), tau.end(), 0u);
        do {
            std::iota(sigma.begin(), sigma.end(), 0u);
            do {
                pairs.emplace_back(tau, sigma);
            } while (std::next_permutation(sigma.begin(), sigma.end()));
        } while (std::next_permutation(tau.begin(), tau.end()));
    } else {
        Rng rng(seed);
        auto shuffled = [&](unsigned n) {
            std::vector<unsigned> p(n);
            std::iota(p.begin(), p.end(), 0u);
            for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[rng.below(i)]);
            return p;
        };
        for (std::size_t k = 0; k < max_pairs; ++k) {
            pairs.emplace_back(shuffled(m1), shuffled(m2));
        }
    }

    // reference difference distribution X' - V
    auto diff_dist = distribution(sub(x_prime, v));
    auto xp_dist = distribution(x_prime);

    PairedSwapReport rep;
    rep.m1 = m1;
    rep.m2 = m2;
    rep.each_pair_equidistributed = true;
    rep.eq42_equidistributed = true;

    std::vector<StepVariable> transported;
    transported.reserve(pairs.size());
    for (const auto& [tau, sigma] : pairs) {
        // X_(tau,sigma)|_{A_j} ~ X'|_{A_{tau(j)}}: transport content
        StepVariable xt = x_prime;
        for (unsigned j = 0; j < m1; ++j) {
            xt = pour_content(xt, subs_a[j], extract_content(x_prime, subs_a[tau[j]]));
        }
        for (unsigned l = 0; l < m2; ++l) {
            xt = pour_content(xt, subs_b[l], extract_content(x_prime, subs_b[sigma[l]]));
        }
        // V_(tau,sigma)
        StepVariable vt = v;
        for (unsigned j = 0; j < m1; ++j) {
            std::vector<Cell> c = {{mass_a / m1, to_double(a_vals[tau[j]])}};
            vt = pour_content(vt, subs_a[j], c);
        }
        for (unsigned l = 0; l < m2; ++l) {
            std::vector<Cell> c = {{mass_b / m2, to_double(b_vals[sigma[l]])}};
            vt = pour_content(vt, subs_b[l], c);
        }
        rep.each_pair_equidistributed =
            rep.each_pair_equidistributed && (distribution(xt) == xp_dist);
        rep.eq42_equidistributed =
            rep.eq42_equidistributed && (distribution(sub(xt, vt)) == diff_dist);
        transported.push_back(std::move(xt));
    }
    rep.pairs = transported.size();

    // average of the V_(tau,sigma): each sub-block sees every a value
    // equally often, so the average is E[V|pi]; verify exactly
    Rat a_mean = 0, b_mean = 0;
    for (const auto& av : a_vals) a_mean += av;
    a_mean /= int(m1);
    for (const auto& bv : b_vals) b_mean += bv;
    b_mean /= int(m2);
    Rat ev_a = integral_over(v, iv_a) / mass_a;
    Rat ev_b = integral_over(v, iv_b) / mass_b;
    rep.v_average_exact = (a_mean == ev_a) && (b_mean == ev_b);

    // final bound: ||avg X_(tau,sigma) - E[X'|pi]|| <= (C+1) ||X' - V||
    std::vector<Rat> lambdas(transported.size(), Rat(1, Int(transported.size())));
    RationalCombo avg = rational_convex_combination(transported, lambdas);
    StepVariable avg_step = avg.to_step();
    Rat exa = integral_over(x_prime, iv_a) / mass_a;
    Rat exb = integral_over(x_prime, iv_b) / mass_b;
    // E[X'|pi] as a step variable on the block layout
    std::vector<Rat> marks;
    for (const auto& [lo, hi] : iv_a) {
        if (lo > 0 && lo < 1) marks.push_back(lo);
        if (hi > 0 && hi < 1) marks.push_back(hi);
    }
    StepVariable cond = x_prime.split_at(marks);
    {
        auto bps = cond.breakpoints();
        std::vector<Cell> cc = cond.cells();
        for (std::size_t i = 0; i < cc.size(); ++i) {
            bool in_a = false;
            for (const auto& [lo, hi] : iv_a) {
                if (bps[i] >= lo && bps[i] < hi) in_a = true;
            }
            cc[i].value = to_double(in_a ? exa : exb);
        }
        cond = StepVariable(std::move(cc));
    }
    double lhs = norm.evaluate(Profile::from_step(sub(avg_step, cond)));
    double xv_norm = norm.evaluate(Profile::from_step(sub(x_prime, v)));
    double c_norm = norm.l1_comparison_constant();
    double one_norm = norm.evaluate(Profile::from_step(StepVariable::constant(1.0)));
    double c_used = (1.0 / to_double(mass_a) + 1.0 / to_double(mass_b)) * c_norm * one_norm;
    rep.bound_lhs = lhs;
    rep.bound_rhs = (c_used + 1.0) * xv_norm;
    rep.constant_used = c_used;
    rep.final_bound_holds = lhs <= rep.bound_rhs + 1e-9;
    return rep;
}

}  // namespace rirs
