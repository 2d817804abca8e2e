#include "rirs/duality.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace rirs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool positively_homogeneous(MeasureKind k) { return k != MeasureKind::BrokenSecondMoment; }

// probe directions: sign patterns (exhaustive for small grids), indicators,
// constants, the Y+1 direction, and seeded random variables
std::vector<StepVariable> probe_directions(const StepVariable& y, unsigned probe_count,
                                           std::uint64_t seed) {
    std::vector<StepVariable> dirs;
    const std::size_t n = y.size();
    if (n <= 10) {
        for (std::uint64_t mask = 1; mask < (1ULL << n); ++mask) {
            std::vector<Cell> cells = y.cells();
            for (std::size_t i = 0; i < n; ++i) {
                cells[i].value = (mask >> i) & 1 ? 1.0 : -1.0;
            }
            dirs.emplace_back(std::move(cells));
        }
    }
    dirs.push_back(StepVariable::constant(1.0));
    dirs.push_back(StepVariable::constant(-1.0));
    dirs.push_back(y.shifted(1.0));  // catches every Y != -1 against the mean
    dirs.push_back(y);
    Rng rng(seed);
    while (dirs.size() < probe_count + 4) {
        dirs.push_back(random_step_variable(rng, std::max<std::size_t>(n, 4), 4.0, false));
    }
    return dirs;
}

// exact membership of Q = -Y in the ES dual set {0 <= Q <= 1/alpha, E[Q]=1}
std::optional<std::string> es_membership_violation(const StepVariable& y, const Rat& alpha) {
    Rat cap = Rat(1) / alpha;
    Rat mean = 0;
    for (const auto& c : y.cells()) {
        Rat q = -rat_from_double(c.value);
        if (q < 0) return "density negative (Y > 0 somewhere)";
        if (q > cap) return "density exceeds 1/alpha";
        mean += c.width * q;
    }
    if (mean != 1) return "E[Q] = " + rat_str(mean) + " != 1";
    return std::nullopt;
}

// exact core membership for a distortion: E[Q 1_A] <= g(P(A)) for every
// cell subset, with E[Q] = 1
std::optional<std::string> core_membership_violation(const StepVariable& y,
                                                     const DistortionSpec& g) {
    const std::size_t n = y.size();
    if (n > 16) return "grid too large for exact core membership";
    Rat mean = 0;
    for (const auto& c : y.cells()) {
        Rat q = -rat_from_double(c.value);
        if (q < 0) return "density negative";
        mean += c.width * q;
    }
    if (mean != 1) return "E[Q] != 1";
    for (std::uint64_t mask = 1; mask < (1ULL << n); ++mask) {
        Rat qa = 0, pa = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if ((mask >> i) & 1) {
                qa += y.cells()[i].width * Rat(-rat_from_double(y.cells()[i].value));
                pa += y.cells()[i].width;
            }
        }
        if (qa > g.eval_rat(pa)) {
            std::ostringstream os;
            os << "capacity exceeded on a set of mass " << rat_str(pa);
            return os.str();
        }
    }
    return std::nullopt;
}

Rat rho_rat(const MeasureSpec& spec, const StepVariable& x) {
    switch (spec.kind) {
        case MeasureKind::NegMean:
        case MeasureKind::Example21:
            return -x.expectation_rat();
        case MeasureKind::ExpectedShortfall:
            return expected_shortfall_rat(x, spec.alpha);
        case MeasureKind::Distortion:
            return distortion_rho_rat(x, spec.g);
        case MeasureKind::SupPhi:
            return counterexample_rho_rat(*spec.weights, x);
        case MeasureKind::BrokenSecondMoment:
            return pointwise_product_expectation_rat(x, x);
    }
    throw SpecError("rho_rat: unknown measure");
}

Rat pairing_rat(const StepVariable& x, const StepVariable& y) {
    return pointwise_product_expectation_rat(x, y);
}

}  // namespace

ConjugateResult conjugate(const MeasureSpec& spec, const StepVariable& y, unsigned probe_count,
                          std::uint64_t seed) {
    ConjugateResult out;
    auto rho = make_measure(spec);

    // exact dual-set membership where the catalog has one
    switch (spec.kind) {
        case MeasureKind::NegMean:
        case MeasureKind::Example21: {
            out.method = "closed-form-dual";
            bool is_neg_one = true;
            for (const auto& c : y.cells()) is_neg_one &= (c.value == -1.0);
            if (is_neg_one) return out;
            out.infinite = true;
            out.value = kInf;
            out.witness = "direction Y + 1 scales without bound";
            return out;
        }
        case MeasureKind::ExpectedShortfall: {
            out.method = "closed-form-dual";
            if (auto v = es_membership_violation(y, spec.alpha)) {
                out.infinite = true;
                out.value = kInf;
                out.witness = *v;
            }
            return out;
        }
        case MeasureKind::Distortion: {
            if (spec.g.exact() && spec.g.concave()) {
                out.method = "closed-form-dual";
                if (auto v = core_membership_violation(y, spec.g)) {
                    out.infinite = true;
                    out.value = kInf;
                    out.witness = *v;
                }
                return out;
            }
            break;  // fall through to probes
        }
        default:
            break;
    }

    // scaling probes: for positively homogeneous rho,
    // sup_t t (E[X0 Y] - rho(X0)) is 0 or infinity per direction
    auto dirs = probe_directions(y, probe_count, seed);
    if (positively_homogeneous(spec.kind)) {
        out.method = "scaling-probes";
        for (const auto& d : dirs) {
            Rat margin = pairing_rat(d, y) - rho_rat(spec, d);
            if (margin > 0) {
                out.infinite = true;
                out.value = kInf;
                std::ostringstream os;
                os << "probe direction with margin " << to_double(margin);
                out.witness = os.str();
                return out;
            }
        }
        out.lower_bound_only = true;  // feasibility certified only on the probe grid
        return out;
    }
    // general convex: best probe value, honestly a lower bound
    out.method = "probe-ascent";
    out.lower_bound_only = true;
    Rat best = pairing_rat(dirs[0], y) - rho_rat(spec, dirs[0]);
    for (const auto& d : dirs) best = std::max(best, Rat(pairing_rat(d, y) - rho_rat(spec, d)));
    out.value = to_double(best);
    return out;
}

namespace {

// both the value E[XY*] and the optimizer for the exact methods
struct ExactDual {
    Rat value;
    StepVariable optimizer;
};

// ES: optimal Q puts density 1/alpha on the lowest-quantile mass alpha,
// anti-comonotone with X (ties by position).
ExactDual es_closed_form(const StepVariable& x, const Rat& alpha) {
    const auto& cells = x.cells();
    std::vector<std::size_t> order(cells.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (cells[a].value != cells[b].value) return cells[a].value < cells[b].value;
        return a < b;
    });
    Rat remaining = alpha;
    std::vector<Rat> density(cells.size(), Rat(0));
    for (std::size_t k : order) {
        if (remaining == 0) break;
        Rat take = std::min(remaining, cells[k].width);
        density[k] = (take / cells[k].width) / alpha;
        remaining -= take;
    }
    std::vector<Cell> opt(cells.size());
    Rat value = 0;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        opt[i] = {cells[i].width, to_double(Rat(-density[i]))};
        value += -density[i] * cells[i].width * rat_from_double(cells[i].value);
    }
    return {value, StepVariable(std::move(opt))};
}

ExactDual es_vertex_enumeration(const StepVariable& x, const Rat& alpha) {
    const std::size_t n = x.size();
    if (n > 12) throw SpecError("es vertex enumeration: more than 12 cells");
    Rat cap = Rat(1) / alpha;
    Rat best = 0;
    bool have = false;
    std::vector<Rat> best_density;
    auto consider = [&](const std::vector<Rat>& density) {
        Rat v = 0;
        for (std::size_t i = 0; i < n; ++i) {
            v += -density[i] * x.cells()[i].width * rat_from_double(x.cells()[i].value);
        }
        if (!have || v > best) {
            best = v;
            best_density = density;
            have = true;
        }
    };
    for (std::uint64_t mask = 0; mask < (1ULL << n); ++mask) {
        Rat mass_at_cap = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if ((mask >> i) & 1) mass_at_cap += x.cells()[i].width;
        }
        Rat used = mass_at_cap * cap;
        if (used > 1) continue;
        if (used == 1) {
            std::vector<Rat> density(n, Rat(0));
            for (std::size_t i = 0; i < n; ++i) {
                if ((mask >> i) & 1) density[i] = cap;
            }
            consider(density);
            continue;
        }
        for (std::size_t j = 0; j < n; ++j) {
            if ((mask >> j) & 1) continue;
            Rat qj = (Rat(1) - used) / x.cells()[j].width;
            if (qj > cap) continue;
            std::vector<Rat> density(n, Rat(0));
            for (std::size_t i = 0; i < n; ++i) {
                if ((mask >> i) & 1) density[i] = cap;
            }
            density[j] = qj;
            consider(density);
        }
    }
    if (!have) throw EvaluationError("es vertex enumeration: no feasible vertex");
    std::vector<Cell> opt(n);
    for (std::size_t i = 0; i < n; ++i) {
        opt[i] = {x.cells()[i].width, to_double(Rat(-best_density[i]))};
    }
    return {best, StepVariable(std::move(opt))};
}

// distortion: vertices of the core are indexed by cell orderings
ExactDual distortion_vertex(const StepVariable& x, const DistortionSpec& g) {
    const std::size_t n = x.size();
    if (n > 8) throw SpecError("distortion vertex enumeration: more than 8 cells");
    if (!g.exact()) throw SpecError("distortion vertex enumeration: non-exact distortion");
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Rat best = 0;
    bool have = false;
    std::vector<Rat> best_density;
    do {
        Rat mass = 0, gprev = 0;
        std::vector<Rat> density(n, Rat(0));
        for (std::size_t k = 0; k < n; ++k) {
            std::size_t i = perm[k];
            mass += x.cells()[i].width;
            Rat gm = g.eval_rat(mass);
            density[i] = (gm - gprev) / x.cells()[i].width;
            gprev = gm;
        }
        Rat v = 0;
        for (std::size_t i = 0; i < n; ++i) {
            v += -density[i] * x.cells()[i].width * rat_from_double(x.cells()[i].value);
        }
        if (!have || v > best) {
            best = v;
            best_density = density;
            have = true;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    std::vector<Cell> opt(n);
    for (std::size_t i = 0; i < n; ++i) {
        opt[i] = {x.cells()[i].width, to_double(Rat(-best_density[i]))};
    }
    return {best, StepVariable(std::move(opt))};
}

// supphi: Y = -(w_pi + 1) over rearrangements of w on the common grid;
// closed form pairs anti-comonotonically with x
ExactDual supphi_closed_form(const StepVariable& w, const StepVariable& x) {
    // rho(X) = sup_{X'~ -X} E[w X'] - E[X] = E[(-w_pi - 1) X] at the
    // pairing that sorts w against -x
    Refinement r = refine(sorted_descending(w), sorted_descending(x.scaled(-1.0)));
    // map the paired w back onto x's own layout: pair the largest w with
    // the smallest x; realize on x's cells by rank
    const auto& cells = x.cells();
    std::vector<std::size_t> order(cells.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (cells[a].value != cells[b].value) return cells[a].value < cells[b].value;
        return a < b;
    });
    // walk w sorted descending, assigning to x's cells in ascending-x order
    StepVariable w_sorted = sorted_descending(w);
    std::vector<Cell> y_cells(cells.size());
    std::size_t wi = 0;
    Rat w_left = w_sorted.cells()[0].width;
    Rat value = 0;
    for (std::size_t k : order) {
        // average w over this cell's rank interval (splitting would be
        // exact too; the average keeps the layout and the same pairing sum)
        Rat need = cells[k].width;
        Rat acc = 0;
        while (need > 0) {
            Rat take = std::min(need, w_left);
            acc += take * rat_from_double(w_sorted.cells()[wi].value);
            need -= take;
            w_left -= take;
            if (w_left == 0 && wi + 1 < w_sorted.size()) w_left = w_sorted.cells()[++wi].width;
        }
        Rat wbar = acc / cells[k].width;
        y_cells[k] = {cells[k].width, to_double(Rat(-(wbar + 1)))};
        value += (-(wbar + 1)) * cells[k].width * rat_from_double(cells[k].value);
    }
    (void)r;
    return {value, StepVariable(std::move(y_cells))};
}

// exact projection of q onto {0 <= Q <= cap, E[Q] = 1}: water level theta
// with sum w_i clip(q_i - theta) = 1, solved on the breakpoint grid
std::vector<Rat> project_density(const std::vector<Rat>& q, const std::vector<Rat>& w,
                                 const Rat& cap) {
    auto mass_at = [&](const Rat& theta) {
        Rat s = 0;
        for (std::size_t i = 0; i < q.size(); ++i) {
            Rat v = q[i] - theta;
            if (v < 0) v = 0;
            if (v > cap) v = cap;
            s += w[i] * v;
        }
        return s;
    };
    std::vector<Rat> breaks;
    for (const auto& qi : q) {
        breaks.push_back(qi);
        breaks.push_back(qi - cap);
    }
    std::sort(breaks.begin(), breaks.end());
    // S(theta) is nonincreasing piecewise linear; find the segment with S = 1
    Rat lo = breaks.front() - 1, hi = breaks.back();
    if (mass_at(lo) < 1) {
        // infeasible to reach mass 1 by shifting down alone: raise uniformly
        // (all clipped at cap won't help if cap * total < 1)
        Rat total_cap = 0;
        for (std::size_t i = 0; i < q.size(); ++i) total_cap += w[i] * cap;
        if (total_cap < 1) throw EvaluationError("project_density: cap too small for mass 1");
    }
    for (std::size_t k = 0; k + 1 <= breaks.size(); ++k) {
        Rat a = (k == 0) ? lo : breaks[k - 1];
        Rat b = (k == breaks.size()) ? hi : breaks[k];
        Rat sa = mass_at(a), sb = mass_at(b);
        if (sa >= 1 && sb <= 1) {
            // affine on [a, b]: interpolate exactly
            Rat theta = (sa == sb) ? a : a + (sa - 1) * (b - a) / (sa - sb);
            std::vector<Rat> out(q.size());
            for (std::size_t i = 0; i < q.size(); ++i) {
                Rat v = q[i] - theta;
                if (v < 0) v = 0;
                if (v > cap) v = cap;
                out[i] = v;
            }
            return out;
        }
    }
    throw EvaluationError("project_density: no water level found");
}

ExactDual es_ascent(const StepVariable& x, const Rat& alpha, std::uint64_t seed) {
    const std::size_t n = x.size();
    const double cap = to_double(Rat(Rat(1) / alpha));
    Rng rng(seed);
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = to_double(x.cells()[i].width);

    // projected supergradient: clip(q - theta) with the water level theta
    // rebalancing the mass constraint after every step
    auto project = [&](std::vector<double>& q) {
        double lo = -cap - 1.0, hi = cap + 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            lo = std::min(lo, q[i] - cap - 1.0);
            hi = std::max(hi, q[i] + 1.0);
        }
        for (int it = 0; it < 100; ++it) {
            double theta = 0.5 * (lo + hi);
            double mass = 0;
            for (std::size_t i = 0; i < n; ++i) {
                mass += w[i] * std::min(std::max(q[i] - theta, 0.0), cap);
            }
            (mass >= 1.0 ? lo : hi) = theta;
        }
        double theta = 0.5 * (lo + hi);
        for (auto& v : q) v = std::min(std::max(v - theta, 0.0), cap);
    };
    std::vector<double> best_q(n, 1.0);
    double best_val = -kInf;
    for (int restart = 0; restart < 8; ++restart) {
        std::vector<double> q(n);
        for (auto& v : q) v = rng.unit() * cap;
        project(q);
        for (int it = 1; it <= 1000; ++it) {
            double step = 1.0 / std::sqrt(static_cast<double>(it));
            for (std::size_t i = 0; i < n; ++i) q[i] += step * (-x.cells()[i].value);
            project(q);
            double val = 0;
            for (std::size_t i = 0; i < n; ++i) val += w[i] * (-q[i]) * x.cells()[i].value;
            if (val > best_val) {
                best_val = val;
                best_q = q;
            }
        }
    }
    // exact projection onto the feasible set before reporting
    std::vector<Rat> qr(n), wr(n);
    for (std::size_t i = 0; i < n; ++i) {
        qr[i] = rat_from_double(best_q[i]);
        wr[i] = x.cells()[i].width;
    }
    std::vector<Rat> qf = project_density(qr, wr, Rat(1) / alpha);
    Rat value = 0;
    std::vector<Cell> opt(n);
    for (std::size_t i = 0; i < n; ++i) {
        value += -qf[i] * wr[i] * rat_from_double(x.cells()[i].value);
        opt[i] = {wr[i], to_double(Rat(-qf[i]))};
    }
    return {value, StepVariable(std::move(opt))};
}

}  // namespace

DualGapReport biconjugate(const MeasureSpec& spec, const StepVariable& x, DualMethod method,
                          std::uint64_t seed) {
    DualGapReport rep;
    rep.measure = spec.name();
    Rat rho_exact = rho_rat(spec, x);
    rep.rho_value = to_double(rho_exact);

    DualMethod chosen = method;
    if (chosen == DualMethod::Auto) {
        switch (spec.kind) {
            case MeasureKind::NegMean:
            case MeasureKind::Example21:
            case MeasureKind::ExpectedShortfall:
            case MeasureKind::SupPhi:
                chosen = DualMethod::ClosedForm;
                break;
            case MeasureKind::Distortion:
                chosen = (spec.g.exact() && x.size() <= 8) ? DualMethod::Vertex
                                                           : DualMethod::ClosedForm;
                break;
            case MeasureKind::BrokenSecondMoment:
                throw SpecError("biconjugate: no dual description for the broken measure");
        }
    }

    ExactDual dual{Rat(0), StepVariable::constant(-1.0)};
    bool exact = true;
    switch (spec.kind) {
        case MeasureKind::NegMean:
        case MeasureKind::Example21:
            rep.method = "closed-form-dual";
            dual = {-x.expectation_rat(), StepVariable::constant(-1.0)};
            break;
        case MeasureKind::ExpectedShortfall:
            if (chosen == DualMethod::Vertex) {
                rep.method = "vertex-enumeration";
                dual = es_vertex_enumeration(x, spec.alpha);
            } else if (chosen == DualMethod::Ascent) {
                rep.method = "ascent";
                dual = es_ascent(x, spec.alpha, seed);
                rep.lower_bound_only = true;
            } else {
                rep.method = "closed-form-dual";
                dual = es_closed_form(x, spec.alpha);
            }
            break;
        case MeasureKind::Distortion:
            if (!spec.g.exact()) throw SpecError("biconjugate: distortion needs exact g");
            rep.method = "vertex-enumeration";
            dual = distortion_vertex(x, spec.g);
            break;
        case MeasureKind::SupPhi:
            rep.method = "closed-form-dual";
            dual = supphi_closed_form(*spec.weights, x);
            break;
        case MeasureKind::BrokenSecondMoment:
            throw SpecError("biconjugate: no dual description for the broken measure");
    }

    // weak duality, exact: every dual feasible value sits below rho
    if (dual.value > rho_exact) {
        throw EvaluationError("biconjugate: weak duality violated (implementation bug)");
    }
    rep.weak_duality_exact = exact;
    rep.biconjugate_value = to_double(dual.value);
    rep.gap = to_double(Rat(rho_exact - dual.value));
    rep.optimizer = dual.optimizer;
    return rep;
}

std::vector<DualGapReport> dual_gap_sweep(const MeasureSpec& spec,
                                          const std::vector<StepVariable>& xs, DualMethod method,
                                          std::uint64_t seed) {
    std::vector<DualGapReport> out;
    out.reserve(xs.size());
    for (const auto& x : xs) out.push_back(biconjugate(spec, x, method, seed));
    return out;
}

}  // namespace rirs
