#include "rirs/step_variable.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

namespace rirs {

StepVariable::StepVariable(std::vector<Cell> cells) : cells_(std::move(cells)) {
    if (cells_.empty()) throw StructuralError("StepVariable: no cells");
    Rat total = 0;
    for (const auto& c : cells_) {
        if (c.width <= 0) throw StructuralError("StepVariable: non-positive cell width");
        if (!std::isfinite(c.value)) throw StructuralError("StepVariable: non-finite value");
        total += c.width;
    }
    if (total != 1) {
        throw StructuralError("StepVariable: widths sum to " + rat_str(total) + ", expected 1");
    }
}

StepVariable StepVariable::constant(double v) {
    return StepVariable({Cell{Rat(1), v}});
}

StepVariable StepVariable::uniform(const std::vector<double>& values) {
    if (values.empty()) throw StructuralError("uniform: empty value list");
    std::vector<Cell> cells;
    cells.reserve(values.size());
    const Rat w(1, static_cast<unsigned>(values.size()));
    for (double v : values) cells.push_back({w, v});
    return StepVariable(std::move(cells));
}

StepVariable StepVariable::indicator(const Rat& w, double v) {
    if (w <= 0 || w > 1) throw DomainError("indicator: width outside (0,1]");
    if (w == 1) return constant(v);
    return StepVariable({Cell{w, v}, Cell{Rat(1) - w, 0.0}});
}

std::vector<Rat> StepVariable::breakpoints() const {
    std::vector<Rat> b;
    b.reserve(cells_.size() + 1);
    b.push_back(Rat(0));
    Rat acc = 0;
    for (const auto& c : cells_) {
        acc += c.width;
        b.push_back(acc);
    }
    return b;
}

Rat StepVariable::expectation_rat() const {
    Rat e = 0;
    for (const auto& c : cells_) e += c.width * rat_from_double(c.value);
    return e;
}

double StepVariable::max_value() const {
    double m = cells_.front().value;
    for (const auto& c : cells_) m = std::max(m, c.value);
    return m;
}

double StepVariable::min_value() const {
    double m = cells_.front().value;
    for (const auto& c : cells_) m = std::min(m, c.value);
    return m;
}

double StepVariable::max_abs() const {
    double m = 0;
    for (const auto& c : cells_) m = std::max(m, std::fabs(c.value));
    return m;
}

StepVariable StepVariable::map(const std::function<double(double)>& f) const {
    std::vector<Cell> out = cells_;
    for (auto& c : out) c.value = f(c.value);
    return StepVariable(std::move(out));
}

StepVariable StepVariable::abs() const {
    return map([](double v) { return std::fabs(v); });
}

StepVariable StepVariable::positive_part() const {
    return map([](double v) { return v > 0 ? v : 0.0; });
}

StepVariable StepVariable::negative_part() const {
    return map([](double v) { return v < 0 ? -v : 0.0; });
}

StepVariable StepVariable::scaled(double a) const {
    return map([a](double v) { return a * v; });
}

StepVariable StepVariable::shifted(double m) const {
    return map([m](double v) { return v + m; });
}

StepVariable StepVariable::clamped(double n) const {
    if (n < 0) throw DomainError("clamped: negative level");
    return map([n](double v) { return std::min(std::max(v, -n), n); });
}

StepVariable StepVariable::split_at(const std::vector<Rat>& marks) const {
    std::vector<Rat> sorted = marks;
    std::sort(sorted.begin(), sorted.end());
    std::vector<Cell> out;
    Rat pos = 0;
    std::size_t mi = 0;
    for (const auto& c : cells_) {
        Rat lo = pos;
        Rat hi = pos + c.width;
        Rat cur = lo;
        while (mi < sorted.size() && sorted[mi] <= lo) ++mi;
        std::size_t k = mi;
        while (k < sorted.size() && sorted[k] < hi) {
            if (sorted[k] > cur) {
                out.push_back({sorted[k] - cur, c.value});
                cur = sorted[k];
            }
            ++k;
        }
        if (hi > cur) out.push_back({hi - cur, c.value});
        pos = hi;
    }
    return StepVariable(std::move(out));
}

StepVariable StepVariable::coalesced() const {
    std::vector<Cell> out;
    for (const auto& c : cells_) {
        if (!out.empty() && out.back().value == c.value) {
            out.back().width += c.width;
        } else {
            out.push_back(c);
        }
    }
    return StepVariable(std::move(out));
}

Refinement refine(const StepVariable& a, const StepVariable& b) {
    // Merge breakpoints; never refine to a common uniform grid.
    Refinement r;
    const auto& ac = a.cells();
    const auto& bc = b.cells();
    std::size_t i = 0, j = 0;
    Rat ai = ac[0].width, bj = bc[0].width;  // remaining widths
    while (true) {
        Rat w = std::min(ai, bj);
        r.widths.push_back(w);
        r.a_values.push_back(ac[i].value);
        r.b_values.push_back(bc[j].value);
        ai -= w;
        bj -= w;
        if (ai == 0) {
            if (++i == ac.size()) break;
            ai = ac[i].width;
        }
        if (bj == 0) {
            if (++j == bc.size()) break;
            bj = bc[j].width;
        }
    }
    return r;
}

namespace {

StepVariable zip(const StepVariable& a, const StepVariable& b,
                 const std::function<double(double, double)>& op) {
    Refinement r = refine(a, b);
    std::vector<Cell> cells(r.widths.size());
    for (std::size_t k = 0; k < r.widths.size(); ++k) {
        cells[k] = {r.widths[k], op(r.a_values[k], r.b_values[k])};
    }
    return StepVariable(std::move(cells));
}

}  // namespace

StepVariable add(const StepVariable& a, const StepVariable& b) {
    return zip(a, b, [](double x, double y) { return x + y; });
}

StepVariable sub(const StepVariable& a, const StepVariable& b) {
    return zip(a, b, [](double x, double y) { return x - y; });
}

StepVariable min_of(const StepVariable& a, const StepVariable& b) {
    return zip(a, b, [](double x, double y) { return std::min(x, y); });
}

StepVariable max_of(const StepVariable& a, const StepVariable& b) {
    return zip(a, b, [](double x, double y) { return std::max(x, y); });
}

std::vector<std::pair<double, Rat>> distribution(const StepVariable& x) {
    std::map<double, Rat> agg;
    for (const auto& c : x.cells()) agg[c.value] += c.width;
    return {agg.begin(), agg.end()};
}

bool equidistributed(const StepVariable& a, const StepVariable& b) {
    return distribution(a) == distribution(b);
}

namespace {

StepVariable sort_by(const StepVariable& x, bool descending, bool absolute) {
    std::vector<Cell> cells = x.cells();
    if (absolute) {
        for (auto& c : cells) c.value = std::fabs(c.value);
    }
    std::stable_sort(cells.begin(), cells.end(), [&](const Cell& l, const Cell& r) {
        return descending ? l.value > r.value : l.value < r.value;
    });
    return StepVariable(std::move(cells));
}

}  // namespace

StepVariable decreasing_rearrangement(const StepVariable& x) {
    return sort_by(x, /*descending=*/true, /*absolute=*/true);
}

StepVariable sorted_descending(const StepVariable& x) {
    return sort_by(x, true, false);
}

StepVariable sorted_ascending(const StepVariable& x) {
    return sort_by(x, false, false);
}

double quantile(const StepVariable& x, const Rat& t) {
    if (t <= 0 || t >= 1) throw DomainError("quantile: level outside (0,1)");
    Rat cum = 0;
    for (const auto& [v, w] : distribution(x)) {
        cum += w;
        if (cum >= t) return v;
    }
    return distribution(x).back().first;  // unreachable: cum ends at 1
}

double quantile(const StepVariable& x, double t) {
    if (!(t > 0.0 && t < 1.0)) throw DomainError("quantile: level outside (0,1)");
    return quantile(x, rat_from_double(t));
}

Rat lower_quantile_integral_rat(const StepVariable& x, const Rat& t) {
    if (t <= 0 || t > 1) throw DomainError("lower_quantile_integral: level outside (0,1]");
    Rat remaining = t;
    Rat acc = 0;
    for (const auto& [v, w] : distribution(x)) {
        Rat take = std::min(w, remaining);
        acc += take * rat_from_double(v);
        remaining -= take;
        if (remaining == 0) break;
    }
    return acc;
}

StepVariable comonotone_coupling(const StepVariable& x1p, const StepVariable& x2) {
    // Rank transform of x1p: each cell owns a mass interval in the
    // value-sorted order (ties by position). The coupled variable reads
    // x2's quantile function on that interval, splitting cells where the
    // quantile steps.
    const auto& cells = x1p.cells();
    std::vector<std::size_t> order(cells.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
        if (cells[l].value != cells[r].value) return cells[l].value < cells[r].value;
        return l < r;
    });
    std::vector<Rat> rank_lo(cells.size());
    Rat acc = 0;
    for (std::size_t k : order) {
        rank_lo[k] = acc;
        acc += cells[k].width;
    }

    // x2's quantile as (value ascending, cumulative mass) steps.
    auto dist2 = distribution(x2);
    std::vector<Rat> cum2(dist2.size());
    acc = 0;
    for (std::size_t i = 0; i < dist2.size(); ++i) {
        acc += dist2[i].second;
        cum2[i] = acc;
    }

    // Quantile dominance check q1 >= q2 at every step level of either side.
    auto dist1 = distribution(x1p);
    std::vector<Rat> cum1(dist1.size());
    acc = 0;
    for (std::size_t i = 0; i < dist1.size(); ++i) {
        acc += dist1[i].second;
        cum1[i] = acc;
    }
    auto q_at = [](const std::vector<std::pair<double, Rat>>& d, const std::vector<Rat>& cum,
                   const Rat& t) {
        for (std::size_t i = 0; i < cum.size(); ++i) {
            if (cum[i] >= t) return d[i].first;
        }
        return d.back().first;
    };
    {
        std::vector<Rat> levels;
        Rat c = 0;
        for (const auto& [v, w] : dist1) { c += w; if (c < 1) levels.push_back(c); }
        c = 0;
        for (const auto& [v, w] : dist2) { c += w; if (c < 1) levels.push_back(c); }
        levels.push_back(Rat(1));
        for (const auto& t : levels) {
            double q1 = q_at(dist1, cum1, t);
            double q2 = q_at(dist2, cum2, t);
            if (q1 < q2) {
                std::ostringstream os;
                os << "comonotone_coupling: quantile dominance fails at t = " << rat_str(t)
                   << " (q1 = " << q1 << " < q2 = " << q2 << ")";
                throw PreconditionError(os.str());
            }
        }
    }

    // Build the coupled cells in x1p's layout order.
    std::vector<Cell> out;
    for (std::size_t k = 0; k < cells.size(); ++k) {
        Rat lo = rank_lo[k];
        Rat hi = lo + cells[k].width;
        // walk x2's quantile steps across (lo, hi]
        std::size_t i = 0;
        while (i < cum2.size() && cum2[i] <= lo) ++i;
        Rat cur = lo;
        while (cur < hi) {
            Rat upto = (i < cum2.size()) ? std::min(cum2[i], hi) : hi;
            out.push_back({upto - cur, dist2[std::min(i, dist2.size() - 1)].first});
            cur = upto;
            ++i;
        }
    }
    return StepVariable(std::move(out));
}

void Partition::validate(const StepVariable& x) const {
    std::vector<bool> seen(x.size(), false);
    if (blocks.empty()) throw StructuralError("Partition: no blocks");
    for (const auto& blk : blocks) {
        if (blk.empty()) throw StructuralError("Partition: empty block");
        for (std::size_t idx : blk) {
            if (idx >= x.size()) throw StructuralError("Partition: cell index out of range");
            if (seen[idx]) throw StructuralError("Partition: overlapping blocks");
            seen[idx] = true;
        }
    }
    for (bool s : seen) {
        if (!s) throw StructuralError("Partition: blocks do not cover all cells");
    }
}

Rat Partition::block_mass(const StepVariable& x, std::size_t j) const {
    Rat m = 0;
    for (std::size_t idx : blocks.at(j)) m += x.cells()[idx].width;
    return m;
}

Partition Partition::trivial(const StepVariable& x) {
    Partition p;
    p.blocks.emplace_back(x.size());
    std::iota(p.blocks[0].begin(), p.blocks[0].end(), 0);
    return p;
}

ConditionalExpectation conditional_expectation(const StepVariable& x, const Partition& pi) {
    pi.validate(x);
    std::vector<Rat> means(pi.blocks.size());
    std::vector<double> cell_value(x.size());
    for (std::size_t j = 0; j < pi.blocks.size(); ++j) {
        Rat mass = 0, sum = 0;
        for (std::size_t idx : pi.blocks[j]) {
            const Cell& c = x.cells()[idx];
            mass += c.width;
            sum += c.width * rat_from_double(c.value);
        }
        means[j] = sum / mass;
        double mv = to_double(means[j]);
        for (std::size_t idx : pi.blocks[j]) cell_value[idx] = mv;
    }
    std::vector<Cell> cells = x.cells();
    for (std::size_t i = 0; i < cells.size(); ++i) cells[i].value = cell_value[i];
    return {StepVariable(std::move(cells)), std::move(means)};
}

StepVariable random_rearrangement(const StepVariable& x, std::uint64_t seed, unsigned max_splits) {
    Rng rng(seed);
    std::vector<Cell> cells = x.cells();
    unsigned splits = max_splits == 0 ? 0 : static_cast<unsigned>(rng.below(max_splits + 1));
    for (unsigned s = 0; s < splits; ++s) {
        std::size_t k = static_cast<std::size_t>(rng.below(cells.size()));
        Rat frac = rng.unit_rational(8);
        Rat left = cells[k].width * frac;
        Cell right{cells[k].width - left, cells[k].value};
        cells[k].width = left;
        cells.insert(cells.begin() + static_cast<std::ptrdiff_t>(k) + 1, right);
    }
    for (std::size_t i = cells.size(); i > 1; --i) {  // Fisher-Yates
        std::size_t j = static_cast<std::size_t>(rng.below(i));
        std::swap(cells[i - 1], cells[j]);
    }
    return StepVariable(std::move(cells));
}

StepVariable place_equidistributed_copy(const StepVariable& x,
                                        const std::vector<std::size_t>& support) {
    std::vector<bool> in_support(x.size(), false);
    Rat support_mass = 0;
    for (std::size_t idx : support) {
        if (idx >= x.size()) throw StructuralError("place_equidistributed_copy: bad cell index");
        if (in_support[idx]) throw StructuralError("place_equidistributed_copy: duplicate index");
        in_support[idx] = true;
        support_mass += x.cells()[idx].width;
    }
    // nonzero content of x
    std::vector<Cell> content;
    Rat nonzero_mass = 0;
    for (const auto& c : x.cells()) {
        if (c.value != 0.0) {
            content.push_back(c);
            nonzero_mass += c.width;
        }
    }
    if (support_mass < nonzero_mass) {
        throw CapacityError("place_equidistributed_copy: support mass " + rat_str(support_mass) +
                            " < nonzero mass " + rat_str(nonzero_mass));
    }
    std::vector<Cell> out;
    std::size_t ci = 0;
    Rat pending = content.empty() ? Rat(0) : content[0].width;
    for (std::size_t i = 0; i < x.size(); ++i) {
        Rat w = x.cells()[i].width;
        if (!in_support[i]) {
            out.push_back({w, 0.0});
            continue;
        }
        while (w > 0 && ci < content.size()) {
            Rat take = std::min(w, pending);
            out.push_back({take, content[ci].value});
            w -= take;
            pending -= take;
            if (pending == 0) {
                ++ci;
                if (ci < content.size()) pending = content[ci].width;
            }
        }
        if (w > 0) out.push_back({w, 0.0});
    }
    return StepVariable(std::move(out));
}

StepVariable convex_combination(const std::vector<StepVariable>& xs,
                                const std::vector<Rat>& lambdas) {
    if (xs.empty() || xs.size() != lambdas.size()) {
        throw StructuralError("convex_combination: size mismatch");
    }
    Rat total = 0;
    for (const auto& l : lambdas) {
        if (l < 0) throw PreconditionError("convex_combination: negative weight");
        total += l;
    }
    if (total != 1) throw PreconditionError("convex_combination: weights sum to " + rat_str(total));
    StepVariable acc = xs[0].scaled(to_double(lambdas[0]));
    for (std::size_t i = 1; i < xs.size(); ++i) {
        acc = add(acc, xs[i].scaled(to_double(lambdas[i])));
    }
    return acc;
}

Rat pointwise_product_expectation_rat(const StepVariable& a, const StepVariable& b) {
    Refinement r = refine(a, b);
    Rat e = 0;
    for (std::size_t k = 0; k < r.widths.size(); ++k) {
        e += r.widths[k] * rat_from_double(r.a_values[k]) * rat_from_double(r.b_values[k]);
    }
    return e;
}

StepVariable random_step_variable(Rng& rng, std::size_t max_cells, double value_scale,
                                  bool integer_values) {
    std::size_t n = 1 + rng.below(max_cells);
    std::vector<Cell> cells;
    cells.reserve(n);
    // random rational widths: n draws from a small-denominator grid, normalized
    std::vector<Rat> raw(n);
    Rat total = 0;
    for (auto& w : raw) {
        w = Rat(1 + rng.below(16), 16);
        total += w;
    }
    for (std::size_t i = 0; i < n; ++i) {
        double v;
        if (integer_values) {
            v = static_cast<double>(rng.range(-8, 8));
        } else {
            v = (2.0 * rng.unit() - 1.0) * value_scale;
        }
        cells.push_back({raw[i] / total, v});
    }
    return StepVariable(std::move(cells));
}

}  // namespace rirs
