#pragma once

#include "rirs/errors.hpp"
#include "rirs/rational.hpp"
#include "rirs/rng.hpp"

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

namespace rirs {

/// One constant piece of a step function: an interval of exact rational
/// width carrying a real value.
struct Cell {
    Rat width;
    double value = 0.0;

    friend bool operator==(const Cell& a, const Cell& b) {
        return a.width == b.width && a.value == b.value;
    }
};

/// A random variable on ((0,1), Lebesgue) represented as a finite step
/// function. Cells tile (0,1) in order; widths are exact rationals summing
/// to 1, values are doubles. The layout (cell order) matters for pointwise
/// operations; distributional queries aggregate over it.
class StepVariable {
public:
    explicit StepVariable(std::vector<Cell> cells);

    static StepVariable constant(double v);
    /// n equal cells with the given values.
    static StepVariable uniform(const std::vector<double>& values);
    /// value v on (0, w], 0 on (w, 1). w = 1 gives a constant.
    static StepVariable indicator(const Rat& w, double v = 1.0);

    const std::vector<Cell>& cells() const { return cells_; }
    std::size_t size() const { return cells_.size(); }

    /// Cumulative breakpoints 0 = b_0 < b_1 < ... < b_n = 1.
    std::vector<Rat> breakpoints() const;

    Rat expectation_rat() const;
    double expectation() const { return to_double(expectation_rat()); }

    double max_value() const;
    double min_value() const;
    double max_abs() const;

    /// Pointwise value map; layout unchanged.
    StepVariable map(const std::function<double(double)>& f) const;

    StepVariable abs() const;
    StepVariable positive_part() const;
    StepVariable negative_part() const;
    StepVariable scaled(double a) const;
    StepVariable shifted(double m) const;
    /// median(-n, X, n) pointwise.
    StepVariable clamped(double n) const;

    /// Refine so that every breakpoint in `marks` (each in (0,1)) is a cell
    /// boundary. Values unchanged.
    StepVariable split_at(const std::vector<Rat>& marks) const;

    /// Merge neighbouring cells with equal values (canonicalizes layout).
    StepVariable coalesced() const;

private:
    std::vector<Cell> cells_;
};

/// Aligned common refinement of two layouts: widths_ tile (0,1), and
/// a_values/b_values give the two functions on that shared grid.
struct Refinement {
    std::vector<Rat> widths;
    std::vector<double> a_values;
    std::vector<double> b_values;
};

Refinement refine(const StepVariable& a, const StepVariable& b);

StepVariable add(const StepVariable& a, const StepVariable& b);
StepVariable sub(const StepVariable& a, const StepVariable& b);
StepVariable min_of(const StepVariable& a, const StepVariable& b);
StepVariable max_of(const StepVariable& a, const StepVariable& b);

/// Distribution as (value, total width) pairs, values ascending. Exact.
std::vector<std::pair<double, Rat>> distribution(const StepVariable& x);

/// Exact equality in law: sorted (value, total-width) aggregations coincide.
bool equidistributed(const StepVariable& a, const StepVariable& b);

/// Decreasing rearrangement of |X|: same width multiset, |values| sorted
/// descending. Idempotent and law-invariant.
StepVariable decreasing_rearrangement(const StepVariable& x);

/// Signed descending sort (no absolute value); the Hardy-Littlewood pairing
/// order. Internal building block for couplings and phi.
StepVariable sorted_descending(const StepVariable& x);
StepVariable sorted_ascending(const StepVariable& x);

/// Left-continuous quantile: smallest v with P(X <= v) >= t, t in (0,1).
/// With q_-(t) denoting this function and X^* the decreasing rearrangement
/// of the signed variable, q_-(t) = X^*((1-t)^+) at continuity points; we
/// use exact rational cumulative masses, so breakpoints resolve to the
/// left limit.
double quantile(const StepVariable& x, double t);
double quantile(const StepVariable& x, const Rat& t);

/// Exact integral of the left-continuous quantile over (0, t].
Rat lower_quantile_integral_rat(const StepVariable& x, const Rat& t);

/// Lemma A.1 coupling: given X1' and a target law X2 with quantile
/// dominance q_{X1'} >= q_{X2}, build X2' ~ X2 with X2' <= X1' pointwise,
/// by composing X2's quantile with the rank transform of X1'. Ties in X1'
/// are ranked by cell position. Throws PreconditionError (with a witness
/// level) if dominance fails.
StepVariable comonotone_coupling(const StepVariable& x1p, const StepVariable& x2);

/// Finite measurable partition of a StepVariable's cells.
struct Partition {
    std::vector<std::vector<std::size_t>> blocks;

    /// Throws StructuralError unless blocks disjointly cover 0..n-1.
    void validate(const StepVariable& x) const;
    Rat block_mass(const StepVariable& x, std::size_t j) const;

    static Partition trivial(const StepVariable& x);
};

struct ConditionalExpectation {
    StepVariable variable;        // block means in place
    std::vector<Rat> block_means; // exact values per block
};

/// E[X|pi]: constant on each block, value = mass-weighted mean. Means are
/// computed in exact rational arithmetic (doubles convert exactly); the
/// step-variable view rounds each mean once.
ConditionalExpectation conditional_expectation(const StepVariable& x, const Partition& pi);

/// Seeded equidistributed copy: optional cell splits followed by a seeded
/// permutation of cells. Exactly equidistributed with x.
StepVariable random_rearrangement(const StepVariable& x, std::uint64_t seed, unsigned max_splits);

/// Lay an equidistributed copy of x into the region covered by the given
/// cells of x's own grid (cells may be split); zero outside. Throws
/// CapacityError when the support mass is below P(x != 0).
StepVariable place_equidistributed_copy(const StepVariable& x, const std::vector<std::size_t>& support);

/// sum_i lambda_i x_i with exact rational weights on the common grid.
StepVariable convex_combination(const std::vector<StepVariable>& xs, const std::vector<Rat>& lambdas);

/// Exact E[x*y] over the common refinement (values converted exactly).
Rat pointwise_product_expectation_rat(const StepVariable& a, const StepVariable& b);

/// Random step variable generator for property tests and trials.
StepVariable random_step_variable(Rng& rng, std::size_t max_cells, double value_scale,
                                  bool integer_values = false);

}  // namespace rirs
