#pragma once

#include "rirs/risk.hpp"
#include "rirs/step_variable.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rirs {

/// rho*(Y) = sup_X (E[XY] - rho(X)). For the positively homogeneous
/// catalog this is {0, +infinity}; infeasibility comes with a witness
/// direction. Values from probe grids or ascent are flagged as lower
/// bounds when the method is not exhaustive.
struct ConjugateResult {
    double value = 0.0;
    bool infinite = false;
    bool lower_bound_only = false;
    std::string method;
    std::string witness;  // description of a violating direction, when infinite
};

ConjugateResult conjugate(const MeasureSpec& spec, const StepVariable& y,
                          unsigned probe_count = 64, std::uint64_t seed = 1);

enum class DualMethod { Auto, ClosedForm, Vertex, Ascent };

struct DualGapReport {
    std::string measure;
    double rho_value = 0.0;
    double biconjugate_value = 0.0;
    double gap = 0.0;  // rho - rho** >= 0
    StepVariable optimizer;
    std::string method;
    bool weak_duality_exact = false;  // rho** <= rho verified in exact arithmetic
    bool lower_bound_only = false;    // ascent without a closed-form match

    DualGapReport() : optimizer(StepVariable::constant(0.0)) {}
};

/// rho**(X) = sup over the dual feasible set of E[XY] - rho*(Y). Closed
/// forms and vertex enumeration are exact (rational); ascent projects onto
/// the exact feasible set before reporting, so weak duality holds exactly
/// on every path.
DualGapReport biconjugate(const MeasureSpec& spec, const StepVariable& x,
                          DualMethod method = DualMethod::Auto, std::uint64_t seed = 1);

std::vector<DualGapReport> dual_gap_sweep(const MeasureSpec& spec,
                                          const std::vector<StepVariable>& xs,
                                          DualMethod method = DualMethod::Auto,
                                          std::uint64_t seed = 1);

}  // namespace rirs
