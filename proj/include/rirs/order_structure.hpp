#pragma once

#include "rirs/norms.hpp"
#include "rirs/signed_variable.hpp"

#include <string>
#include <vector>

namespace rirs {

/// Norms of X 1_{|X| >= r} along increasing thresholds, with the
/// extrapolated limit. The limit is 0 exactly when X sits in the
/// order-continuous part.
struct TailProfile {
    std::vector<double> thresholds;
    std::vector<double> norms;
    double limit = 0.0;
    double error_band = 0.0;   // 0 when converged or closed form
    bool converged = false;
    bool closed_form = false;
    bool not_in_space = false;
    std::string note;
};

TailProfile tail_norm_profile(const SignedVariable& x, const NormSpec& norm,
                              const std::vector<double>& thresholds);

/// inf_{r >= 0} ||(Xminus - r)^+|| on a geometric r-ladder, with the
/// stopping certificate. Input is the non-negative part to be measured
/// (callers pass X^-).
struct DistanceReport {
    double value = 0.0;
    bool converged = false;
    double error_band = 0.0;
    std::vector<std::pair<double, double>> ladder;  // (r, norm)
    std::string note;
};

DistanceReport distance_to_oc_part(const Profile& xminus, const NormSpec& norm);

/// Example 2.1: rho(X) = d(X^-, X_a) - E[X].
double example21_rho(const SignedVariable& x, const NormSpec& norm);

}  // namespace rirs
