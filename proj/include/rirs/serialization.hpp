#pragma once

#include "rirs/analytic.hpp"
#include "rirs/duality.hpp"
#include "rirs/fatou.hpp"
#include "rirs/norms.hpp"
#include "rirs/order_structure.hpp"
#include "rirs/risk.hpp"
#include "rirs/signed_variable.hpp"
#include "rirs/step_variable.hpp"

#include <json.hpp>

#include <string>

namespace rirs {

using Json = nlohmann::ordered_json;

/// Exact rationals serialize as [num, den] (JSON integers while they fit
/// in 64 bits, decimal strings beyond).
Json rat_to_json(const Rat& r);
Rat rat_from_json(const Json& j);

Json to_json(const StepVariable& x);
Json to_json(const AnalyticRearrangement& q);
Json to_json(const SignedVariable& x);

StepVariable step_from_json(const Json& j);
AnalyticRearrangement analytic_from_json(const Json& j);
SignedVariable signed_from_json(const Json& j);

/// Any variable: {"kind":"step"|"analytic"|"signed", ...}.
SignedVariable variable_from_json(const Json& j);
Json variable_to_json(const SignedVariable& x);

Json to_json(const NormAudit& a);
Json to_json(const HeartReport& r);
Json to_json(const TailProfile& p);
Json to_json(const DistanceReport& r);
Json to_json(const CoherenceReport& r);
Json to_json(const FatouProbeReport& r);
Json to_json(const AoceaCertificate& c);
Json to_json(const AppendixBChainRow& row);
Json to_json(const AoceaSearchReport& r);
Json to_json(const DualGapReport& r);
Json to_json(const PairedSwapReport& r);

}  // namespace rirs
