#pragma once

#include "rirs/norms.hpp"
#include "rirs/risk.hpp"
#include "rirs/signed_variable.hpp"

#include <string>
#include <vector>

namespace rirs {

/// Named entries reachable from configs and the CLI. Unknown names throw
/// SpecError carrying the nearest catalog match.
namespace catalog {

std::vector<std::string> variable_names();
std::vector<std::string> norm_names();
std::vector<std::string> measure_names();

SignedVariable variable(const std::string& name);

/// "lp:<p>" | "lp:inf" | "orlicz:exp" | "orlicz:power:<p>" | "appendix_b"
NormSpec parse_norm(const std::string& s);

/// "neg-mean" | "es:<alpha>" | "distortion:es-cap:<alpha>" |
/// "distortion:power:<theta>" | "distortion:identity" |
/// "supphi:<weights catalog name>" | "example21:<norm>" |
/// "broken:second-moment". Alphas and thetas accept "1/2" or "0.5".
MeasureSpec parse_measure(const std::string& s);

/// "catalog:<name>" | "@<file.json>" | inline JSON.
SignedVariable parse_variable(const std::string& s);

}  // namespace catalog

}  // namespace rirs
