#pragma once

#include <string>

#include "gridse/network.hpp"

namespace gridse {

/// Load a network from the native JSON case schema.
///
/// Top level: `base_mva` (number), `buses` (array of {id, slack, gs, bs, vm,
/// va_deg}), `branches` (array of {from, to, r, x, b, tap}). Angles are degrees
/// in files and radians internally; bus references in `branches` use external
/// ids. Throws ParseError on malformed files, ValidationError on bad models.
NetworkModel load_case(const std::string& path);

/// Import the fixed-width bus/branch sections of an IEEE Common Data Format
/// file. Solved voltages populate v_true/theta_true; phase-shifting branch
/// records are rejected. All other sections are ignored.
NetworkModel import_cdf(const std::string& path);

/// Write a network back out in the native JSON schema (used by `convert`).
void save_case(const NetworkModel& net, const std::string& path);

}  // namespace gridse
