// Scenario file (JSON, versioned) load/save.
#pragma once

#include "uwbsim/simcore.hpp"

#include <string>

namespace uwbsim::scenario_io {

Scenario from_json_text(const std::string& text);
Scenario load_file(const std::string& path);
std::string to_json_text(const Scenario& scenario);
void save_file(const Scenario& scenario, const std::string& path);

} // namespace uwbsim::scenario_io
