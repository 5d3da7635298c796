#pragma once

#include <optional>
#include <string>

#include "dyn/interp.hpp"
#include "json.hpp"

namespace dyn {

int cli_main(int argc, char** argv);

// Numbers, booleans and lists decoded; other objects as "Class#id".
std::string render_value(Value v);

// FNV-1a 64 of the text, as 16 hex digits.
std::string digest(const std::string& text);

// Digest, obligations, per-location types, refinement log and proof verdict for one program.
nlohmann::ordered_json program_report(const std::string& name, const std::string& source,
                                      const std::optional<std::string>& annotations, int path_cap = 16);

std::string render_report(const nlohmann::ordered_json& report);

}  // namespace dyn
