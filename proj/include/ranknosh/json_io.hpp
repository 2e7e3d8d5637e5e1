#pragma once

#include <json.hpp>
#include <string>

#include "ranknosh/arch_space.hpp"

namespace ranknosh {

// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

nlohmann::json space_to_json(const SearchSpaceSpec& space);
SearchSpaceSpec space_from_json(const nlohmann::json& j);

// {"ops": [...], "edges": [[s, d], ...]}
nlohmann::json arch_to_json(const Architecture& arch);
Architecture arch_from_json(const nlohmann::json& j, int num_ops);

}  // namespace ranknosh
