#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cpsrl/experiment.hpp"

namespace cpsrl {

/// Parses a YAML experiment definition. Unknown keys are rejected; missing
/// keys keep the RunConfig defaults. Throws ConfigError.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// "1,2,7" or "1-20" or any comma-separated mix of both.
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

/// Comma-separated agent names.
std::vector<AgentKind> parse_agent_list(const std::string& text);

}  // namespace cpsrl
