#pragma once

#include <filesystem>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

namespace psl::cli {

using json = nlohmann::json;

struct Command {
    std::string name;
    std::string description;
    json defaults;
    /// Runs with the merged config, writing outputs under `out`; logs to `log`.
    std::function<void(const json& config, const std::filesystem::path& out, std::ostream& log)> run;
};

const std::vector<Command>& commands();

/// Defaults overlaid with `overrides`; unknown keys raise Error(usage).
json merge_config(const json& defaults, const json& overrides, const std::string& where = "");

/// Applies "a.b.c=value" (value parsed as JSON, else taken as a string).
void apply_assignment(json& config, const std::string& assignment);

} // namespace psl::cli
