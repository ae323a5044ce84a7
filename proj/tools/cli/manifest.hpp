#pragma once

#include <json.hpp>

#include <filesystem>
#include <string>

namespace canopyforge::cli {

/// Provenance record written next to every command's outputs.
struct RunManifest {
    std::string command;
    nlohmann::ordered_json parameters = nlohmann::ordered_json::object();
    nlohmann::ordered_json inputs = nlohmann::ordered_json::object();  ///< path -> fnv1a64 hex digest
    nlohmann::ordered_json outputs = nlohmann::ordered_json::object();
    nlohmann::ordered_json summary = nlohmann::ordered_json::object();

    void add_input(const std::filesystem::path& p);
    void add_output(const std::filesystem::path& p);
    nlohmann::ordered_json to_json() const;
    void write(const std::filesystem::path& path) const;
};

std::string tool_version();
/// UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string utc_timestamp();

} // namespace canopyforge::cli
