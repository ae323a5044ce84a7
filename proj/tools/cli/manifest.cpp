#include "cli/manifest.hpp"

#include <canopyforge/error.hpp>
#include <canopyforge/hash.hpp>

#include <chrono>
#include <ctime>
#include <fstream>

namespace canopyforge::cli {

void RunManifest::add_input(const std::filesystem::path& p) { inputs[p.generic_string()] = to_hex(hash_file(p)); }

void RunManifest::add_output(const std::filesystem::path& p) {
    outputs[p.filename().generic_string()] = to_hex(hash_file(p));
}

nlohmann::ordered_json RunManifest::to_json() const {
    nlohmann::ordered_json j;
    j["command"] = command;
    j["version"] = tool_version();
    j["timestamp"] = utc_timestamp();
    j["parameters"] = parameters;
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    if (!summary.empty()) j["summary"] = summary;
    return j;
}

void RunManifest::write(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write manifest '" + path.string() + "'");
    out << to_json().dump(2) << '\n';
}

std::string tool_version() { return CANOPYFORGE_VERSION; }

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace canopyforge::cli
