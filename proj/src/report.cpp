#include "ratelab/report.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "ratelab/errors.hpp"

namespace ratelab {

using nlohmann::json;

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string RunManifest::to_json() const {
    json j;
    j["tool_version"] = tool_version;
    j["subcommand"] = subcommand;
    j["config_checksum"] = config_checksum;
    j["master_seed"] = master_seed;
    j["timestamp"] = timestamp;
    j["options"] = json::parse(options_json.empty() ? "{}" : options_json);
    j["outputs"] = outputs;
    j["config"] = json::parse(config_json.empty() ? "null" : config_json);
    return j.dump();
}

std::string RunManifest::header_comment() const { return "# manifest " + to_json() + "\n"; }

void write_file_atomic(const std::string& dir, const std::string& name,
                       const std::string& content) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) raise(errc::io, "cannot create output directory '" + dir + "': " + ec.message());
    const fs::path final_path = fs::path(dir) / name;
    const fs::path temp_path = fs::path(dir) / (name + ".tmp");
    {
        std::ofstream out(temp_path, std::ios::binary | std::ios::trunc);
        if (!out) raise(errc::io, "cannot open '" + temp_path.string() + "' for writing");
        out << content;
        if (!out) raise(errc::io, "write failed for '" + temp_path.string() + "'");
    }
    fs::rename(temp_path, final_path, ec);
    if (ec) raise(errc::io, "rename failed for '" + final_path.string() + "': " + ec.message());
}

} // namespace ratelab
