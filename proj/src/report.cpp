#include "rim/report.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <stdexcept>

namespace rim {

void CsvTable::write(std::ostream& os) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) os << ',';
        os << header[i];
    }
    os << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) os << ',';
            os << row[i];
        }
        os << '\n';
    }
}

namespace {
std::string format_utc(const char* fmt) {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[64];
    std::strftime(buf, sizeof(buf), fmt, &tm);
    return buf;
}
}  // namespace

std::string utc_timestamp_compact() { return format_utc("%Y%m%d_%H%M%S"); }
std::string utc_timestamp_iso() { return format_utc("%Y-%m-%dT%H:%M:%SZ"); }

std::string write_run_dir(const ExperimentReport& report, const ExperimentConfig& config,
                          const std::string& out_base, unsigned threads,
                          const std::string& started_utc, const std::string& finished_utc) {
    namespace fs = std::filesystem;
    fs::create_directories(out_base);
    std::string dir = out_base + "/" + report.experiment + "_" + utc_timestamp_compact();
    // avoid collisions from rapid reruns
    for (int k = 1; fs::exists(dir); ++k)
        dir = out_base + "/" + report.experiment + "_" + utc_timestamp_compact() + "_" +
              std::to_string(k);
    fs::create_directories(dir);

    std::vector<std::string> artifacts;
    for (const auto& table : report.tables) {
        const std::string file = dir + "/" + table.name + ".csv";
        std::ofstream os(file, std::ios::binary);
        if (!os) throw std::runtime_error("write_run_dir: cannot write " + file);
        table.write(os);
        artifacts.push_back(table.name + ".csv");
    }
    {
        nlohmann::json summary = report.summary;
        summary["schema_version"] = kSchemaVersion;
        summary["experiment"] = report.experiment;
        summary["passed"] = report.passed;
        std::ofstream os(dir + "/summary.json", std::ios::binary);
        os << summary.dump(2) << '\n';
        artifacts.push_back("summary.json");
    }
    {
        nlohmann::json manifest;
        manifest["schema_version"] = kSchemaVersion;
        manifest["experiment"] = report.experiment;
        manifest["config_ini"] = config.to_ini();
        manifest["config_hash"] = config.content_hash();
        manifest["master_seed"] = config.monte_carlo.master_seed;
        manifest["threads"] = threads;
        manifest["started_utc"] = started_utc;
        manifest["finished_utc"] = finished_utc;
        manifest["artifacts"] = artifacts;
        manifest["passed"] = report.passed;
        manifest["rimsim_version"] = "0.1.0";
        std::ofstream os(dir + "/manifest.json", std::ios::binary);
        os << manifest.dump(2) << '\n';
    }
    return dir;
}

}  // namespace rim
