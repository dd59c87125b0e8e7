#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "rim/config.hpp"

namespace rim {

/// A CSV table with a fixed, documented column order. Cells are
/// preformatted (fmt_g) so output is byte-stable across reruns.
struct CsvTable {
    std::string name;  ///< file stem, e.g. "rows"
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void write(std::ostream& os) const;
};

constexpr int kSchemaVersion = 1;

/// Result of one experiment run: aggregates + row tables + pass flag.
struct ExperimentReport {
    std::string experiment;
    nlohmann::json summary;  ///< deterministic aggregates (sorted keys)
    std::vector<CsvTable> tables;
    bool passed = true;
};

/// Writes a run directory: manifest.json, summary.json, one CSV per table.
/// Returns the directory path. Timing lives only in the manifest; the
/// summary and CSVs are byte-reproducible from the config alone.
std::string write_run_dir(const ExperimentReport& report, const ExperimentConfig& config,
                          const std::string& out_base, unsigned threads,
                          const std::string& started_utc, const std::string& finished_utc);

/// Current UTC time formatted for manifests and directory stamps.
std::string utc_timestamp_compact();
std::string utc_timestamp_iso();

}  // namespace rim
