#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace renewal {

// One row of tail.csv as written by the simulate command.
struct TailRow {
    double x = 0.0;
    double t = 0.0;
    double survival = 0.0;
    double stderr_ = 0.0;
    double bound = 0.0;
    std::uint64_t n = 0;
};

void write_tail_csv(const std::string& path, const std::vector<TailRow>& rows);
std::vector<TailRow> read_tail_csv(const std::string& path);

// Reads certificate.json and, when present, tail.csv from dir; fits the empirical
// decay rate per delay and writes report.json and report_curves.csv.
// Throws ConfigError when the certificate is missing or unreadable.
nlohmann::json emit_report(const std::string& dir);

// Canonical JSON text used for every output file.
std::string dump_json(const nlohmann::json& j);
void write_text(const std::string& path, const std::string& text);

}  // namespace renewal
