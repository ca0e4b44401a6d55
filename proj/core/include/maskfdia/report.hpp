#pragma once

#include "maskfdia/checkpoint.hpp"
#include "maskfdia/eval.hpp"
#include "maskfdia/fdia.hpp"
#include "maskfdia/metrics.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace maskfdia {

/// A CSV file: one header row plus pre-formatted cells.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add_row(std::span<const double> values);
    void add_row(std::vector<std::string> cells);
    std::string to_string() const;
};

/// Shortest decimal text that parses back to the same double.
std::string format_number(double value);

struct Report {
    nlohmann::json summary = nlohmann::json::object();
    /// File name (e.g. "roc_masked_ch3.csv") -> table.
    std::vector<std::pair<std::string, CsvTable>> tables;
};

/// Writes summary.json and every table into `out_dir` (created if missing).
void write_report(const Report& report, const std::filesystem::path& out_dir);

/// SHA-1 of "blob <size>\0<bytes>", hex encoded (the id git gives the content).
std::string git_blob_sha1(std::string_view bytes);
std::string git_blob_sha1_file(const std::filesystem::path& path);

/// threshold,fpr,tpr
CsvTable roc_table(std::span<const ScoredSample> samples);
/// threshold,recall,precision
CsvTable pr_table(std::span<const ScoredSample> samples);
/// time,channel,residual,flag,accommodated
CsvTable residual_table(const StreamVerdict& verdict, std::span<const std::string> channel_names);

nlohmann::json to_json(const DetectionResult& result);
nlohmann::json to_json(const AccommodationResult& result);
nlohmann::json to_json(const LatencyResult& result);

/// 100 * (value - reference) / reference; 0 when both are 0.
double percent_change(double value, double reference);

inline constexpr int kReportSchemaVersion = 1;

}  // namespace maskfdia
