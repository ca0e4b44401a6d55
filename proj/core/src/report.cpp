#include "maskfdia/report.hpp"

#include "maskfdia/error.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

namespace maskfdia {

std::string format_number(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return {buf.data(), res.ptr};
}

void CsvTable::add_row(std::span<const double> values) {
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values) cells.push_back(format_number(v));
    add_row(std::move(cells));
}

void CsvTable::add_row(std::vector<std::string> cells) {
    if (cells.size() != header.size()) throw DimensionError("csv row has " + std::to_string(cells.size()) +
                                                            " cells, header has " + std::to_string(header.size()));
    rows.push_back(std::move(cells));
}

std::string CsvTable::to_string() const {
    std::string out;
    auto line = [&out](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += cells[i];
        }
        out += '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out;
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed: " + path.string());
}

CsvTable curve_table(const std::vector<CurvePoint>& points, const char* x, const char* y) {
    CsvTable table{{"threshold", x, y}, {}};
    for (const auto& p : points) {
        const double row[] = {p.threshold, p.x, p.y};
        table.add_row(row);
    }
    return table;
}

}  // namespace

void write_report(const Report& report, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec || !std::filesystem::is_directory(out_dir)) {
        throw IoError("cannot create report directory " + out_dir.string());
    }
    write_text(out_dir / "summary.json", report.summary.dump(2) + "\n");
    for (const auto& [name, table] : report.tables) write_text(out_dir / name, table.to_string());
}

std::string git_blob_sha1(std::string_view bytes) {
    const std::string header = "blob " + std::to_string(bytes.size()) + '\0';
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int length = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    const bool ok = ctx != nullptr && EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                    EVP_DigestUpdate(ctx, header.data(), header.size()) == 1 &&
                    EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) == 1 &&
                    EVP_DigestFinal_ex(ctx, digest.data(), &length) == 1;
    EVP_MD_CTX_free(ctx);
    if (!ok) throw IoError("sha1 digest failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < length; ++i) {
        const unsigned char b = digest[i];
        out += hex[b >> 4];
        out += hex[b & 0xF];
    }
    return out;
}

std::string git_blob_sha1_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return git_blob_sha1(bytes);
}

CsvTable roc_table(std::span<const ScoredSample> samples) { return curve_table(roc_curve(samples), "fpr", "tpr"); }

CsvTable pr_table(std::span<const ScoredSample> samples) {
    return curve_table(pr_curve(samples), "recall", "precision");
}

CsvTable residual_table(const StreamVerdict& verdict, std::span<const std::string> channel_names) {
    CsvTable table{{"time", "channel", "residual", "flag", "accommodated"}, {}};
    const std::size_t m = verdict.channels.size();
    for (std::size_t s = 0; s < verdict.steps(); ++s) {
        const std::size_t t = verdict.times[s];
        for (std::size_t p = 0; p < m; ++p) {
            const std::size_t c = verdict.channels[p];
            const std::string name = c < channel_names.size() ? channel_names[c] : std::to_string(c);
            table.add_row({std::to_string(t), name, format_number(verdict.residuals(s, p)),
                           verdict.flagged(s, p) ? "1" : "0", format_number(verdict.accommodated(t, c))});
        }
    }
    return table;
}

double percent_change(double value, double reference) {
    if (reference == 0.0) return value == 0.0 ? 0.0 : std::copysign(INFINITY, value);
    return 100.0 * (value - reference) / reference;
}

nlohmann::json to_json(const DetectionResult& result) {
    return {{"method", result.method},
            {"channel", result.channel},
            {"roc_auc", result.roc_auc},
            {"auprc", result.auprc},
            {"windows", result.samples.size()}};
}

nlohmann::json to_json(const AccommodationResult& result) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : result.rows) {
        rows.push_back({{"output", r.output},
                        {"mse_no_fault", r.mse_no_fault},
                        {"mse_fault_no_fdia", r.mse_fault_no_fdia},
                        {"mse_fault_with_fdia", r.mse_fault_with_fdia},
                        {"delta_fault_no_fdia_pct", percent_change(r.mse_fault_no_fdia, r.mse_no_fault)},
                        {"delta_fault_with_fdia_pct", percent_change(r.mse_fault_with_fdia, r.mse_no_fault)}});
    }
    return {{"outputs", rows}, {"flagged_steps", result.flagged_steps}, {"alarm_steps", result.alarm_steps}};
}

nlohmann::json to_json(const LatencyResult& result) {
    return {{"mean_ms", result.mean_ms},          {"p95_ms", result.p95_ms},
            {"max_ms", result.max_ms},            {"repetitions", result.repetitions},
            {"passes_count", result.passes_count}, {"budget_ms", result.budget_ms},
            {"within_budget", result.within_budget}};
}

}  // namespace maskfdia
