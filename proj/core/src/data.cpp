#include "maskfdia/data.hpp"

#include "maskfdia/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <sstream>

namespace maskfdia {
namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '"')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r' || s[e - 1] == '"')) --e;
    return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_line(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(trim(std::string_view(line).substr(start)));
            break;
        }
        out.push_back(trim(std::string_view(line).substr(start, pos - start)));
        start = pos + 1;
    }
    return out;
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

bool parse_real(const std::string& cell, double& out) {
    if (cell.empty()) return false;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    if (*first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last && std::isfinite(out);
}

// Seconds since the civil epoch for "YYYY-MM-DD HH:MM:SS[.fff]"; falls back to a plain number.
bool parse_timestamp(const std::string& cell, double& seconds) {
    if (parse_real(cell, seconds)) return true;
    int y = 0, mo = 0, d = 0, h = 0, mi = 0;
    double s = 0.0;
    if (std::sscanf(cell.c_str(), "%d-%d-%d %d:%d:%lf", &y, &mo, &d, &h, &mi, &s) != 6 &&
        std::sscanf(cell.c_str(), "%d-%d-%dT%d:%d:%lf", &y, &mo, &d, &h, &mi, &s) != 6) {
        return false;
    }
    // days_from_civil (proleptic Gregorian)
    y -= mo <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const int yoe = y - era * 400;
    const int doy = (153 * (mo + (mo > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const int doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    const double days = static_cast<double>(era) * 146097.0 + doe - 719468.0;
    seconds = days * 86400.0 + h * 3600.0 + mi * 60.0 + s;
    return true;
}

double infer_sample_rate(const std::vector<double>& stamps) {
    std::vector<double> diffs;
    for (std::size_t i = 1; i < stamps.size() && diffs.size() < 1000; ++i) diffs.push_back(stamps[i] - stamps[i - 1]);
    if (diffs.empty()) return 1.0;
    std::nth_element(diffs.begin(), diffs.begin() + diffs.size() / 2, diffs.end());
    const double median = diffs[diffs.size() / 2];
    return median > 0.0 ? 1.0 / median : 1.0;
}

}  // namespace

std::size_t TimeSeriesDataset::channel_index(const std::string& name) const {
    auto it = std::find(channel_names.begin(), channel_names.end(), name);
    if (it == channel_names.end()) throw UsageError("unknown channel '" + name + "'");
    return static_cast<std::size_t>(it - channel_names.begin());
}

TimeSeriesDataset TimeSeriesDataset::slice(IndexRange range) const {
    if (range.end > length() || range.begin > range.end) {
        throw UsageError("slice [" + std::to_string(range.begin) + ", " + std::to_string(range.end) +
                         ") outside dataset of length " + std::to_string(length()));
    }
    TimeSeriesDataset out;
    out.channel_names = channel_names;
    out.sample_rate_hz = sample_rate_hz;
    out.channel_stats = channel_stats;
    const std::size_t n = n_channels();
    std::vector<double> values(samples.data() + range.begin * n, samples.data() + range.end * n);
    out.samples = Tensor({range.size(), n}, std::move(values));
    return out;
}

std::vector<ChannelStats> compute_channel_stats(const TimeSeriesDataset& dataset, IndexRange range) {
    if (range.empty() || range.end > dataset.length()) throw UsageError("channel stats: empty or out-of-bounds range");
    const std::size_t n = dataset.n_channels();
    std::vector<ChannelStats> stats(n);
    const double count = static_cast<double>(range.size());
    for (std::size_t c = 0; c < n; ++c) {
        ChannelStats s;
        s.min = s.max = dataset.at(range.begin, c);
        double sum = 0.0;
        for (std::size_t t = range.begin; t < range.end; ++t) {
            const double v = dataset.at(t, c);
            s.min = std::min(s.min, v);
            s.max = std::max(s.max, v);
            sum += v;
        }
        s.mean = sum / count;
        double sq = 0.0;
        for (std::size_t t = range.begin; t < range.end; ++t) {
            const double d = dataset.at(t, c) - s.mean;
            sq += d * d;
        }
        s.std = std::sqrt(sq / count);
        stats[c] = s;
    }
    return stats;
}

TimeSeriesDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw IngestionError("cannot open data file '" + path.string() + "'");

    std::string line;
    if (!std::getline(in, line) || trim(line).empty()) {
        throw IngestionError(path.string() + ": missing header row");
    }
    const char sep = (line.find(',') == std::string::npos && line.find(';') != std::string::npos) ? ';' : ',';
    const std::vector<std::string> header = split_line(line, sep);

    std::optional<std::size_t> time_col;
    std::vector<std::size_t> columns;
    std::vector<std::string> names;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const std::string key = lower(header[c]);
        if (c == 0 && (key == "time" || key == "timestamp")) {
            time_col = c;
            continue;
        }
        if (schema.channels) continue;
        bool excluded = false;
        for (const auto& prefix : schema.exclude_prefixes) {
            if (header[c].rfind(prefix, 0) == 0) excluded = true;
        }
        if (!excluded) {
            columns.push_back(c);
            names.push_back(header[c]);
        }
    }
    if (schema.channels) {
        for (const auto& want : *schema.channels) {
            auto it = std::find(header.begin(), header.end(), want);
            if (it == header.end()) {
                throw IngestionError(path.string() + ": expected channel '" + want + "' not in header");
            }
            columns.push_back(static_cast<std::size_t>(it - header.begin()));
            names.push_back(want);
        }
    }
    if (columns.size() < 2) {
        throw IngestionError(path.string() + ": need at least 2 channels, found " + std::to_string(columns.size()));
    }

    std::vector<double> values;
    std::vector<double> stamps;
    bool stamps_ok = time_col.has_value();
    std::size_t row = 1;
    std::size_t n_rows = 0;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const std::vector<std::string> cells = split_line(line, sep);
        if (cells.size() != header.size()) {
            throw IngestionError(path.string() + ": row " + std::to_string(row) + " has " +
                                 std::to_string(cells.size()) + " cells, header has " +
                                 std::to_string(header.size()));
        }
        for (std::size_t k = 0; k < columns.size(); ++k) {
            const std::size_t c = columns[k];
            double v = 0.0;
            if (!parse_real(cells[c], v)) {
                throw IngestionError(path.string() + ": row " + std::to_string(row) + ", column " +
                                     std::to_string(c + 1) + " ('" + header[c] + "'): " +
                                     (cells[c].empty() ? "missing value" : "non-numeric value '" + cells[c] + "'"));
            }
            values.push_back(v);
        }
        if (stamps_ok) {
            double s = 0.0;
            if (parse_timestamp(cells[*time_col], s)) {
                stamps.push_back(s);
            } else {
                stamps_ok = false;
            }
        }
        ++n_rows;
    }
    if (n_rows == 0) throw IngestionError(path.string() + ": no data rows");

    TimeSeriesDataset ds;
    ds.channel_names = std::move(names);
    ds.samples = Tensor({n_rows, columns.size()}, std::move(values));
    ds.sample_rate_hz = stamps_ok ? infer_sample_rate(stamps) : 1.0;
    return ds;
}

namespace {

void append_real(std::string& out, double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, ptr);
}

}  // namespace

std::string to_csv_string(const TimeSeriesDataset& dataset) {
    std::string buffer = "time";
    for (const auto& name : dataset.channel_names) buffer += "," + name;
    buffer += "\n";
    for (std::size_t t = 0; t < dataset.length(); ++t) {
        append_real(buffer, static_cast<double>(t) / dataset.sample_rate_hz);
        for (std::size_t c = 0; c < dataset.n_channels(); ++c) {
            buffer += ',';
            append_real(buffer, dataset.at(t, c));
        }
        buffer += '\n';
    }
    return buffer;
}

void write_csv(const TimeSeriesDataset& dataset, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << to_csv_string(dataset);
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

Scaler::Scaler(std::vector<double> mins, std::vector<double> maxs) : mins_(std::move(mins)), maxs_(std::move(maxs)) {
    if (mins_.size() != maxs_.size()) throw DimensionError("scaler: min/max length mismatch");
    for (std::size_t c = 0; c < mins_.size(); ++c) {
        if (!(mins_[c] <= maxs_[c])) throw UsageError("scaler: min > max on channel " + std::to_string(c));
    }
}

Scaler Scaler::fit(const TimeSeriesDataset& dataset, IndexRange fit_range) {
    if (fit_range.empty()) throw UsageError("fit_scaler: empty fit range");
    if (fit_range.end > dataset.length()) throw UsageError("fit_scaler: fit range outside dataset");
    const auto stats = compute_channel_stats(dataset, fit_range);
    std::vector<double> mins, maxs;
    for (const auto& s : stats) {
        mins.push_back(s.min);
        maxs.push_back(s.max);
    }
    return Scaler(std::move(mins), std::move(maxs));
}

double Scaler::transform(double value, std::size_t channel) const {
    const double width = span_of(channel);
    if (width == 0.0) return 0.5;
    return (value - mins_[channel]) / width;
}

double Scaler::inverse(double scaled, std::size_t channel) const {
    const double width = span_of(channel);
    if (width == 0.0) return mins_[channel];
    return mins_[channel] + scaled * width;
}

void Scaler::transform_row(std::span<double> row) const {
    for (std::size_t c = 0; c < row.size(); ++c) row[c] = transform(row[c], c);
}

void Scaler::inverse_row(std::span<double> row) const {
    for (std::size_t c = 0; c < row.size(); ++c) row[c] = inverse(row[c], c);
}

TimeSeriesDataset Scaler::transform(const TimeSeriesDataset& dataset) const {
    if (dataset.n_channels() != n_channels()) {
        throw DimensionError("scaler fitted on " + std::to_string(n_channels()) + " channels, data has " +
                             std::to_string(dataset.n_channels()));
    }
    TimeSeriesDataset out = dataset;
    out.channel_stats.clear();
    for (std::size_t t = 0; t < out.length(); ++t) transform_row(out.samples.row(t));
    return out;
}

TimeSeriesDataset Scaler::inverse(const TimeSeriesDataset& dataset) const {
    if (dataset.n_channels() != n_channels()) throw DimensionError("scaler: channel count mismatch");
    TimeSeriesDataset out = dataset;
    out.channel_stats.clear();
    for (std::size_t t = 0; t < out.length(); ++t) inverse_row(out.samples.row(t));
    return out;
}

std::pair<TimeSeriesDataset, TimeSeriesDataset> chronological_split(const TimeSeriesDataset& dataset,
                                                                    double train_fraction,
                                                                    std::size_t min_part_length) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw UsageError("chronological_split: train fraction must lie in (0, 1)");
    }
    const std::size_t n = dataset.length();
    const auto cut = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n)));
    if (cut < min_part_length || n - cut < min_part_length) {
        throw UsageError("chronological_split: parts of " + std::to_string(cut) + " and " +
                         std::to_string(n - cut) + " samples, each needs at least " +
                         std::to_string(min_part_length));
    }
    return {dataset.slice({0, cut}), dataset.slice({cut, n})};
}

std::size_t window_count(std::size_t length, std::size_t T, std::size_t stride) {
    if (stride == 0 || length < T + 1) return 0;
    return (length - T - 1) / stride + 1;
}

Window window_at(const TimeSeriesDataset& dataset, std::size_t start, std::size_t T) {
    if (start + T + 1 > dataset.length()) throw UsageError("window exceeds dataset end");
    const std::size_t n = dataset.n_channels();
    const double* first = dataset.samples.data() + start * n;
    return Window{Tensor({T + 1, n}, std::vector<double>(first, first + (T + 1) * n)), start};
}

std::vector<Window> windows(const TimeSeriesDataset& dataset, std::size_t T, std::size_t stride) {
    if (T < 1) throw UsageError("windows: T must be at least 1");
    if (stride < 1) throw UsageError("windows: stride must be positive");
    if (dataset.length() < T + 1) {
        throw UsageError("windows: dataset of length " + std::to_string(dataset.length()) +
                         " is shorter than one window of " + std::to_string(T + 1));
    }
    const std::size_t count = window_count(dataset.length(), T, stride);
    std::vector<Window> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) out.push_back(window_at(dataset, k * stride, T));
    return out;
}

TimeSeriesDataset downsample(const TimeSeriesDataset& dataset, std::size_t factor) {
    if (factor < 1) throw UsageError("downsample: factor must be >= 1");
    if (factor == 1) return dataset;
    const std::size_t n = dataset.n_channels();
    const std::size_t kept = (dataset.length() + factor - 1) / factor;
    std::vector<double> values;
    values.reserve(kept * n);
    for (std::size_t t = 0; t < dataset.length(); t += factor) {
        auto row = dataset.samples.row(t);
        values.insert(values.end(), row.begin(), row.end());
    }
    TimeSeriesDataset out;
    out.channel_names = dataset.channel_names;
    out.samples = Tensor({kept, n}, std::move(values));
    out.sample_rate_hz = dataset.sample_rate_hz / static_cast<double>(factor);
    return out;
}

}  // namespace maskfdia
