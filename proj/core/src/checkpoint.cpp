#include "maskfdia/checkpoint.hpp"

#include "maskfdia/error.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace maskfdia {
namespace {

constexpr std::string_view kMagic = "MASKFDIA-CHECKPOINT";

using nlohmann::json;

json header_json(const Checkpoint& ck) {
    const SequenceModel& m = ck.model;
    json h;
    h["format_version"] = kCheckpointFormatVersion;
    h["formulation"] = to_string(m.formulation());
    h["window_T"] = m.window_T();
    h["n_channels"] = m.n_channels();
    h["maskable"] = m.maskable().indices();
    h["layer_widths"] = m.layer_widths();
    h["channel_names"] = ck.channel_names;
    h["scaler"] = {{"min", ck.scaler.mins()}, {"max", ck.scaler.maxs()}};
    json stats = json::array();
    for (const auto& s : ck.train_stats) stats.push_back({{"min", s.min}, {"max", s.max}, {"mean", s.mean}, {"std", s.std}});
    h["train_stats"] = stats;
    h["thresholds"] = ck.thresholds ? to_json(*ck.thresholds) : json(nullptr);
    h["config"] = ck.config;
    h["seed"] = ck.seed;
    json shapes = json::array();
    for (const auto& p : m.parameters()) shapes.push_back(p.shape());
    h["parameter_shapes"] = shapes;
    h["parameter_count"] = m.parameter_count();
    return h;
}

Checkpoint from_header(const json& h) {
    Checkpoint ck;
    const std::size_t n = h.at("n_channels").get<std::size_t>();
    MaskableChannelSet maskable(n, h.at("maskable").get<std::vector<std::size_t>>());
    ck.model = SequenceModel(formulation_from_string(h.at("formulation").get<std::string>()), std::move(maskable),
                             h.at("window_T").get<std::size_t>(), h.at("layer_widths").get<std::vector<std::size_t>>());
    ck.channel_names = h.at("channel_names").get<std::vector<std::string>>();
    if (ck.channel_names.size() != n) throw CheckpointError("checkpoint: channel name count differs from n_channels");
    ck.scaler = Scaler(h.at("scaler").at("min").get<std::vector<double>>(),
                       h.at("scaler").at("max").get<std::vector<double>>());
    for (const auto& s : h.at("train_stats")) {
        ck.train_stats.push_back({s.at("min").get<double>(), s.at("max").get<double>(), s.at("mean").get<double>(),
                                  s.at("std").get<double>()});
    }
    if (ck.scaler.n_channels() != n || ck.train_stats.size() != n) {
        throw CheckpointError("checkpoint: scaler/stats channel count differs from n_channels");
    }
    if (!h.at("thresholds").is_null()) ck.thresholds = thresholds_from_json(h.at("thresholds"));
    ck.config = h.at("config");
    ck.seed = h.at("seed").get<std::uint64_t>();
    if (h.at("parameter_count").get<std::size_t>() != ck.model.parameter_count()) {
        throw CheckpointError("checkpoint: parameter count does not match the architecture");
    }
    return ck;
}

void put_le(std::string& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xFF));
}

double get_le(const unsigned char* p) {
    std::uint64_t bits = 0;
    for (int b = 7; b >= 0; --b) bits = (bits << 8) | p[b];
    return std::bit_cast<double>(bits);
}

}  // namespace

json to_json(const Thresholds& t) {
    return {{"values", t.values},
            {"method", to_string(t.method)},
            {"k", t.k},
            {"quantile", t.quantile},
            {"residual_mean", t.residual_mean},
            {"residual_std", t.residual_std},
            {"window_count", t.window_count}};
}

Thresholds thresholds_from_json(const json& j) {
    Thresholds t;
    t.values = j.at("values").get<std::vector<double>>();
    t.method = threshold_method_from_string(j.at("method").get<std::string>());
    t.k = j.at("k").get<double>();
    t.quantile = j.at("quantile").get<double>();
    t.residual_mean = j.at("residual_mean").get<std::vector<double>>();
    t.residual_std = j.at("residual_std").get<std::vector<double>>();
    t.window_count = j.at("window_count").get<std::size_t>();
    for (double v : t.values) {
        if (!(v > 0.0)) throw CheckpointError("checkpoint: thresholds must be positive");
    }
    return t;
}

std::string serialize_checkpoint(const Checkpoint& ck, CheckpointEncoding encoding) {
    json header = header_json(ck);
    std::string out(kMagic);
    out += " " + std::to_string(kCheckpointFormatVersion);
    if (encoding == CheckpointEncoding::text) {
        json params = json::array();
        for (const auto& p : ck.model.parameters()) params.push_back(p.storage());
        header["parameters"] = params;
        out += " text\n" + header.dump(1) + "\n";
        return out;
    }
    const std::string text = header.dump();
    out += " binary\n" + std::to_string(text.size()) + "\n" + text + "\n";
    out.reserve(out.size() + 8 * ck.model.parameter_count());
    for (const auto& p : ck.model.parameters()) {
        for (double v : p.values()) put_le(out, v);
    }
    return out;
}

Checkpoint parse_checkpoint(std::string_view bytes) {
    auto next_line = [&](std::string_view& rest) -> std::string_view {
        const std::size_t pos = rest.find('\n');
        if (pos == std::string_view::npos) throw CheckpointError("checkpoint: truncated header");
        std::string_view line = rest.substr(0, pos);
        rest.remove_prefix(pos + 1);
        return line;
    };
    std::string_view rest = bytes;
    const std::string_view magic_line = next_line(rest);
    std::istringstream magic{std::string(magic_line)};
    std::string tag, encoding;
    int version = 0;
    if (!(magic >> tag >> version >> encoding) || tag != kMagic) {
        throw CheckpointError("checkpoint: not a maskfdia checkpoint");
    }
    if (version != kCheckpointFormatVersion) {
        throw CheckpointError("checkpoint: format version " + std::to_string(version) + " is not supported (expected " +
                              std::to_string(kCheckpointFormatVersion) + ")");
    }
    try {
        if (encoding == "text") {
            const json doc = json::parse(rest);
            Checkpoint ck = from_header(doc);
            const auto& params = doc.at("parameters");
            auto& dst = ck.model.parameters();
            if (params.size() != dst.size()) throw CheckpointError("checkpoint: wrong number of parameter arrays");
            for (std::size_t k = 0; k < dst.size(); ++k) {
                auto values = params[k].get<std::vector<double>>();
                if (values.size() != dst[k].size()) throw CheckpointError("checkpoint: parameter array size mismatch");
                dst[k] = Tensor(dst[k].shape(), std::move(values));
            }
            return ck;
        }
        if (encoding != "binary") throw CheckpointError("checkpoint: unknown encoding '" + encoding + "'");

        const std::string_view count_line = next_line(rest);
        std::size_t header_size = 0;
        try {
            header_size = std::stoull(std::string(count_line));
        } catch (const std::exception&) {
            throw CheckpointError("checkpoint: corrupt header length");
        }
        if (rest.size() < header_size + 1) throw CheckpointError("checkpoint: truncated header");
        const json header = json::parse(rest.substr(0, header_size));
        rest.remove_prefix(header_size);
        if (rest.front() != '\n') throw CheckpointError("checkpoint: corrupt header terminator");
        rest.remove_prefix(1);

        Checkpoint ck = from_header(header);
        const std::size_t expected = 8 * ck.model.parameter_count();
        if (rest.size() != expected) {
            throw CheckpointError("checkpoint: parameter block holds " + std::to_string(rest.size()) +
                                  " bytes, expected " + std::to_string(expected) +
                                  (rest.size() < expected ? " (truncated file)" : ""));
        }
        const auto* p = reinterpret_cast<const unsigned char*>(rest.data());
        for (auto& tensor : ck.model.parameters()) {
            for (double& v : tensor.values()) {
                v = get_le(p);
                p += 8;
            }
            if (!tensor.all_finite()) throw CheckpointError("checkpoint: non-finite parameter value");
        }
        return ck;
    } catch (const json::exception& e) {
        throw CheckpointError(std::string("checkpoint: malformed header: ") + e.what());
    } catch (const CheckpointError&) {
        throw;
    } catch (const Error& e) {
        throw CheckpointError(std::string("checkpoint: inconsistent contents: ") + e.what());
    }
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path, CheckpointEncoding encoding) {
    const std::string bytes = serialize_checkpoint(checkpoint, encoding);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint '" + path.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for checkpoint '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot open checkpoint '" + path.string() + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_checkpoint(buffer.str());
}

void check_compatible(const Checkpoint& checkpoint, const TimeSeriesDataset& dataset) {
    if (dataset.n_channels() != checkpoint.model.n_channels()) {
        throw CheckpointError("channel mismatch: checkpoint has " + std::to_string(checkpoint.model.n_channels()) +
                              " channels, data has " + std::to_string(dataset.n_channels()));
    }
    if (!dataset.channel_names.empty() && dataset.channel_names != checkpoint.channel_names) {
        throw CheckpointError("channel mismatch: data channel names differ from the checkpoint's");
    }
}

}  // namespace maskfdia
