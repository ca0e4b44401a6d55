#include "maskfdia/faults.hpp"

#include "maskfdia/error.hpp"
#include "maskfdia/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace maskfdia {
namespace {

void check_spec(const TimeSeriesDataset& series, const FaultSpec& spec, std::span<const double> channel_std) {
    if (spec.targets.empty()) throw UsageError("fault: no target channels");
    for (std::size_t c : spec.targets) {
        if (c >= series.n_channels()) throw UsageError("fault: channel " + std::to_string(c) + " not found");
    }
    if (!(spec.start_index < spec.end_index) || spec.end_index > series.length()) {
        throw UsageError("fault: interval [" + std::to_string(spec.start_index) + ", " + std::to_string(spec.end_index) +
                         ") must be non-empty and within the series of length " + std::to_string(series.length()));
    }
    if (!std::isfinite(spec.magnitude)) throw UsageError("fault: magnitude must be finite");
    if (spec.unit == FaultUnit::std_dev && channel_std.size() < series.n_channels()) {
        throw UsageError("fault: per-channel std required for std-relative magnitudes");
    }
}

double scale_for(const FaultSpec& spec, std::span<const double> channel_std, std::size_t channel) {
    return spec.unit == FaultUnit::absolute ? spec.magnitude : spec.magnitude * channel_std[channel];
}

FaultedSeries start_from(const TimeSeriesDataset& series) {
    return {series, FaultLabels(series.length(), series.n_channels())};
}

void require_kind(const FaultSpec& spec, FaultKind kind) {
    if (spec.kind != kind) throw UsageError("fault: expected kind " + to_string(kind) + ", got " + to_string(spec.kind));
}

}  // namespace

std::string to_string(FaultKind kind) {
    switch (kind) {
        case FaultKind::bias: return "bias";
        case FaultKind::drift: return "drift";
        case FaultKind::noise: return "noise";
        case FaultKind::multi_bias: return "multi_bias";
    }
    return "unknown";
}

FaultKind fault_kind_from_string(const std::string& name) {
    if (name == "bias") return FaultKind::bias;
    if (name == "drift") return FaultKind::drift;
    if (name == "noise") return FaultKind::noise;
    if (name == "multi_bias") return FaultKind::multi_bias;
    throw UsageError("unknown fault kind '" + name + "'");
}

bool FaultLabels::any_in(std::size_t channel, std::size_t begin, std::size_t end) const {
    for (std::size_t t = begin; t < end && t < length; ++t) {
        if (at(t, channel)) return true;
    }
    return false;
}

bool FaultLabels::any_channel() const {
    return std::any_of(cells.begin(), cells.end(), [](std::uint8_t v) { return v != 0; });
}

FaultedSeries inject_bias(const TimeSeriesDataset& series, const FaultSpec& spec, std::span<const double> channel_std) {
    require_kind(spec, FaultKind::bias);
    check_spec(series, spec, channel_std);
    FaultedSeries out = start_from(series);
    for (std::size_t c : spec.targets) {
        const double offset = scale_for(spec, channel_std, c);
        for (std::size_t t = spec.start_index; t < spec.end_index; ++t) {
            out.series.samples(t, c) += offset;
            out.labels.mark(t, c);
        }
    }
    return out;
}

FaultedSeries inject_drift(const TimeSeriesDataset& series, const FaultSpec& spec, std::span<const double> channel_std) {
    require_kind(spec, FaultKind::drift);
    check_spec(series, spec, channel_std);
    if (spec.end_index - spec.start_index < 2) throw UsageError("drift: interval needs at least 2 samples");
    FaultedSeries out = start_from(series);
    const double span = static_cast<double>(spec.end_index - 1 - spec.start_index);
    for (std::size_t c : spec.targets) {
        const double full = scale_for(spec, channel_std, c);
        for (std::size_t t = spec.start_index; t < spec.end_index; ++t) {
            out.series.samples(t, c) += static_cast<double>(t - spec.start_index) / span * full;
            out.labels.mark(t, c);
        }
    }
    return out;
}

FaultedSeries inject_noise(const TimeSeriesDataset& series, const FaultSpec& spec, std::span<const double> channel_std) {
    require_kind(spec, FaultKind::noise);
    check_spec(series, spec, channel_std);
    FaultedSeries out = start_from(series);
    Rng rng(spec.seed);
    for (std::size_t c : spec.targets) {
        const double sd = scale_for(spec, channel_std, c);
        for (std::size_t t = spec.start_index; t < spec.end_index; ++t) {
            const double e = rng.normal();
            out.series.samples(t, c) += sd * e;
            out.labels.mark(t, c);
        }
    }
    return out;
}

FaultedSeries inject_multi_bias(const TimeSeriesDataset& series, const FaultSpec& spec,
                                std::span<const double> channel_std) {
    require_kind(spec, FaultKind::multi_bias);
    if (spec.targets.size() < 2) throw UsageError("multi_bias: needs at least 2 target channels");
    FaultSpec single = spec;
    single.kind = FaultKind::bias;
    return inject_bias(series, single, channel_std);
}

FaultedSeries inject(const TimeSeriesDataset& series, const FaultSpec& spec, std::span<const double> channel_std) {
    switch (spec.kind) {
        case FaultKind::bias: return inject_bias(series, spec, channel_std);
        case FaultKind::drift: return inject_drift(series, spec, channel_std);
        case FaultKind::noise: return inject_noise(series, spec, channel_std);
        case FaultKind::multi_bias: return inject_multi_bias(series, spec, channel_std);
    }
    throw UsageError("fault: unknown kind");
}

std::vector<std::size_t> FaultScenario::target_channels() const {
    std::vector<std::size_t> out;
    for (const auto& f : faults) out.insert(out.end(), f.targets.begin(), f.targets.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

FaultedSeries inject_scenario(const TimeSeriesDataset& series, const FaultScenario& scenario,
                              std::span<const double> channel_std) {
    std::vector<std::size_t> seen;
    for (const auto& f : scenario.faults) {
        for (std::size_t c : f.targets) {
            if (std::find(seen.begin(), seen.end(), c) != seen.end()) {
                throw UsageError("scenario '" + scenario.label + "': channel " + std::to_string(c) +
                                 " is targeted by more than one fault");
            }
            seen.push_back(c);
        }
    }
    FaultedSeries out = start_from(series);
    for (const auto& f : scenario.faults) {
        FaultedSeries step = inject(out.series, f, channel_std);
        out.series = std::move(step.series);
        for (std::size_t i = 0; i < out.labels.cells.size(); ++i) out.labels.cells[i] |= step.labels.cells[i];
    }
    return out;
}

FaultScenario to_scaled_units(const FaultScenario& scenario, const Scaler& scaler) {
    FaultScenario out{scenario.label, {}};
    for (const auto& f : scenario.faults) {
        if (f.unit != FaultUnit::absolute) {
            out.faults.push_back(f);
            continue;
        }
        // one spec per target, since each channel has its own span
        for (std::size_t c : f.targets) {
            if (c >= scaler.n_channels()) throw DimensionError("to_scaled_units: channel out of range");
            const double span = scaler.span_of(c);
            FaultSpec g = f;
            g.kind = f.kind == FaultKind::multi_bias ? FaultKind::bias : f.kind;
            g.targets = {c};
            g.magnitude = span > 0.0 ? f.magnitude / span : 0.0;
            out.faults.push_back(g);
        }
    }
    return out;
}

FaultScenario scenario_from_json(const nlohmann::json& j, const std::vector<std::string>& channel_names) {
    FaultScenario scenario;
    if (!j.is_object()) throw ConfigError("scenario: expected a JSON object");
    scenario.label = j.value("label", std::string("scenario"));
    if (!j.contains("faults") || !j["faults"].is_array() || j["faults"].empty()) {
        throw ConfigError("scenario.faults: expected a non-empty array");
    }
    for (std::size_t k = 0; k < j["faults"].size(); ++k) {
        const auto& f = j["faults"][k];
        const std::string path = "scenario.faults[" + std::to_string(k) + "]";
        auto need = [&](const char* key) -> const nlohmann::json& {
            if (!f.contains(key)) throw ConfigError(path + "." + key + ": required");
            return f[key];
        };
        FaultSpec spec;
        try {
            spec.kind = fault_kind_from_string(need("kind").get<std::string>());
            for (const auto& t : need("targets")) {
                if (t.is_string()) {
                    const auto name = t.get<std::string>();
                    auto it = std::find(channel_names.begin(), channel_names.end(), name);
                    if (it == channel_names.end()) throw ConfigError(path + ".targets: channel '" + name + "' not found");
                    spec.targets.push_back(static_cast<std::size_t>(it - channel_names.begin()));
                } else {
                    const auto idx = t.get<std::size_t>();
                    if (idx >= channel_names.size()) {
                        throw ConfigError(path + ".targets: channel index " + std::to_string(idx) + " out of range");
                    }
                    spec.targets.push_back(idx);
                }
            }
            spec.magnitude = need("magnitude").get<double>();
            const std::string unit = f.value("unit", std::string("std"));
            if (unit == "std") {
                spec.unit = FaultUnit::std_dev;
            } else if (unit == "absolute") {
                spec.unit = FaultUnit::absolute;
            } else {
                throw ConfigError(path + ".unit: expected 'std' or 'absolute'");
            }
            spec.start_index = need("start").get<std::size_t>();
            spec.end_index = need("end").get<std::size_t>();
            spec.seed = f.value("seed", std::uint64_t{0});
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(path + ": " + e.what());
        } catch (const UsageError& e) {
            throw ConfigError(path + ": " + e.what());
        }
        if (spec.targets.empty()) throw ConfigError(path + ".targets: must not be empty");
        if (spec.start_index >= spec.end_index) throw ConfigError(path + ": start must be < end");
        if (!std::isfinite(spec.magnitude)) throw ConfigError(path + ".magnitude: must be finite");
        scenario.faults.push_back(std::move(spec));
    }
    return scenario;
}

FaultScenario load_scenario(const std::filesystem::path& path, const std::vector<std::string>& channel_names) {
    std::ifstream in(path);
    if (!in) throw ConfigError("scenario: cannot open '" + path.string() + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("scenario: '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return scenario_from_json(j, channel_names);
}

nlohmann::json to_json(const FaultScenario& scenario, const std::vector<std::string>& channel_names) {
    nlohmann::json faults = nlohmann::json::array();
    for (const auto& f : scenario.faults) {
        nlohmann::json targets = nlohmann::json::array();
        for (std::size_t c : f.targets) targets.push_back(c < channel_names.size() ? nlohmann::json(channel_names[c]) : nlohmann::json(c));
        faults.push_back({{"kind", to_string(f.kind)},
                          {"targets", targets},
                          {"magnitude", f.magnitude},
                          {"unit", f.unit == FaultUnit::absolute ? "absolute" : "std"},
                          {"start", f.start_index},
                          {"end", f.end_index},
                          {"seed", f.seed}});
    }
    return {{"label", scenario.label}, {"faults", faults}};
}

}  // namespace maskfdia
