#include "config.hpp"

#include "maskfdia/error.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <set>

namespace maskfdia::cli {
namespace {

using nlohmann::json;

/// Field access on one config object that remembers which keys were read.
class Section {
public:
    Section(const json& node, std::string path) : path_(std::move(path)) {
        if (node.is_null()) return;
        if (!node.is_object()) fail(path_, "must be an object");
        node_ = node;
    }

    bool has(const std::string& key) const { return node_.contains(key) && !node_[key].is_null(); }

    const json* raw(const std::string& key) {
        seen_.insert(key);
        return has(key) ? &node_[key] : nullptr;
    }

    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    std::size_t count(const std::string& key, std::size_t fallback, std::size_t min_value = 0) {
        const json* v = raw(key);
        if (!v) return fallback;
        if (!v->is_number_integer() || v->get<long long>() < static_cast<long long>(min_value)) {
            fail(field(key), "must be an integer >= " + std::to_string(min_value));
        }
        return v->get<std::size_t>();
    }

    std::uint64_t seed(const std::string& key, std::uint64_t fallback) {
        const json* v = raw(key);
        if (!v) return fallback;
        if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<long long>() >= 0)) {
            fail(field(key), "must be a non-negative integer");
        }
        return v->get<std::uint64_t>();
    }

    double real(const std::string& key, double fallback) {
        const json* v = raw(key);
        if (!v) return fallback;
        if (!v->is_number()) fail(field(key), "must be a number");
        const double d = v->get<double>();
        if (!std::isfinite(d)) fail(field(key), "must be finite");
        return d;
    }

    bool flag(const std::string& key, bool fallback) {
        const json* v = raw(key);
        if (!v) return fallback;
        if (!v->is_boolean()) fail(field(key), "must be true or false");
        return v->get<bool>();
    }

    std::string text(const std::string& key, const std::string& fallback) {
        const json* v = raw(key);
        if (!v) return fallback;
        if (!v->is_string()) fail(field(key), "must be a string");
        return v->get<std::string>();
    }

    std::vector<std::string> strings(const std::string& key) {
        const json* v = raw(key);
        if (!v) return {};
        return string_list(*v, field(key));
    }

    void finish() const {
        for (const auto& [key, value] : node_.items()) {
            if (!seen_.count(key)) fail(field(key), "unknown setting");
        }
    }

    [[noreturn]] static void fail(const std::string& path, const std::string& what) {
        throw ConfigError(path + ": " + what);
    }

    static std::vector<std::string> string_list(const json& v, const std::string& path) {
        if (!v.is_array()) fail(path, "must be a list of strings");
        std::vector<std::string> out;
        for (const auto& item : v) {
            if (!item.is_string()) fail(path, "must be a list of strings");
            out.push_back(item.get<std::string>());
        }
        return out;
    }

private:
    json node_ = json::object();
    std::string path_;
    std::set<std::string> seen_;
};

std::vector<std::size_t> width_list(const json* v, const std::string& path, std::vector<std::size_t> fallback) {
    if (!v) return fallback;
    if (!v->is_array() || v->empty()) Section::fail(path, "must be a non-empty list of positive integers");
    std::vector<std::size_t> out;
    for (const auto& item : *v) {
        if (!item.is_number_integer() || item.get<long long>() < 1) {
            Section::fail(path, "must be a non-empty list of positive integers");
        }
        out.push_back(item.get<std::size_t>());
    }
    return out;
}

std::optional<std::vector<std::string>> channel_selection(const json* v, const std::string& path,
                                                          const char* every) {
    if (!v) return std::nullopt;
    if (v->is_string() && v->get<std::string>() == every) return std::nullopt;
    auto names = Section::string_list(*v, path);
    if (names.empty()) Section::fail(path, std::string("must list channels or be \"") + every + "\"");
    return names;
}

template <typename Enum, typename Parse>
Enum enum_field(Section& s, const std::string& key, Enum fallback, Parse parse) {
    const json* v = s.raw(key);
    if (!v) return fallback;
    if (!v->is_string()) Section::fail(s.field(key), "must be a string");
    try {
        return parse(v->get<std::string>());
    } catch (const Error& e) {
        Section::fail(s.field(key), e.what());
    }
}

}  // namespace

nlohmann::json read_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config file '" + path.string() + "' not found or unreadable");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config file '" + path.string() + "': " + e.what());
    }
}

void apply_override(nlohmann::json& config, const std::string& dotted_path, const std::string& value) {
    if (dotted_path.empty()) throw ConfigError("empty override path");
    nlohmann::json* node = &config;
    std::size_t begin = 0;
    while (true) {
        const std::size_t dot = dotted_path.find('.', begin);
        const std::string key = dotted_path.substr(begin, dot == std::string::npos ? std::string::npos : dot - begin);
        if (key.empty()) throw ConfigError("malformed override path '" + dotted_path + "'");
        if (!node->is_object()) {
            if (!node->is_null()) throw ConfigError(dotted_path + ": parent is not an object");
            *node = nlohmann::json::object();
        }
        node = &(*node)[key];
        if (dot == std::string::npos) break;
        begin = dot + 1;
    }
    auto parsed = nlohmann::json::parse(value, nullptr, false);
    *node = parsed.is_discarded() ? nlohmann::json(value) : parsed;
}

std::optional<std::uint64_t> seed_from_environment() {
    const char* env = std::getenv("MASKFDIA_SEED");
    if (!env || !*env) return std::nullopt;
    std::uint64_t seed = 0;
    const char* end = env + std::char_traits<char>::length(env);
    const auto [ptr, ec] = std::from_chars(env, end, seed);
    if (ec != std::errc() || ptr != end) throw ConfigError(std::string("MASKFDIA_SEED: not an integer: '") + env + "'");
    return seed;
}

RunConfig resolve_config(const nlohmann::json& config, std::optional<std::uint64_t> seed) {
    Section root(config, "");
    RunConfig rc;
    rc.seed = seed ? *seed : root.seed("seed", 0);
    if (seed) root.raw("seed");

    {
        Section s(root.raw("data") ? *root.raw("data") : json(), "data");
        rc.data.path = s.text("path", "");
        rc.data.channels = channel_selection(s.raw("channels"), "data.channels", "infer");
        rc.data.exclude_prefixes = s.strings("exclude_prefixes");
        rc.data.train_fraction = s.real("train_fraction", 0.8);
        rc.data.validation_fraction = s.real("validation_fraction", 0.1);
        rc.data.T = s.count("T", 19, 1);
        rc.data.downsample = s.count("downsample", 1, 1);
        if (!(rc.data.train_fraction > 0.0 && rc.data.train_fraction < 1.0)) {
            Section::fail("data.train_fraction", "must lie in (0, 1)");
        }
        if (!(rc.data.validation_fraction > 0.0 &&
              rc.data.train_fraction + rc.data.validation_fraction < 1.0)) {
            Section::fail("data.validation_fraction", "must be positive and leave room for a test part");
        }
        s.finish();
    }
    {
        Section s(root.raw("model") ? *root.raw("model") : json(), "model");
        rc.model.formulation = enum_field(s, "formulation", Formulation::masked, formulation_from_string);
        const std::vector<std::size_t> default_hidden =
            rc.model.formulation == Formulation::auto_associative ? std::vector<std::size_t>{64, 32, 2}
                                                                  : std::vector<std::size_t>{64};
        rc.model.hidden = width_list(s.raw("hidden"), "model.hidden", default_hidden);
        rc.model.maskable = channel_selection(s.raw("maskable"), "model.maskable", "all");
        s.finish();
    }
    {
        Section s(root.raw("train") ? *root.raw("train") : json(), "train");
        TrainConfig& t = rc.train;
        t.epochs = s.count("epochs", 100, 1);
        t.batch_size = s.count("batch_size", 64, 1);
        t.learning_rate = s.real("learning_rate", 1e-3);
        t.fill_policy = enum_field(s, "fill_policy", FillPolicy::uniform_random, fill_policy_from_string);
        t.shuffle = s.flag("shuffle", true);
        t.stride = s.count("stride", 1, 1);
        t.max_validation_windows = s.count("max_validation_windows", 0);
        if (!(t.learning_rate > 0.0)) Section::fail("train.learning_rate", "must be positive");
        s.finish();
    }
    {
        Section s(root.raw("fdia") ? *root.raw("fdia") : json(), "fdia");
        rc.fdia.threshold_method =
            enum_field(s, "threshold_method", ThresholdMethod::mean_std, threshold_method_from_string);
        rc.fdia.k = s.real("k", 4.0);
        rc.fdia.quantile = s.real("quantile", 0.999);
        rc.fdia.fill_policy = enum_field(s, "fill_policy", FillPolicy::channel_mean, fill_policy_from_string);
        rc.fdia.max_iterations = s.count("max_iterations", 2, 1);
        rc.fdia.fill_seed = s.seed("fill_seed", 0);
        if (rc.fdia.k < 0.0) Section::fail("fdia.k", "must be >= 0");
        if (!(rc.fdia.quantile > 0.0 && rc.fdia.quantile < 1.0)) Section::fail("fdia.quantile", "must lie in (0, 1)");
        if (rc.fdia.max_iterations > 2) Section::fail("fdia.max_iterations", "must be 1 or 2");
        s.finish();
    }
    if (const json* sc = root.raw("scenario")) {
        if (!sc->is_string() && !sc->is_object()) Section::fail("scenario", "must be a file path or a scenario object");
        rc.scenario = *sc;
    }
    {
        Section s(root.raw("synth") ? *root.raw("synth") : json(), "synth");
        PlantConfig& p = rc.synth;
        p.n_channels = s.count("n_channels", 8, 4);
        p.length = s.count("length", 20000, 1000);
        p.seed = s.seed("seed", rc.seed);
        p.coupling_strength = s.real("coupling_strength", 0.85);
        p.noise_std = s.real("noise_std", 0.02);
        p.shared_modes = s.count("shared_modes", 1, 1);
        p.sample_rate_hz = s.real("sample_rate_hz", 1.0);
        if (p.coupling_strength < 0.0 || p.coupling_strength > 1.0) {
            Section::fail("synth.coupling_strength", "must lie in [0, 1]");
        }
        if (p.noise_std < 0.0) Section::fail("synth.noise_std", "must be >= 0");
        if (p.shared_modes >= p.n_channels) Section::fail("synth.shared_modes", "must be below synth.n_channels");
        if (!(p.sample_rate_hz > 0.0)) Section::fail("synth.sample_rate_hz", "must be positive");
        s.finish();
    }
    {
        Section s(root.raw("bench") ? *root.raw("bench") : json(), "bench");
        BenchSection& b = rc.bench;
        b.pipeline_outputs = s.count("pipeline_outputs", 4, 1);
        b.truth_noise_std = s.real("truth_noise_std", 0.85);
        b.repetitions = s.count("repetitions", 600, 1);
        b.latency_channels = s.count("latency_channels", 12, 2);
        b.latency_T = s.count("latency_T", 10, 1);
        b.budget_ms = s.real("budget_ms", 40.0);
        if (b.truth_noise_std < 0.0) Section::fail("bench.truth_noise_std", "must be >= 0");
        if (!(b.budget_ms > 0.0)) Section::fail("bench.budget_ms", "must be positive");
        s.finish();
    }
    {
        Section s(root.raw("output") ? *root.raw("output") : json(), "output");
        rc.output_dir = s.text("dir", "runs/default");
        if (rc.output_dir.empty()) Section::fail("output.dir", "must not be empty");
        s.finish();
    }
    root.finish();

    rc.train.T = rc.data.T;
    rc.train.seed = rc.seed;
    rc.train.formulation = rc.model.formulation;
    rc.train.hidden = rc.model.hidden;

    json& e = rc.echo;
    e["seed"] = rc.seed;
    e["data"] = {{"path", rc.data.path},
                 {"channels", rc.data.channels ? json(*rc.data.channels) : json("infer")},
                 {"exclude_prefixes", rc.data.exclude_prefixes},
                 {"train_fraction", rc.data.train_fraction},
                 {"validation_fraction", rc.data.validation_fraction},
                 {"T", rc.data.T},
                 {"downsample", rc.data.downsample}};
    e["model"] = {{"formulation", to_string(rc.model.formulation)},
                  {"hidden", rc.model.hidden},
                  {"maskable", rc.model.maskable ? json(*rc.model.maskable) : json("all")}};
    e["train"] = {{"epochs", rc.train.epochs},
                  {"batch_size", rc.train.batch_size},
                  {"learning_rate", rc.train.learning_rate},
                  {"fill_policy", to_string(rc.train.fill_policy)},
                  {"shuffle", rc.train.shuffle},
                  {"stride", rc.train.stride},
                  {"max_validation_windows", rc.train.max_validation_windows}};
    e["fdia"] = {{"threshold_method", to_string(rc.fdia.threshold_method)},
                 {"k", rc.fdia.k},
                 {"quantile", rc.fdia.quantile},
                 {"fill_policy", to_string(rc.fdia.fill_policy)},
                 {"max_iterations", rc.fdia.max_iterations},
                 {"fill_seed", rc.fdia.fill_seed}};
    e["scenario"] = rc.scenario;
    e["synth"] = {{"n_channels", rc.synth.n_channels},
                  {"length", rc.synth.length},
                  {"seed", rc.synth.seed},
                  {"coupling_strength", rc.synth.coupling_strength},
                  {"noise_std", rc.synth.noise_std},
                  {"shared_modes", rc.synth.shared_modes},
                  {"sample_rate_hz", rc.synth.sample_rate_hz}};
    e["bench"] = {{"pipeline_outputs", rc.bench.pipeline_outputs},
                  {"truth_noise_std", rc.bench.truth_noise_std},
                  {"repetitions", rc.bench.repetitions},
                  {"latency_channels", rc.bench.latency_channels},
                  {"latency_T", rc.bench.latency_T},
                  {"budget_ms", rc.bench.budget_ms}};
    e["output"] = {{"dir", rc.output_dir}};
    return rc;
}

std::vector<std::size_t> maskable_indices(const ModelSection& model, const std::vector<std::string>& channel_names) {
    std::vector<std::size_t> out;
    if (!model.maskable) {
        for (std::size_t i = 0; i < channel_names.size(); ++i) out.push_back(i);
        return out;
    }
    for (const auto& name : *model.maskable) {
        const auto it = std::find(channel_names.begin(), channel_names.end(), name);
        if (it == channel_names.end()) throw ConfigError("model.maskable: channel '" + name + "' not in the data");
        out.push_back(static_cast<std::size_t>(it - channel_names.begin()));
    }
    std::sort(out.begin(), out.end());
    if (std::adjacent_find(out.begin(), out.end()) != out.end()) throw ConfigError("model.maskable: duplicate channel");
    return out;
}

TrainConfig train_config(const RunConfig& config, const std::vector<std::string>& channel_names) {
    TrainConfig t = config.train;
    if (t.formulation == Formulation::masked) t.maskable = maskable_indices(config.model, channel_names);
    return t;
}

}  // namespace maskfdia::cli
