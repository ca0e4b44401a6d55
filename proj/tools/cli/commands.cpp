#include "commands.hpp"

#include "maskfdia/checkpoint.hpp"
#include "maskfdia/error.hpp"
#include "maskfdia/eval.hpp"
#include "maskfdia/faults.hpp"
#include "maskfdia/fdia.hpp"
#include "maskfdia/report.hpp"
#include "maskfdia/training.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace maskfdia::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kCheckpointName = "checkpoint.mfck";
constexpr const char* kSynthName = "synthetic.csv";

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
        if (ec) throw IoError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write '" + path.string() + "'");
    f << text;
    if (!f) throw IoError("write failed for '" + path.string() + "'");
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("file '" + path.string() + "' not found or unreadable");
    try {
        return json::parse(f);
    } catch (const json::parse_error& e) {
        throw ConfigError("'" + path.string() + "': " + e.what());
    }
}

json run_header(const RunConfig& config, const std::string& command) {
    return {{"schema_version", kReportSchemaVersion}, {"command", command}, {"seed", config.seed},
            {"config", config.echo}};
}

fs::path checkpoint_path(const RunConfig& config, const CommandArgs& args) {
    return args.checkpoint.empty() ? fs::path(config.output_dir) / kCheckpointName : fs::path(args.checkpoint);
}

CsvSchema schema_of(const DataSection& data) { return {data.channels, data.exclude_prefixes}; }

/// Raw series a command runs on: --input if given, else the test part of data.path.
TimeSeriesDataset segment_for(const RunConfig& config, const CommandArgs& args, const CsvSchema& schema) {
    if (!args.input.empty()) {
        if (!fs::exists(args.input)) throw ConfigError("--input: file '" + args.input + "' not found");
        auto ds = load_csv(args.input, schema);
        return config.data.downsample > 1 ? downsample(ds, config.data.downsample) : ds;
    }
    DataSection data = config.data;
    data.channels = schema.channels;
    auto splits = split_dataset(load_dataset(data), config.data);
    return splits.raw.slice(splits.test);
}

std::optional<FaultScenario> scenario_for(const RunConfig& config, const CommandArgs& args,
                                          const std::vector<std::string>& names) {
    if (!args.scenario.empty()) {
        if (!fs::exists(args.scenario)) throw ConfigError("--scenario: file '" + args.scenario + "' not found");
        return load_scenario(args.scenario, names);
    }
    if (config.scenario.is_string()) {
        const std::string path = config.scenario.get<std::string>();
        if (!fs::exists(path)) throw ConfigError("scenario: file '" + path + "' not found");
        return load_scenario(path, names);
    }
    if (config.scenario.is_object()) return scenario_from_json(config.scenario, names);
    return std::nullopt;
}

FdiaOptions fdia_options(const FdiaSection& f) { return {f.fill_policy, f.max_iterations, f.fill_seed}; }

std::vector<double> stds_of(std::span<const ChannelStats> stats) {
    std::vector<double> out;
    for (const auto& s : stats) out.push_back(s.std);
    return out;
}

void require_masked(const Checkpoint& ck, const char* command) {
    if (ck.model.formulation() != Formulation::masked) {
        throw UsageError(std::string(command) + ": checkpoint formulation is " + to_string(ck.model.formulation()) +
                         "; only masked checkpoints carry FDIA thresholds");
    }
}

const Thresholds& require_thresholds(const Checkpoint& ck) {
    if (!ck.thresholds) throw UsageError("checkpoint has no thresholds; run `maskfdia calibrate` first");
    return *ck.thresholds;
}

PlantConfig plant_from_json(const json& j) {
    json cfg = {{"synth", j}};
    return resolve_config(cfg).synth;
}

json plant_to_json(const PlantConfig& p) {
    return {{"n_channels", p.n_channels},         {"length", p.length},
            {"seed", p.seed},                     {"coupling_strength", p.coupling_strength},
            {"noise_std", p.noise_std},           {"shared_modes", p.shared_modes},
            {"sample_rate_hz", p.sample_rate_hz}};
}

std::string labels_csv(const FaultLabels& labels, const std::vector<std::string>& names) {
    std::string s = "time";
    for (const auto& n : names) s += "," + n;
    s += "\n";
    for (std::size_t t = 0; t < labels.length; ++t) {
        s += std::to_string(t);
        for (std::size_t c = 0; c < labels.n_channels; ++c) s += labels.at(t, c) ? ",1" : ",0";
        s += "\n";
    }
    return s;
}

std::string fixed(double v, int digits = 6) {
    std::ostringstream os;
    os << std::setprecision(digits) << v;
    return os.str();
}

}  // namespace

TimeSeriesDataset load_dataset(const DataSection& data) {
    if (data.path.empty()) throw ConfigError("data.path: required");
    if (!fs::exists(data.path)) throw ConfigError("data.path: file '" + data.path + "' not found");
    auto ds = load_csv(data.path, schema_of(data));
    return data.downsample > 1 ? downsample(ds, data.downsample) : ds;
}

DataSplits split_dataset(TimeSeriesDataset raw, const DataSection& data) {
    const std::size_t n = raw.length();
    const auto train_end = static_cast<std::size_t>(data.train_fraction * static_cast<double>(n));
    const auto val_end = static_cast<std::size_t>((data.train_fraction + data.validation_fraction) * static_cast<double>(n));
    const std::size_t min_part = data.T + 1;
    if (train_end < min_part || val_end - train_end < min_part || n - val_end < min_part) {
        throw ConfigError("data: " + std::to_string(n) + " samples are too few for the split with T = " +
                          std::to_string(data.T));
    }
    return {std::move(raw), {0, train_end}, {train_end, val_end}, {val_end, n}};
}

int cmd_synth(const RunConfig& config, const CommandArgs& args, std::ostream& out) {
    const fs::path dir(config.output_dir);
    if (!args.manifest.empty()) {
        const json manifest = read_json(args.manifest);
        if (!manifest.contains("plant")) throw ConfigError("manifest: missing 'plant'");
        const PlantConfig plant = plant_from_json(manifest["plant"]);
        const std::string name = manifest.value("csv", std::string(kSynthName));
        const std::string text = to_csv_string(synthesize_plant(plant));
        const fs::path csv = dir / name;
        write_text(csv, text);
        const std::string sha = git_blob_sha1(text);
        out << "regenerated " << csv.string() << " sha1 " << sha << "\n";
        if (manifest.contains("csv_sha1") && manifest["csv_sha1"] != sha) {
            throw NumericError("regenerated CSV does not match the manifest hash");
        }
        return kExitOk;
    }
    const std::string text = to_csv_string(synthesize_plant(config.synth));
    const fs::path csv = dir / kSynthName;
    write_text(csv, text);
    json manifest = run_header(config, "synth");
    manifest["plant"] = plant_to_json(config.synth);
    manifest["csv"] = kSynthName;
    manifest["csv_sha1"] = git_blob_sha1(text);
    write_json(dir / "manifest.json", manifest);
    out << "wrote " << csv.string() << " (" << config.synth.n_channels << " channels, " << config.synth.length
        << " samples)\n";
    return kExitOk;
}

int cmd_train(const RunConfig& config, const CommandArgs& args, std::ostream& out) {
    const auto splits = split_dataset(load_dataset(config.data), config.data);
    const auto& names = splits.raw.channel_names;
    TrainConfig tc = train_config(config, names);
    validate(tc);

    const Scaler scaler = Scaler::fit(splits.raw, splits.train);
    TimeSeriesDataset train = scaler.transform(splits.raw.slice(splits.train));
    const TimeSeriesDataset validation = scaler.transform(splits.raw.slice(splits.validation));
    train.channel_stats = compute_channel_stats(train, {0, train.length()});

    TrainResult result = train_model(train, validation, tc);

    Checkpoint ck{std::move(result.model), names, scaler, train.channel_stats, std::nullopt, config.echo, config.seed};
    const fs::path path = checkpoint_path(config, args);
    const std::string bytes = serialize_checkpoint(ck);
    write_text(path, bytes);
    result.report.checkpoint_path = path.string();

    json report = run_header(config, "train");
    report["checkpoint"] = path.string();
    report["checkpoint_sha1"] = git_blob_sha1(bytes);
    report["parameters"] = ck.model.parameter_count();
    report["report"] = to_json(result.report);
    write_json(fs::path(config.output_dir) / "train_report.json", report);

    out << "trained " << to_string(tc.formulation) << " model (" << ck.model.parameter_count() << " parameters, "
        << tc.epochs << " epochs)";
    if (!result.report.train_loss.empty()) {
        out << ": train loss " << fixed(result.report.train_loss.back()) << ", validation loss "
            << fixed(result.report.validation_loss.back());
    }
    out << "\nwrote " << path.string() << "\n";
    return kExitOk;
}

int cmd_calibrate(const RunConfig& config, const CommandArgs& args, std::ostream& out, std::ostream& err) {
    const fs::path path = checkpoint_path(config, args);
    Checkpoint ck = load_checkpoint(path);
    require_masked(ck, "calibrate");

    DataSection data = config.data;
    data.channels = ck.channel_names;
    const auto splits = split_dataset(load_dataset(data), config.data);
    check_compatible(ck, splits.raw);
    const TimeSeriesDataset validation = ck.scaler.transform(splits.raw.slice(splits.validation));
    const auto val_windows = windows(validation, ck.model.window_T(), 1);

    const FdiaEngine engine(ck.model, ck.train_stats, fdia_options(config.fdia));
    const Thresholds th =
        calibrate_thresholds(engine, val_windows, config.fdia.threshold_method, config.fdia.k, config.fdia.quantile);
    ck.thresholds = th;
    save_checkpoint(ck, path);

    json report = run_header(config, "calibrate");
    report["checkpoint"] = path.string();
    report["checkpoint_sha1"] = git_blob_sha1_file(path);
    report["thresholds"] = to_json(th);
    write_json(fs::path(config.output_dir) / "calibration.json", report);

    if (th.method == ThresholdMethod::mean_std && th.k < 1.0) {
        err << "warning: k = " << th.k << " < 1; expect many clean windows to be flagged\n";
    }
    out << "channel,threshold,residual_mean,residual_std\n";
    const auto& idx = ck.model.maskable().indices();
    for (std::size_t p = 0; p < idx.size(); ++p) {
        out << ck.channel_names[idx[p]] << "," << format_number(th.values[p]) << ","
            << format_number(th.residual_mean[p]) << "," << format_number(th.residual_std[p]) << "\n";
    }
    out << "calibrated on " << th.window_count << " validation windows; wrote " << path.string() << "\n";
    return kExitOk;
}

int cmd_detect(const RunConfig& config, const CommandArgs& args, std::ostream& out) {
    const fs::path path = checkpoint_path(config, args);
    const Checkpoint ck = load_checkpoint(path);
    require_masked(ck, "detect");
    const Thresholds& th = require_thresholds(ck);

    const TimeSeriesDataset segment = segment_for(config, args, {ck.channel_names, {}});
    check_compatible(ck, segment);
    const auto scenario = scenario_for(config, args, ck.channel_names);

    TimeSeriesDataset series = ck.scaler.transform(segment);
    std::optional<FaultLabels> labels;
    if (scenario) {
        auto faulted = inject_scenario(series, to_scaled_units(*scenario, ck.scaler), stds_of(ck.train_stats));
        series = std::move(faulted.series);
        labels = std::move(faulted.labels);
    }

    const FdiaEngine engine(ck.model, ck.train_stats, fdia_options(config.fdia));
    const StreamVerdict verdict = engine.stream(series, th);
    const std::size_t T = ck.model.window_T();

    json channels = json::array();
    for (std::size_t p = 0; p < verdict.channels.size(); ++p) {
        const std::size_t c = verdict.channels[p];
        std::size_t flagged = 0, pos = 0, pos_flagged = 0, neg = 0, neg_flagged = 0;
        std::vector<ScoredSample> scored;
        for (std::size_t s = 0; s < verdict.steps(); ++s) {
            const bool f = verdict.flagged(s, p);
            flagged += f;
            if (!labels) continue;
            const std::size_t t = verdict.times[s];
            const bool positive = labels->any_in(c, t - T, t + 1);
            (positive ? pos : neg) += 1;
            (positive ? pos_flagged : neg_flagged) += f;
            scored.push_back({verdict.residuals(s, p), positive ? 1 : 0});
        }
        json entry = {{"channel", ck.channel_names[c]},
                      {"threshold", th.values[p]},
                      {"flagged_steps", flagged},
                      {"onset", verdict.onsets[p] ? json(*verdict.onsets[p]) : json(nullptr)}};
        if (labels) {
            entry["fault_windows"] = pos;
            entry["flag_rate_fault_windows"] = pos ? json(double(pos_flagged) / double(pos)) : json(nullptr);
            entry["flag_rate_clean_windows"] = neg ? json(double(neg_flagged) / double(neg)) : json(nullptr);
            if (pos && neg) {
                entry["roc_auc"] = roc_auc(scored);
                entry["auprc"] = auprc(scored);
            }
        }
        channels.push_back(entry);
    }

    Report report;
    report.summary = run_header(config, "detect");
    report.summary["checkpoint_sha1"] = git_blob_sha1_file(path);
    report.summary["input"] = args.input.empty() ? json("test part of data.path") : json(args.input);
    report.summary["scenario"] = scenario ? to_json(*scenario, ck.channel_names) : json(nullptr);
    report.summary["steps"] = verdict.steps();
    report.summary["alarm_steps"] = verdict.alarm_count();
    report.summary["channels"] = channels;
    report.tables.emplace_back("residuals.csv", residual_table(verdict, ck.channel_names));

    TimeSeriesDataset accommodated = series;
    accommodated.samples = verdict.accommodated;
    const fs::path dir = fs::path(config.output_dir) / "detect";
    write_report(report, dir);
    write_text(dir / "accommodated.csv", to_csv_string(ck.scaler.inverse(accommodated)));

    for (const auto& ch : channels) {
        if (!ch["onset"].is_null()) out << "onset " << ch["channel"].get<std::string>() << " at " << ch["onset"] << "\n";
    }
    out << verdict.steps() << " steps, " << verdict.alarm_count() << " alarm steps; wrote " << dir.string() << "\n";
    return verdict.any_alarm() ? kExitAlarm : kExitOk;
}

namespace {

int bench_latency(const RunConfig& config, const CommandArgs& args, std::ostream& out) {
    LatencyResult r;
    json model_info;
    if (!args.checkpoint.empty()) {
        const Checkpoint ck = load_checkpoint(args.checkpoint);
        require_masked(ck, "bench");
        const FdiaEngine engine(ck.model, ck.train_stats, fdia_options(config.fdia));
        r = latency_benchmark(engine, config.bench.repetitions, config.bench.budget_ms, config.seed);
        model_info = {{"source", args.checkpoint}, {"n_maskable", ck.model.n_maskable()}, {"T", ck.model.window_T()}};
    } else {
        const std::size_t n = config.bench.latency_channels;
        SequenceModel model = build_masked_model(n, n, config.bench.latency_T, config.model.hidden);
        Rng rng(config.seed);
        model.initialize(rng);
        const std::vector<ChannelStats> stats(n, ChannelStats{0.0, 1.0, 0.5, 0.25});
        const FdiaEngine engine(std::move(model), stats, fdia_options(config.fdia));
        r = latency_benchmark(engine, config.bench.repetitions, config.bench.budget_ms, config.seed);
        model_info = {{"source", "reference"}, {"n_maskable", n}, {"T", config.bench.latency_T},
                      {"hidden", config.model.hidden}};
    }
    Report report;
    report.summary = run_header(config, "bench");
    report.summary["mode"] = "latency";
    report.summary["model"] = model_info;
    report.summary["latency"] = to_json(r);
    write_report(report, fs::path(config.output_dir) / "latency");
    out << "latency mean " << fixed(r.mean_ms, 4) << " ms, p95 " << fixed(r.p95_ms, 4) << " ms over " << r.repetitions
        << " runs, " << r.passes_count << " passes per step; budget " << r.budget_ms << " ms: "
        << (r.within_budget ? "PASS" : "FAIL") << "\n";
    return kExitOk;
}

int bench_detection(const RunConfig& config, const CommandArgs& args, std::ostream& out) {
    std::vector<std::pair<std::string, Checkpoint>> loaded;
    for (const auto& spec : args.models) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size()) {
            throw UsageError("--model expects name=checkpoint, got '" + spec + "'");
        }
        loaded.emplace_back(spec.substr(0, eq), load_checkpoint(spec.substr(eq + 1)));
    }
    if (loaded.empty()) {
        Checkpoint ck = load_checkpoint(checkpoint_path(config, args));
        const std::string name = to_string(ck.model.formulation());
        loaded.emplace_back(name, std::move(ck));
    }
    const Checkpoint& first = loaded.front().second;
    const auto scenario = scenario_for(config, args, first.channel_names);
    if (!scenario) throw UsageError("bench --mode detection needs a scenario (--scenario or the scenario section)");

    const TimeSeriesDataset segment = segment_for(config, args, {first.channel_names, {}});
    std::vector<MethodUnderTest> methods;
    for (const auto& [name, ck] : loaded) {
        check_compatible(ck, segment);
        methods.push_back({name, &ck.model});
    }
    const TimeSeriesDataset scaled = first.scaler.transform(segment);
    const auto results = detection_benchmark(methods, scaled, to_scaled_units(*scenario, first.scaler), first.train_stats,
                                             fdia_options(config.fdia));

    Report report;
    report.summary = run_header(config, "bench");
    report.summary["mode"] = "detection";
    report.summary["scenario"] = to_json(*scenario, first.channel_names);
    json rows = json::array();
    for (const auto& r : results) {
        json row = to_json(r);
        row["channel"] = first.channel_names[r.channel];
        rows.push_back(row);
        const std::string stem = r.method + "_" + first.channel_names[r.channel];
        report.tables.emplace_back("roc_" + stem + ".csv", roc_table(r.samples));
        report.tables.emplace_back("pr_" + stem + ".csv", pr_table(r.samples));
        out << r.method << " " << first.channel_names[r.channel] << ": roc_auc " << fixed(r.roc_auc, 4) << ", auprc "
            << fixed(r.auprc, 4) << "\n";
    }
    report.summary["results"] = rows;
    json sums = json::object();
    for (const auto& [name, ck] : loaded) sums[name] = git_blob_sha1(serialize_checkpoint(ck));
    report.summary["checkpoint_sha1"] = sums;
    write_report(report, fs::path(config.output_dir) / "detection");
    return kExitOk;
}

int bench_accommodation(const RunConfig& config, const CommandArgs& args, std::ostream& out) {
    const fs::path path = checkpoint_path(config, args);
    const Checkpoint ck = load_checkpoint(path);
    require_masked(ck, "bench");
    const Thresholds& th = require_thresholds(ck);
    const auto scenario = scenario_for(config, args, ck.channel_names);
    if (!scenario) throw UsageError("bench --mode accommodation needs a scenario (--scenario or the scenario section)");
    const TimeSeriesDataset segment = segment_for(config, args, {ck.channel_names, {}});
    check_compatible(ck, segment);

    const auto pipeline =
        DownstreamPipeline::random(segment.n_channels(), config.bench.pipeline_outputs, derive_seed(config.seed, 11));
    const FdiaEngine engine(ck.model, ck.train_stats, fdia_options(config.fdia));
    const AccommodationResult r = accommodation_benchmark(engine, th, pipeline, segment, ck.scaler, *scenario,
                                                          config.bench.truth_noise_std, derive_seed(config.seed, 12));

    Report report;
    report.summary = run_header(config, "bench");
    report.summary["mode"] = "accommodation";
    report.summary["checkpoint_sha1"] = git_blob_sha1_file(path);
    report.summary["scenario"] = to_json(*scenario, ck.channel_names);
    report.summary["accommodation"] = to_json(r);
    CsvTable table{{"output", "mse_no_fault", "mse_fault_no_fdia", "mse_fault_with_fdia"}, {}};
    out << "output,mse_no_fault,mse_fault_no_fdia,mse_fault_with_fdia,delta_no_fdia_pct,delta_with_fdia_pct\n";
    for (const auto& row : r.rows) {
        const double cells[] = {double(row.output), row.mse_no_fault, row.mse_fault_no_fdia, row.mse_fault_with_fdia};
        table.add_row(cells);
        out << row.output << "," << fixed(row.mse_no_fault) << "," << fixed(row.mse_fault_no_fdia) << ","
            << fixed(row.mse_fault_with_fdia) << "," << fixed(percent_change(row.mse_fault_no_fdia, row.mse_no_fault), 4)
            << "," << fixed(percent_change(row.mse_fault_with_fdia, row.mse_no_fault), 4) << "\n";
    }
    report.tables.emplace_back("accommodation.csv", std::move(table));
    write_report(report, fs::path(config.output_dir) / "accommodation");
    return kExitOk;
}

}  // namespace

int cmd_bench(const RunConfig& config, const CommandArgs& args, std::ostream& out) {
    if (args.mode == "latency") return bench_latency(config, args, out);
    if (args.mode == "detection") return bench_detection(config, args, out);
    if (args.mode == "accommodation") return bench_accommodation(config, args, out);
    throw UsageError("--mode must be latency, detection or accommodation");
}

int cmd_inject(const RunConfig& config, const CommandArgs& args, std::ostream& out) {
    const CsvSchema schema = schema_of(config.data);
    TimeSeriesDataset segment;
    std::vector<double> raw_std;
    if (!config.data.path.empty()) {
        const auto splits = split_dataset(load_dataset(config.data), config.data);
        raw_std = stds_of(compute_channel_stats(splits.raw, splits.train));
        segment = args.input.empty() ? splits.raw.slice(splits.test) : segment_for(config, args, schema);
    } else {
        if (args.input.empty()) throw ConfigError("data.path: required (or pass --input)");
        segment = segment_for(config, args, schema);
        raw_std = stds_of(compute_channel_stats(segment, {0, segment.length()}));
    }
    if (raw_std.size() != segment.n_channels()) throw DimensionError("inject: input channels differ from data.path");
    const auto scenario = scenario_for(config, args, segment.channel_names);
    if (!scenario) throw UsageError("inject needs a scenario (--scenario or the scenario section)");

    const FaultedSeries faulted = inject_scenario(segment, *scenario, raw_std);
    const fs::path dir = fs::path(config.output_dir) / "inject";
    const std::string csv = to_csv_string(faulted.series);
    write_text(dir / "faulted.csv", csv);
    write_text(dir / "labels.csv", labels_csv(faulted.labels, segment.channel_names));
    json summary = run_header(config, "inject");
    summary["scenario"] = to_json(*scenario, segment.channel_names);
    summary["channel_std"] = raw_std;
    summary["faulted_sha1"] = git_blob_sha1(csv);
    write_json(dir / "summary.json", summary);
    out << "wrote " << (dir / "faulted.csv").string() << " and labels.csv (" << faulted.series.length()
        << " samples)\n";
    return kExitOk;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Masked-model sensor fault detection, isolation and accommodation", "maskfdia"};
    std::string config_path;
    std::uint64_t seed_flag = 0;
    CommandArgs args;
    app.add_option("--config", config_path, "JSON config file");
    auto* seed_opt = app.add_option("--seed", seed_flag, "Run seed (overrides MASKFDIA_SEED and the config)");
    app.add_option("--checkpoint", args.checkpoint, "Checkpoint path (default <output.dir>/checkpoint.mfck)");
    app.add_option("--input", args.input, "Raw CSV to process instead of the test part of data.path");
    app.add_option("--scenario", args.scenario, "Fault scenario JSON");
    app.add_option("--mode", args.mode, "bench mode: latency, detection or accommodation");
    app.add_option("--model", args.models, "bench detection: name=checkpoint, repeatable");
    app.add_option("--manifest", args.manifest, "synth: regenerate the CSV from a manifest");
    app.allow_extras();
    app.require_subcommand(1, 1);
    app.footer("Any config field can be overridden as --section.field=value, e.g. --train.epochs=30.");

    const std::vector<std::pair<std::string, std::string>> commands = {
        {"synth", "Generate the synthetic plant dataset and its manifest"},
        {"train", "Train a model and write a checkpoint"},
        {"calibrate", "Fit residual thresholds on the validation part and store them in the checkpoint"},
        {"detect", "Stream FDIA over data; exit 3 if an alarm is raised"},
        {"bench", "Latency, detection or accommodation benchmark"},
        {"inject", "Write a faulted copy of the data and its labels"}};
    for (const auto& [name, help] : commands) app.add_subcommand(name, help)->allow_extras()->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }
    CLI::App* sub = app.get_subcommands().front();

    try {
        std::vector<std::string> extras = app.remaining();
        for (auto& s : sub->remaining()) extras.push_back(s);
        std::vector<std::pair<std::string, std::string>> overrides;
        for (std::size_t i = 0; i < extras.size(); ++i) {
            const std::string& tok = extras[i];
            if (tok.rfind("--", 0) != 0 || tok.size() < 3) throw UsageError("unexpected argument '" + tok + "'");
            const auto eq = tok.find('=');
            if (eq != std::string::npos) {
                overrides.emplace_back(tok.substr(2, eq - 2), tok.substr(eq + 1));
            } else {
                if (i + 1 >= extras.size()) throw UsageError("override '" + tok + "' needs a value");
                overrides.emplace_back(tok.substr(2), extras[++i]);
            }
        }

        json cfg = config_path.empty() ? json::object() : read_config_file(config_path);
        for (const auto& [key, value] : overrides) apply_override(cfg, key, value);
        const std::optional<std::uint64_t> seed = seed_opt->count() ? std::optional(seed_flag) : seed_from_environment();
        const RunConfig config = resolve_config(cfg, seed);

        const std::string& name = sub->get_name();
        if (name == "synth") return cmd_synth(config, args, out);
        if (name == "train") return cmd_train(config, args, out);
        if (name == "calibrate") return cmd_calibrate(config, args, out, err);
        if (name == "detect") return cmd_detect(config, args, out);
        if (name == "bench") return cmd_bench(config, args, out);
        return cmd_inject(config, args, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const IngestionError& e) {
        err << "data error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const CheckpointError& e) {
        err << "checkpoint error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const CalibrationError& e) {
        err << "calibration error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const DimensionError& e) {
        err << "dimension error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const NumericError& e) {
        err << "numeric error: " << e.what() << "\n";
        return kExitRuntime;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

}  // namespace maskfdia::cli
