#pragma once

#include "config.hpp"

#include "maskfdia/data.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace maskfdia::cli {

/// Command-specific flags, shared by every subcommand.
struct CommandArgs {
    std::string checkpoint;   // default <output.dir>/checkpoint.mfck
    std::string input;        // raw CSV to run on instead of the test part of data.path
    std::string scenario;     // scenario JSON, overrides the config's scenario section
    std::string mode;         // bench: latency | detection | accommodation
    std::vector<std::string> models;  // bench detection: name=checkpoint
    std::string manifest;     // synth: regenerate from a manifest
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitAlarm = 3;
inline constexpr int kExitRuntime = 4;

/// Chronological train / validation / test parts of one raw series.
struct DataSplits {
    TimeSeriesDataset raw;
    IndexRange train;
    IndexRange validation;
    IndexRange test;
};

TimeSeriesDataset load_dataset(const DataSection& data);
DataSplits split_dataset(TimeSeriesDataset raw, const DataSection& data);

int cmd_synth(const RunConfig& config, const CommandArgs& args, std::ostream& out);
int cmd_train(const RunConfig& config, const CommandArgs& args, std::ostream& out);
int cmd_calibrate(const RunConfig& config, const CommandArgs& args, std::ostream& out, std::ostream& err);
int cmd_detect(const RunConfig& config, const CommandArgs& args, std::ostream& out);
int cmd_bench(const RunConfig& config, const CommandArgs& args, std::ostream& out);
int cmd_inject(const RunConfig& config, const CommandArgs& args, std::ostream& out);

/// Full command line entry point. Returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace maskfdia::cli
