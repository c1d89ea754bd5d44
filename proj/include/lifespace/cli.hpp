#pragma once

#include "lifespace/config.hpp"

#include <atomic>
#include <map>
#include <optional>
#include <ostream>
#include <string>

namespace lifespace {

struct CliOptions {
    std::optional<std::string> config_path;
    std::optional<std::string> map_path;
    std::optional<std::string> roster_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> tick_ms;
    std::optional<std::string> provider;
    std::uint64_t ticks = 100;
    std::optional<std::string> out_path;
    std::optional<std::string> resume_path;
    std::optional<std::string> snapshot_on_exit;
    std::string listen = "127.0.0.1:8080";
};

/// Config file (if any) overlaid with flags.
AppConfig resolve_config(const CliOptions& options);

struct RunSummary {
    std::uint64_t first_tick = 0;
    std::uint64_t last_tick = 0;
    std::uint64_t events = 0;
    std::map<std::string, std::uint64_t> by_type;
    std::uint64_t conversations = 0;
    std::uint64_t compressions = 0;
    std::string digest;
};

/// Exit codes: 0 success, 1 replay mismatch, 2 bad input.
int cmd_run(const CliOptions& options, std::ostream& out, std::ostream& err, RunSummary* summary = nullptr);
int cmd_replay(const std::string& log_path, std::ostream& out, std::ostream& err);
/// Blocks until `stop` becomes true.
int cmd_serve(const CliOptions& options, std::ostream& out, std::ostream& err, const std::atomic<bool>& stop);

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err, const std::atomic<bool>& stop);

}  // namespace lifespace
