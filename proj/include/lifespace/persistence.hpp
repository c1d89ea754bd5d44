#pragma once

#include "lifespace/events.hpp"
#include "lifespace/llm_provider.hpp"
#include "lifespace/simulation.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace lifespace {

/// Stable hash over the canonical JSON form of the state.
std::string state_digest(const SimState& state);

/// Canonical (key-sorted) JSON of the full state.
std::string state_to_json(const SimState& state);
/// Throws CorruptSnapshotError naming the offending field.
SimState state_from_json(std::string_view text);

std::string config_to_json(const SimConfig& config);
SimConfig config_from_json(std::string_view text);

struct Snapshot {
    WorldMap map;
    SimConfig config;
    SimState state;
};

std::string snapshot_to_json(const WorldMap& map, const SimConfig& config, const SimState& state);
Snapshot snapshot_from_json(std::string_view text);

/// Writes atomically (temp file + rename).
void save_snapshot(const std::string& path, const WorldMap& map, const SimConfig& config, const SimState& state);
Snapshot load_snapshot(const std::string& path);

/// JSON Lines event log: a header record carrying the initial snapshot, one
/// record per event, and a trailer record carrying the final state digest.
class EventLogWriter {
public:
    explicit EventLogWriter(std::ostream& out) : out_(out) {}

    void header(const WorldMap& map, const SimConfig& config, const SimState& initial);
    void event(const SimEvent& event);
    void events(const std::vector<SimEvent>& events);
    /// Records the state digest at the end of a tick; written with the trailer.
    void checkpoint(const SimState& state);
    void trailer(const SimState& final_state);

private:
    struct Checkpoint {
        std::uint64_t tick;
        std::uint64_t seq;
        std::string digest;
    };
    std::ostream& out_;
    std::vector<Checkpoint> checkpoints_;
    std::uint64_t last_seq_ = 0;
    std::uint64_t count_ = 0;
};

struct ReplayReport {
    bool match = false;
    std::uint64_t events = 0;
    std::optional<std::uint64_t> first_divergent_seq;
    std::string expected_digest;  // from the trailer
    std::string actual_digest;    // re-derived
    std::string detail;
};

/// Rebuilds the final state from the header snapshot plus every event and compares
/// digests. Throws CorruptLogError (with line number) for unreadable logs.
ReplayReport replay_log(std::istream& in);
ReplayReport replay_log_file(const std::string& path);

/// Advances `state` through ticks up to `tick` (finishing each open tick).
class ReplayCursor {
public:
    ReplayCursor(const WorldMap& map, const SimConfig& config, SimState state)
        : map_(map), config_(config), state_(std::move(state)) {}

    void apply(const SimEvent& event);
    void finish_through(std::uint64_t tick);
    const SimState& state() const { return state_; }

private:
    void advance_to(std::uint64_t tick);

    const WorldMap& map_;
    const SimConfig& config_;
    SimState state_;
    bool tick_open_ = false;
};

}  // namespace lifespace
