#pragma once

#include "lifespace/chat.hpp"
#include "lifespace/errors.hpp"
#include "lifespace/persistence.hpp"
#include "lifespace/simulation.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

namespace lifespace {

enum class ViewMode { observable, unobservable };

std::string_view to_string(ViewMode m);
std::optional<ViewMode> parse_view_mode(std::string_view s);

/// Unobservable mode shows only user exchanges; observable shows everything.
bool visible_in(ViewMode mode, const SimEvent& event);

struct StreamEnvelope {
    SimEvent event;
    bool visible = false;
};

/// {"type":"event","visible":...,"event":{...}}
std::string envelope_json(const StreamEnvelope& envelope);

struct ModeChange {
    std::uint64_t tick = 0;
    std::uint64_t after_seq = 0;
    ViewMode mode = ViewMode::observable;
};

class Subscription;

/// Runs one Simulation as the single writer. Readers see immutable snapshots
/// published after every tick; chat and replan inputs queue on an inbox that is
/// drained right before each tick.
class Engine {
public:
    Engine(WorldMap map, SimState state, SimConfig config, Providers providers);
    ~Engine();

    Engine(const Engine&) = delete;
    Engine& operator=(const Engine&) = delete;

    /// With `background`, ticks on a thread paced by tick_ms; otherwise only step() ticks.
    void start(bool background = true);
    void stop();
    bool started() const { return started_; }

    /// Runs `ticks` ticks on the caller's thread. Only valid without a background loop.
    void step(std::uint64_t ticks = 1);

    /// Also append the JSON Lines event log (header now, trailer on stop).
    void attach_log(std::ostream& out);

    /// Throws EngineNotStartedError before start().
    std::shared_ptr<const SimState> snapshot() const;
    std::string state_json() const;

    ViewMode mode() const { return mode_.load(); }
    ViewMode set_mode(ViewMode mode);
    std::vector<ModeChange> mode_changes() const;

    SimHandle& handle();
    SessionRegistry& sessions() { return sessions_; }

    /// Events with seq > since, at most `max` of them.
    std::vector<SimEvent> events_after(std::uint64_t since, std::size_t max = SIZE_MAX) const;
    /// Waits until an event with seq > since exists or the timeout passes.
    bool wait_for_events(std::uint64_t since, std::chrono::milliseconds timeout) const;
    std::uint64_t last_seq() const;
    /// Incremented by load_snapshot; subscriptions from an older epoch are dropped.
    std::uint64_t epoch() const;

    std::unique_ptr<Subscription> subscribe(std::uint64_t since, std::size_t max_lag = 100000);

    void save_snapshot(const std::string& path);
    void load_snapshot(const std::string& path);

    const WorldMap& map() const { return map_; }
    const SimConfig& config() const { return config_; }

private:
    class Handle;
    friend class Handle;

    void enqueue(std::function<void(Simulation&)> input);
    void tick_once();
    void loop();
    void publish(std::vector<SimEvent> events);

    WorldMap map_;
    SimConfig config_;
    Providers providers_;

    mutable std::mutex sim_mutex_;  // guards sim_
    std::unique_ptr<Simulation> sim_;

    mutable std::mutex inbox_mutex_;
    std::deque<std::function<void(Simulation&)>> inbox_;

    mutable std::mutex published_mutex_;
    mutable std::condition_variable published_cv_;
    std::shared_ptr<const SimState> published_;
    std::vector<SimEvent> log_;
    std::uint64_t log_base_ = 0;  // seq preceding log_.front()
    std::uint64_t epoch_ = 0;

    std::atomic<ViewMode> mode_{ViewMode::observable};
    mutable std::mutex admin_mutex_;
    std::vector<ModeChange> mode_changes_;

    std::ostream* log_out_ = nullptr;
    std::optional<EventLogWriter> log_writer_;

    std::unique_ptr<Handle> handle_;
    SessionRegistry sessions_;

    std::atomic<bool> started_{false};
    std::atomic<bool> background_{false};
    std::atomic<bool> stopping_{false};
    std::thread thread_;
};

class StreamOverflowError : public Error {
public:
    using Error::Error;
};

/// Exactly-once, in-order reader over the engine's event log starting after
/// `since`. Visibility is decided by the engine's mode at delivery time.
class Subscription {
public:
    Subscription(Engine& engine, std::uint64_t since, std::size_t max_lag);

    /// Frames ready now (JSON text): event envelopes plus, in unobservable mode,
    /// one expression frame per delivered tick. Throws StreamOverflowError when
    /// the reader fell more than max_lag events behind, and Error when the
    /// engine reloaded a snapshot underneath it.
    std::vector<std::string> poll(std::size_t max_batch = 256);
    std::vector<std::string> wait(std::chrono::milliseconds timeout, std::size_t max_batch = 256);

    /// Same as poll but returns envelopes only (no heartbeat frames).
    std::vector<StreamEnvelope> poll_envelopes(std::size_t max_batch = 256);

    std::uint64_t cursor() const { return cursor_; }

private:
    Engine& engine_;
    std::uint64_t cursor_;
    std::size_t max_lag_;
    std::uint64_t epoch_;
};

/// {"type":"expression","tick":t,"agents":{"<id>":"<mode>",...}}
std::string expression_json(const SimState& state);

}  // namespace lifespace
