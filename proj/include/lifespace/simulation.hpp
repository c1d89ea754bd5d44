#pragma once

#include "lifespace/agent.hpp"
#include "lifespace/cognition.hpp"
#include "lifespace/events.hpp"
#include "lifespace/memory.hpp"
#include "lifespace/world.hpp"

#include <cstdint>
#include <deque>
#include <map>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace lifespace {

struct SimConfig {
    std::uint64_t seed = 42;
    int tick_ms = 1000;  // wall-clock pacing; 0 runs as fast as possible
    int proximity_radius = 2;
    int conversation_cooldown = 20;
    int activity_duration = 15;
    std::size_t memory_threshold = kDefaultMemoryThreshold;
    std::size_t max_turns = kDefaultMaxTurns;
    bool chat_holds_agent = false;  // agents with an open chat session skip autonomous planning

    friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

/// Throws ValidationError naming the offending field.
void validate(const SimConfig& config);

struct Conversation {
    ConversationId id = 0;
    AgentId initiator;
    AgentId partner;
    std::vector<DialogueTurn> turns;
    std::uint64_t started_tick = 0;

    friend bool operator==(const Conversation&, const Conversation&) = default;
};

struct PendingMemory {
    AgentId agent;
    std::uint64_t tick = 0;
    MemoryDraft draft;

    friend bool operator==(const PendingMemory&, const PendingMemory&) = default;
};

struct SimState {
    std::uint64_t tick = 0;
    std::uint64_t seed = 0;
    Roster roster;
    std::map<AgentId, MemoryStore> memories;
    std::map<ConversationId, Conversation> conversations;  // open conversations only
    std::vector<PendingMemory> pending;                    // committed at the end of each tick
    std::uint64_t next_event_seq = 1;
    ConversationId next_conversation = 1;

    friend bool operator==(const SimState&, const SimState&) = default;
};

SimState make_initial_state(Roster roster, const SimConfig& config);

/// The single state-transition function shared by live ticks and log replay.
/// Throws CorruptLogError when the event does not fit the state.
void apply_event(SimState& state, const SimEvent& event, const WorldMap& map, const SimConfig& config);

/// Commits pending memories in arrival order.
void commit_pending(SimState& state);

/// End-of-tick bookkeeping: commit memories, count down cooldowns and activities.
void finish_tick(SimState& state);

/// Manhattan distance at which two eligible agents start talking, and who pairs with whom.
struct PairCandidate {
    AgentId a;  // smaller id
    AgentId b;
    int distance = 0;
};
std::vector<PairCandidate> select_conversation_pairs(const Roster& roster, int radius);

/// Text templates for memory items.
MemoryDraft user_exchange_memory(const AgentProfile& agent, std::string_view user_text, std::string_view reply);

class Simulation {
public:
    Simulation(WorldMap map, Roster roster, SimConfig config, Providers providers);
    /// Resumes from a saved state.
    Simulation(WorldMap map, SimState state, SimConfig config, Providers providers);

    /// One pass of plan -> move -> social -> memory. Always completes.
    std::vector<SimEvent> tick();
    /// `ticks` sequential ticks, paced by tick_ms.
    std::vector<SimEvent> run(std::uint64_t ticks);

    /// Queues a user-agent exchange; committed at the next tick. Throws
    /// TrackMismatchError or UnknownAgentError.
    void inject_user_exchange(const AgentId& agent, const MemoryEvent& exchange, std::string session = {},
                              std::string user_text = {}, std::string reply = {});
    /// Queues an immediate replan applied at the start of the next tick. Throws
    /// UnknownAgentError or UnknownSceneError.
    void request_replan(const AgentId& agent, PlanDecision decision);

    void set_chat_hold(const AgentId& agent, bool held);

    const SimState& state() const { return state_; }
    const WorldMap& map() const { return map_; }
    const SimConfig& config() const { return config_; }
    const Providers& providers() const { return providers_; }
    ContextBundle context(const AgentId& agent) const;
    std::size_t inbox_size() const { return inbox_.size(); }

    /// Number of provider errors swallowed so far (plans, summaries).
    std::size_t degraded_calls() const { return degraded_; }

private:
    struct ExchangeInput {
        AgentId agent;
        MemoryDraft memory;
        std::string session;
        std::string user_text;
        std::string reply;
    };
    struct ReplanInput {
        AgentId agent;
        PlanDecision decision;
    };
    using Input = std::variant<ExchangeInput, ReplanInput>;

    void emit(EventPayload payload, bool already_applied = false);
    void drain_inbox();
    void plan_idle_agents();
    void start_plan(const AgentId& agent, const PlanDecision& decision, bool user_influenced);
    void arrive(const AgentId& agent);
    void move_agents();
    void social_stage();
    void close_conversation(ConversationId id, std::string reason);
    void memory_stage();

    WorldMap map_;
    SimConfig config_;
    Providers providers_;
    SimState state_;
    std::deque<Input> inbox_;
    std::set<AgentId> held_;
    std::vector<SimEvent> current_;
    std::size_t degraded_ = 0;
};

}  // namespace lifespace
