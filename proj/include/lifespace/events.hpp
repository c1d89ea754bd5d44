#pragma once

#include "lifespace/agent.hpp"
#include "lifespace/memory.hpp"
#include "lifespace/world.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace lifespace {

/// A memory item carried by an event; the store assigns seq on commit.
struct MemoryDraft {
    MemoryKind kind = MemoryKind::activity;
    std::string text;
    std::vector<AgentId> participants;
    std::optional<SceneId> scene;

    Track track() const { return track_of(kind); }
    friend bool operator==(const MemoryDraft&, const MemoryDraft&) = default;
};

namespace ev {

struct Planned {
    AgentId agent;
    SceneId destination;
    std::string activity;
    std::string rationale;
    std::vector<Position> path;
    bool user_influenced = false;
    std::optional<MemoryDraft> memory;  // movement memory, absent for an empty path
    friend bool operator==(const Planned&, const Planned&) = default;
};

struct Moved {
    AgentId agent;
    Position from;
    Position to;
    friend bool operator==(const Moved&, const Moved&) = default;
};

struct Arrived {
    AgentId agent;
    SceneId scene;
    Position position;
    MemoryDraft memory;
    friend bool operator==(const Arrived&, const Arrived&) = default;
};

struct ActivityStarted {
    AgentId agent;
    std::string activity;
    SceneId scene;
    int duration = 1;
    MemoryDraft memory;
    friend bool operator==(const ActivityStarted&, const ActivityStarted&) = default;
};

struct ConversationStarted {
    ConversationId conversation = 0;
    AgentId initiator;
    AgentId partner;
    int distance = 0;
    friend bool operator==(const ConversationStarted&, const ConversationStarted&) = default;
};

struct DialogueTurnSpoken {
    ConversationId conversation = 0;
    AgentId speaker;
    std::string text;
    bool terminate = false;
    friend bool operator==(const DialogueTurnSpoken&, const DialogueTurnSpoken&) = default;
};

struct ConversationEnded {
    ConversationId conversation = 0;
    AgentId initiator;
    AgentId partner;
    std::string reason;  // "finished", "max_turns", "preempted"
    std::size_t turns = 0;
    MemoryDraft initiator_memory;
    MemoryDraft partner_memory;
    friend bool operator==(const ConversationEnded&, const ConversationEnded&) = default;
};

struct MemoryCompressed {
    AgentId agent;
    Track track = Track::life_space;
    std::uint64_t first_seq = 0;
    std::uint64_t last_seq = 0;
    std::size_t count = 0;
    std::string summary;
    friend bool operator==(const MemoryCompressed&, const MemoryCompressed&) = default;
};

struct UserExchange {
    AgentId agent;
    std::string session;
    std::string user_text;
    std::string reply;
    MemoryDraft memory;
    friend bool operator==(const UserExchange&, const UserExchange&) = default;
};

struct PlanRepaired {
    AgentId agent;
    std::string requested;
    SceneId repaired_to;
    friend bool operator==(const PlanRepaired&, const PlanRepaired&) = default;
};

}  // namespace ev

using EventPayload = std::variant<ev::Planned, ev::Moved, ev::Arrived, ev::ActivityStarted, ev::ConversationStarted,
                                  ev::DialogueTurnSpoken, ev::ConversationEnded, ev::MemoryCompressed,
                                  ev::UserExchange, ev::PlanRepaired>;

struct SimEvent {
    std::uint64_t seq = 0;
    std::uint64_t tick = 0;
    EventPayload payload;

    std::string_view type() const;
    std::vector<AgentId> agents() const;

    template <typename T>
    const T* as() const {
        return std::get_if<T>(&payload);
    }

    friend bool operator==(const SimEvent&, const SimEvent&) = default;
};

/// One JSON Lines record: {"seq","tick","type","agents","data"} in that order.
std::string to_json_line(const SimEvent& event);
/// Throws CorruptLogError.
SimEvent parse_event_line(std::string_view line);

}  // namespace lifespace
