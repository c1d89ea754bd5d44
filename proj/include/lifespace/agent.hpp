#pragma once

#include "lifespace/world.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace lifespace {

using AgentId = std::string;
using ConversationId = std::uint64_t;

struct AgentProfile {
    AgentId id;
    std::string name;
    std::string occupation;
    std::string personality;
    SceneId home_scene;
    std::string bio;
    bool primary = false;  // the user-facing persona

    friend bool operator==(const AgentProfile&, const AgentProfile&) = default;
};

enum class AgentMode { idle, moving, acting, conversing };

std::string_view to_string(AgentMode m);
std::optional<AgentMode> parse_agent_mode(std::string_view s);

struct AgentState {
    AgentId id;
    Position position;
    AgentMode mode = AgentMode::idle;

    std::optional<Path> path;  // present iff moving
    std::size_t path_cursor = 0;
    std::optional<SceneId> destination;       // scene of the plan being walked
    std::optional<std::string> planned_activity;

    std::optional<std::string> activity;  // present iff acting
    int activity_ticks_left = 0;

    std::optional<ConversationId> conversation;  // present iff conversing
    int cooldown = 0;

    std::size_t remaining_steps() const { return path ? path->size() - path_cursor : 0; }

    friend bool operator==(const AgentState&, const AgentState&) = default;
};

/// Checks the mode/field coherence rules; returns a description of the first violation.
std::optional<std::string> coherence_violation(const AgentState& s);

struct Agent {
    AgentProfile profile;
    AgentState state;

    friend bool operator==(const Agent&, const Agent&) = default;
};

/// Agents kept sorted by id; exactly one is primary.
class Roster {
public:
    Roster() = default;
    explicit Roster(std::vector<Agent> agents);

    const std::vector<Agent>& agents() const { return agents_; }
    std::vector<Agent>& agents() { return agents_; }
    std::size_t size() const { return agents_.size(); }

    const Agent* find(std::string_view id) const;
    Agent* find(std::string_view id);
    const Agent& at(std::string_view id) const;  // throws UnknownAgentError
    Agent& at(std::string_view id);
    const Agent& primary() const;

    friend bool operator==(const Roster&, const Roster&) = default;

private:
    std::vector<Agent> agents_;
};

/// Five distinct personas; the primary is the restaurant chef.
Roster default_roster(const WorldMap& map);

/// Built from profiles; agents spawn idle at their home scene anchors.
Roster make_roster(std::vector<AgentProfile> profiles, const WorldMap& map);

std::vector<AgentProfile> default_profiles();
std::vector<AgentProfile> parse_roster_json(std::string_view text);
std::vector<AgentProfile> load_roster_file(const std::string& path);
std::string roster_to_json(const std::vector<AgentProfile>& profiles);

/// idle|acting -> acting with `activity`.
AgentState set_activity(AgentState state, std::string activity);

struct StepResult {
    AgentState state;
    bool arrived = false;
};

/// Moves one tile along the current path.
StepResult advance_one_step(AgentState state);

/// Starts walking `path` toward `destination`. An empty path leaves the agent idle.
AgentState begin_path(AgentState state, Path path, SceneId destination, std::string activity);

AgentState begin_conversation(AgentState state, ConversationId id);
AgentState end_conversation(AgentState state, int cooldown);

}  // namespace lifespace
