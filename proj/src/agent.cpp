#include "lifespace/agent.hpp"

#include "lifespace/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace lifespace {

using nlohmann::json;

std::string_view to_string(AgentMode m) {
    switch (m) {
        case AgentMode::idle: return "idle";
        case AgentMode::moving: return "moving";
        case AgentMode::acting: return "acting";
        case AgentMode::conversing: return "conversing";
    }
    return "idle";
}

std::optional<AgentMode> parse_agent_mode(std::string_view s) {
    if (s == "idle") return AgentMode::idle;
    if (s == "moving") return AgentMode::moving;
    if (s == "acting") return AgentMode::acting;
    if (s == "conversing") return AgentMode::conversing;
    return std::nullopt;
}

std::optional<std::string> coherence_violation(const AgentState& s) {
    const bool moving_fields = s.path.has_value() && s.path_cursor < s.path->size();
    if ((s.mode == AgentMode::moving) != moving_fields) return "moving <=> path with cursor before end";
    if ((s.mode == AgentMode::acting) != s.activity.has_value()) return "acting <=> activity present";
    if ((s.mode == AgentMode::conversing) != s.conversation.has_value()) return "conversing <=> conversation present";
    if (s.cooldown < 0) return "negative cooldown";
    if (s.mode == AgentMode::moving && s.path) {
        Position prev = s.position;
        for (std::size_t i = s.path_cursor; i < s.path->size(); ++i) {
            if (manhattan(prev, s.path->steps[i]) != 1) return "path steps are not adjacent";
            prev = s.path->steps[i];
        }
    }
    return std::nullopt;
}

Roster::Roster(std::vector<Agent> agents) : agents_(std::move(agents)) {
    std::sort(agents_.begin(), agents_.end(),
              [](const Agent& a, const Agent& b) { return a.profile.id < b.profile.id; });
    std::set<std::string> ids;
    int primaries = 0;
    for (const auto& a : agents_) {
        if (a.profile.id.empty()) throw ValidationError("agent id must not be empty");
        if (!ids.insert(a.profile.id).second) throw ValidationError("duplicate agent id '" + a.profile.id + "'");
        if (a.profile.occupation.empty()) throw ValidationError("agent '" + a.profile.id + "' has no occupation");
        if (a.state.id != a.profile.id) throw ValidationError("agent state/profile id mismatch for '" + a.profile.id + "'");
        primaries += a.profile.primary ? 1 : 0;
    }
    if (!agents_.empty() && primaries != 1) {
        throw ValidationError("roster must flag exactly one primary agent, found " + std::to_string(primaries));
    }
}

const Agent* Roster::find(std::string_view id) const {
    auto it = std::lower_bound(agents_.begin(), agents_.end(), id,
                               [](const Agent& a, std::string_view key) { return a.profile.id < key; });
    return it != agents_.end() && it->profile.id == id ? &*it : nullptr;
}

Agent* Roster::find(std::string_view id) {
    return const_cast<Agent*>(std::as_const(*this).find(id));
}

const Agent& Roster::at(std::string_view id) const {
    const auto* a = find(id);
    if (!a) throw UnknownAgentError("unknown agent '" + std::string(id) + "'");
    return *a;
}

Agent& Roster::at(std::string_view id) {
    return const_cast<Agent&>(std::as_const(*this).at(id));
}

const Agent& Roster::primary() const {
    for (const auto& a : agents_) {
        if (a.profile.primary) return a;
    }
    throw UnknownAgentError("roster has no primary agent");
}

std::vector<AgentProfile> default_profiles() {
    return {
        {"anty", "Anty", "chef", "warm, meticulous, proud of her kitchen", "restaurant",
         "Anty runs the kitchen of the town restaurant and loves trying new desserts.", true},
        {"barr", "Barr", "musician", "dreamy, talkative, always humming", "lounge",
         "Barr plays guitar at the lounge most evenings and writes songs about the town.", false},
        {"cleo", "Cleo", "librarian", "quiet, curious, precise", "library",
         "Cleo keeps the town library in order and recommends books to everyone she meets.", false},
        {"dale", "Dale", "gardener", "patient, cheerful, loves the outdoors", "garden",
         "Dale tends the public garden and grows the herbs the restaurant uses.", false},
        {"emmy", "Emmy", "barista", "energetic, sociable, quick-witted", "cafe",
         "Emmy pulls espresso at the cafe and knows every regular by name.", false},
    };
}

Roster make_roster(std::vector<AgentProfile> profiles, const WorldMap& map) {
    if (profiles.empty()) throw ValidationError("roster must have at least one agent");
    std::vector<Agent> agents;
    agents.reserve(profiles.size());
    for (auto& p : profiles) {
        if (!map.has_scene(p.home_scene)) {
            throw MissingSceneError("agent '" + p.id + "' needs home scene '" + p.home_scene + "' which the map lacks");
        }
        AgentState s;
        s.id = p.id;
        s.position = scene_anchor(map, p.home_scene);
        agents.push_back({std::move(p), std::move(s)});
    }
    return Roster(std::move(agents));
}

Roster default_roster(const WorldMap& map) { return make_roster(default_profiles(), map); }

std::vector<AgentProfile> parse_roster_json(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("roster: ") + e.what());
    }
    const json& list = doc.is_object() && doc.contains("agents") ? doc.at("agents") : doc;
    if (!list.is_array()) throw ParseError("roster: expected an array of agents");

    std::vector<AgentProfile> out;
    for (std::size_t i = 0; i < list.size(); ++i) {
        const auto& item = list[i];
        auto field = [&](const char* key, bool required) -> std::string {
            if (!item.contains(key)) {
                if (required) throw ParseError("roster: agent " + std::to_string(i) + " lacks '" + key + "'");
                return {};
            }
            if (!item.at(key).is_string()) {
                throw ParseError("roster: agent " + std::to_string(i) + " field '" + key + "' must be a string");
            }
            return item.at(key).get<std::string>();
        };
        AgentProfile p;
        p.id = field("id", true);
        p.name = field("name", false);
        if (p.name.empty()) p.name = p.id;
        p.occupation = field("occupation", true);
        p.personality = field("personality", false);
        p.home_scene = field("home_scene", true);
        p.bio = field("bio", false);
        p.primary = item.value("primary", false);
        out.push_back(std::move(p));
    }
    // The first listed agent is primary unless one is flagged.
    if (!out.empty() && std::none_of(out.begin(), out.end(), [](const auto& p) { return p.primary; })) {
        out.front().primary = true;
    }
    return out;
}

std::vector<AgentProfile> load_roster_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot read roster file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_roster_json(buf.str());
}

std::string roster_to_json(const std::vector<AgentProfile>& profiles) {
    json list = json::array();
    for (const auto& p : profiles) {
        list.push_back({{"id", p.id},
                        {"name", p.name},
                        {"occupation", p.occupation},
                        {"personality", p.personality},
                        {"home_scene", p.home_scene},
                        {"bio", p.bio},
                        {"primary", p.primary}});
    }
    return json{{"agents", list}}.dump(2) + "\n";
}

AgentState set_activity(AgentState state, std::string activity) {
    if (state.mode != AgentMode::idle && state.mode != AgentMode::acting) {
        throw IllegalTransitionError("agent '" + state.id + "' cannot start an activity while " +
                                     std::string(to_string(state.mode)));
    }
    if (activity.empty()) throw PreconditionError("activity label must not be empty");
    state.mode = AgentMode::acting;
    state.activity = std::move(activity);
    return state;
}

StepResult advance_one_step(AgentState state) {
    if (state.mode != AgentMode::moving || !state.path || state.path_cursor >= state.path->size()) {
        throw IllegalTransitionError("agent '" + state.id + "' is not moving");
    }
    state.position = state.path->steps[state.path_cursor++];
    if (state.path_cursor < state.path->size()) return {std::move(state), false};
    state.mode = AgentMode::idle;
    state.path.reset();
    state.path_cursor = 0;
    return {std::move(state), true};
}

AgentState begin_path(AgentState state, Path path, SceneId destination, std::string activity) {
    if (state.mode == AgentMode::conversing) {
        throw IllegalTransitionError("agent '" + state.id + "' must leave its conversation before moving");
    }
    state.activity.reset();
    state.activity_ticks_left = 0;
    state.destination = std::move(destination);
    state.planned_activity = std::move(activity);
    if (path.empty()) {
        state.mode = AgentMode::idle;
        state.path.reset();
    } else {
        state.mode = AgentMode::moving;
        state.path = std::move(path);
    }
    state.path_cursor = 0;
    return state;
}

AgentState begin_conversation(AgentState state, ConversationId id) {
    if (state.mode == AgentMode::conversing) {
        throw IllegalTransitionError("agent '" + state.id + "' is already conversing");
    }
    state.mode = AgentMode::conversing;
    state.conversation = id;
    state.path.reset();
    state.path_cursor = 0;
    state.destination.reset();
    state.planned_activity.reset();
    state.activity.reset();
    state.activity_ticks_left = 0;
    return state;
}

AgentState end_conversation(AgentState state, int cooldown) {
    if (state.mode != AgentMode::conversing) {
        throw IllegalTransitionError("agent '" + state.id + "' is not conversing");
    }
    state.mode = AgentMode::idle;
    state.conversation.reset();
    state.cooldown = cooldown;
    return state;
}

}  // namespace lifespace
