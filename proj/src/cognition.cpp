#include "lifespace/cognition.hpp"

#include "lifespace/errors.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace lifespace {
namespace {

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

// Cuts to at most `limit` bytes without splitting a UTF-8 sequence.
std::string truncate_utf8(std::string s, std::size_t limit) {
    if (s.size() <= limit) return s;
    std::size_t cut = limit;
    while (cut > 0 && (static_cast<unsigned char>(s[cut]) & 0xC0) == 0x80) --cut;
    s.resize(cut);
    return s;
}

std::string join(const std::vector<std::string>& items, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += sep;
        out += items[i];
    }
    return out;
}

}  // namespace

PlanOutcome plan_next(CognitionProvider& provider, const AgentProfile& profile, const ContextBundle& context,
                      const WorldMap& map) {
    if (map.scenes().empty()) throw PreconditionError("planning needs a map with at least one scene");
    PlanOutcome out;
    out.decision = provider.plan(profile, context, map);
    out.decision.destination = trim(out.decision.destination);
    out.decision.activity = trim(out.decision.activity);
    if (!map.has_scene(out.decision.destination)) {
        out.repaired_from = out.decision.destination;
        out.decision.destination = map.has_scene(profile.home_scene) ? profile.home_scene : map.scenes().front().id;
    }
    if (out.decision.activity.empty()) {
        out.decision.activity = default_activity(map, out.decision.destination, profile);
    }
    return out;
}

DialogueTurn next_dialogue_turn(CognitionProvider& provider, std::span<const DialogueTurn> turns,
                                const AgentProfile& a, const AgentProfile& b, const ContextBundle& context_a,
                                const ContextBundle& context_b, std::size_t max_turns) {
    if (max_turns < 1) throw PreconditionError("max_turns must be at least 1");
    if (turns.size() >= max_turns) throw PreconditionError("conversation already reached max_turns");
    const bool a_speaks = turns.size() % 2 == 0;
    const AgentProfile& speaker = a_speaks ? a : b;
    const AgentProfile& listener = a_speaks ? b : a;

    DialogueTurn turn;
    try {
        turn = provider.dialogue_turn(
            {turns, speaker, listener, a_speaks ? context_a : context_b, a_speaks ? context_b : context_a, max_turns});
    } catch (const ProviderUnavailableError&) {
        return {speaker.id, speaker.name + " has to leave.", true};
    }
    turn.speaker = speaker.id;
    turn.text = trim(turn.text);
    if (turn.text.empty()) {
        turn.terminate = true;
        turn.text = "Goodbye, " + listener.name + ".";
    }
    if (turns.size() + 1 >= max_turns) turn.terminate = true;
    return turn;
}

std::string summarize_events(CognitionProvider& provider, std::span<const MemoryEvent> events) {
    if (events.empty()) throw PreconditionError("cannot summarize an empty event list");
    const Track track = events.front().track;
    std::size_t total = 0;
    for (const auto& e : events) {
        if (e.track != track) throw PreconditionError("cannot summarize events from mixed tracks");
        total += e.text.size();
    }
    std::string text = trim(provider.summarize(events));
    if (text.empty()) text = template_summary(events);
    if (text.size() >= total) text = truncate_utf8(std::move(text), total > 1 ? total - 1 : 1);
    if (text.empty()) text = events.front().text.substr(0, 1);
    return text;
}

UserReply respond_to_user(CognitionProvider& provider, const AgentProfile& profile, const ContextBundle& context,
                          std::string_view user_text, const WorldMap& map) {
    if (trim(user_text).empty()) throw PreconditionError("user text must not be empty");
    UserReply reply = provider.reply(profile, context, user_text, map);
    reply.text = trim(reply.text);
    if (reply.text.empty()) reply.text = "...";
    if (reply.accepted_action) {
        auto& action = *reply.accepted_action;
        action.destination = trim(action.destination);
        if (!map.has_scene(action.destination)) {
            reply.accepted_action.reset();
        } else if (trim(action.activity).empty()) {
            action.activity = default_activity(map, action.destination, profile);
        }
    }
    return reply;
}

std::string template_summary(std::span<const MemoryEvent> events) {
    if (events.empty()) return {};
    std::vector<std::string> scenes;
    std::vector<std::string> partners;
    std::set<std::string> seen_scenes;
    std::set<std::string> seen_partners;
    for (const auto& e : events) {
        if (e.scene && (e.kind == MemoryKind::arrival || e.kind == MemoryKind::agent_dialogue) &&
            seen_scenes.insert(*e.scene).second) {
            scenes.push_back(*e.scene);
        }
        for (const auto& p : e.participants) {
            if (seen_partners.insert(p).second) partners.push_back(p);
        }
    }
    const auto n = std::to_string(events.size());
    if (events.front().track == Track::interaction) {
        return n + " exchanges with the user.";
    }
    return n + " events; visited " + (scenes.empty() ? std::string("no new places") : join(scenes, ", ")) +
           "; talked with " + (partners.empty() ? std::string("nobody") : join(partners, ", ")) + ".";
}

const std::vector<std::string>& occupation_activities(std::string_view occupation) {
    static const std::vector<std::pair<std::string, std::vector<std::string>>> table{
        {"chef", {"preparing ingredients", "plating dishes", "tasting new sauces", "baking dessert"}},
        {"musician", {"tuning the guitar", "rehearsing a new song", "writing lyrics", "playing a short set"}},
        {"librarian", {"shelving returned books", "cataloguing new arrivals", "reading quietly", "mending old bindings"}},
        {"gardener", {"watering the flowerbeds", "pruning the hedges", "planting herbs", "raking leaves"}},
        {"barista", {"pulling espresso shots", "steaming milk", "roasting beans", "wiping the counter"}},
    };
    static const std::vector<std::string> fallback{"working", "tidying up", "taking a break"};
    for (const auto& [name, acts] : table) {
        if (name == occupation) return acts;
    }
    return fallback;
}

const std::vector<std::string>& category_activities(SceneCategory category) {
    static const std::vector<std::string> dining{"having a snack", "sipping a drink", "chatting over a meal"};
    static const std::vector<std::string> leisure{"strolling around", "enjoying the fresh air", "resting on a bench"};
    static const std::vector<std::string> culture{"browsing the shelves", "reading a book", "studying quietly"};
    static const std::vector<std::string> social{"people-watching", "listening to music", "meeting friends"};
    switch (category) {
        case SceneCategory::dining: return dining;
        case SceneCategory::leisure: return leisure;
        case SceneCategory::culture: return culture;
        case SceneCategory::social: return social;
    }
    return social;
}

std::string default_activity(const WorldMap& map, const SceneId& scene, const AgentProfile& profile) {
    if (scene == profile.home_scene) return occupation_activities(profile.occupation).front();
    const auto* s = map.find_scene(scene);
    return category_activities(s ? s->category : SceneCategory::social).front();
}

std::optional<std::map<std::string, std::string>> parse_structured_block(std::string_view text) {
    std::string_view body = text;
    if (auto open = text.find("```"); open != std::string_view::npos) {
        auto line_end = text.find('\n', open);
        if (line_end != std::string_view::npos) {
            auto close = text.find("```", line_end + 1);
            body = text.substr(line_end + 1, close == std::string_view::npos ? std::string_view::npos
                                                                             : close - line_end - 1);
        }
    }
    std::map<std::string, std::string> fields;
    std::size_t start = 0;
    while (start <= body.size()) {
        auto end = body.find('\n', start);
        if (end == std::string_view::npos) end = body.size();
        auto line = body.substr(start, end - start);
        start = end + 1;
        auto colon = line.find(':');
        if (colon == std::string_view::npos) continue;
        std::string key = trim(line.substr(0, colon));
        if (!key.empty() && (key.front() == '-' || key.front() == '*')) key = trim(std::string_view(key).substr(1));
        if (key.empty() || key.find(' ') != std::string::npos) continue;
        std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
        fields[key] = trim(line.substr(colon + 1));
    }
    if (fields.empty()) return std::nullopt;
    return fields;
}

}  // namespace lifespace
