#include "lifespace/stub_provider.hpp"

#include "lifespace/hash.hpp"

#include <algorithm>
#include <cctype>

namespace lifespace {
namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

std::size_t life_count(const ContextBundle& ctx) { return ctx.long_term_life.size() + ctx.recent_life.size(); }

const MemoryEvent* latest_arrival(const ContextBundle& ctx) {
    for (auto it = ctx.recent_life.rbegin(); it != ctx.recent_life.rend(); ++it) {
        if (it->kind == MemoryKind::arrival && it->scene) return &*it;
    }
    return nullptr;
}

bool mentions_recent_life(std::string_view lowered) {
    for (std::string_view cue : {"today", "recent", "lately", "up to", "what did you do", "what have you", "your day"}) {
        if (lowered.find(cue) != std::string_view::npos) return true;
    }
    return false;
}

}  // namespace

std::string occupation_topic(std::string_view occupation) {
    if (occupation == "chef") return "food";
    if (occupation == "musician") return "music";
    if (occupation == "librarian") return "books";
    if (occupation == "gardener") return "plants";
    if (occupation == "barista") return "coffee";
    return "the town";
}

PlanDecision StubProvider::plan(const AgentProfile& profile, const ContextBundle& context, const WorldMap& map) {
    const auto n = life_count(context);
    SceneId destination;
    if (n == 0 || map.scenes().size() == 1) {
        destination = map.has_scene(profile.home_scene) ? profile.home_scene : map.scenes().front().id;
    } else {
        const auto* last = latest_arrival(context);
        std::vector<const SceneArea*> candidates;
        for (const auto& s : map.scenes()) {
            if (!last || s.id != *last->scene) candidates.push_back(&s);
        }
        const auto h = Fnv1a().add(seed_).add(profile.id).add(static_cast<std::uint64_t>(n)).value();
        destination = candidates[h % candidates.size()]->id;
    }
    const auto* scene = map.find_scene(destination);
    const auto& acts = destination == profile.home_scene
                           ? occupation_activities(profile.occupation)
                           : category_activities(scene ? scene->category : SceneCategory::social);
    return {destination, acts[n % acts.size()],
            n == 0 ? "starting the day at home" : "moving on after " + std::to_string(n) + " memories"};
}

DialogueTurn StubProvider::dialogue_turn(const DialogueRequest& request) {
    const auto i = request.turns.size();
    const bool speaker_initiated = i % 2 == 0;
    const AgentProfile& initiator = speaker_initiated ? request.speaker : request.listener;
    const AgentProfile& partner = speaker_initiated ? request.listener : request.speaker;

    const auto pick = Fnv1a().add(seed_).add(initiator.id).add(partner.id).value();
    const std::string topic = occupation_topic(pick % 2 == 0 ? partner.occupation : initiator.occupation);
    const auto length = 4 + Fnv1a().add(pick).add(topic).value() % 3;

    if (i == 0) return {request.speaker.id, "Hi " + request.listener.name + "! How is your day going?", false};
    if (i + 1 >= length) {
        return {request.speaker.id,
                "It was great talking about " + topic + ", " + request.listener.name + ". See you around!", true};
    }
    if (i == 1) {
        return {request.speaker.id,
                "Pretty good, thanks! Being a " + request.speaker.occupation +
                    " keeps me busy. Have you been thinking about " + topic + " lately?",
                false};
    }
    if (i % 2 == 0) {
        const auto& recent = request.speaker_context.recent_life;
        std::string quote = recent.empty() ? "It has been a quiet day." : "Earlier: " + recent.back().text + ".";
        return {request.speaker.id, "I have! " + topic + " is always on my mind. " + quote, false};
    }
    return {request.speaker.id, "That sounds lovely. I could talk about " + topic + " all day.", false};
}

std::string StubProvider::summarize(std::span<const MemoryEvent> events) { return template_summary(events); }

UserReply StubProvider::reply(const AgentProfile& profile, const ContextBundle& context, std::string_view user_text,
                              const WorldMap& map) {
    const std::string said = lower(user_text);
    for (const auto& s : map.scenes()) {
        if (said.find(lower(s.id)) != std::string::npos || said.find(lower(s.label)) != std::string::npos) {
            return {"Sure, I'll head over to the " + s.label + " now.",
                    PlanDecision{s.id, default_activity(map, s.id, profile), "user suggestion"}};
        }
    }
    if (mentions_recent_life(said)) {
        if (!context.recent_life.empty()) {
            return {"Here's what happened recently: " + context.recent_life.back().text + ".", std::nullopt};
        }
        if (!context.long_term_life.empty()) {
            return {"Mostly this: " + context.long_term_life.back().text, std::nullopt};
        }
        return {"Not much yet, my day is just getting started.", std::nullopt};
    }
    return {"As a " + profile.occupation + ", I'm happy to chat. You said: \"" + std::string(user_text) + "\"",
            std::nullopt};
}

}  // namespace lifespace
