#pragma once

#include "lifespace/agent.hpp"
#include "lifespace/memory.hpp"
#include "lifespace/world.hpp"

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lifespace {

struct PlanDecision {
    SceneId destination;
    std::string activity;
    std::string rationale;

    friend bool operator==(const PlanDecision&, const PlanDecision&) = default;
};

struct DialogueTurn {
    AgentId speaker;
    std::string text;
    bool terminate = false;

    friend bool operator==(const DialogueTurn&, const DialogueTurn&) = default;
};

struct UserReply {
    std::string text;
    std::optional<PlanDecision> accepted_action;
};

/// Everything a provider sees when producing the next line of an agent-agent chat.
struct DialogueRequest {
    std::span<const DialogueTurn> turns;
    const AgentProfile& speaker;
    const AgentProfile& listener;
    const ContextBundle& speaker_context;
    const ContextBundle& listener_context;
    std::size_t max_turns;
};

/// The four generation tasks. Implementations throw ProviderUnavailableError when
/// they cannot produce an answer; they may return raw values that the free
/// functions below validate and repair.
class CognitionProvider {
public:
    virtual ~CognitionProvider() = default;

    virtual PlanDecision plan(const AgentProfile& profile, const ContextBundle& context, const WorldMap& map) = 0;
    virtual DialogueTurn dialogue_turn(const DialogueRequest& request) = 0;
    virtual std::string summarize(std::span<const MemoryEvent> events) = 0;
    virtual UserReply reply(const AgentProfile& profile, const ContextBundle& context, std::string_view user_text,
                            const WorldMap& map) = 0;
};

/// Planner role drives planning, summaries and agent-agent dialogue; the
/// conversationalist role answers users.
struct Providers {
    std::shared_ptr<CognitionProvider> planner;
    std::shared_ptr<CognitionProvider> conversationalist;
};

inline constexpr std::size_t kDefaultMaxTurns = 6;

struct PlanOutcome {
    PlanDecision decision;
    std::optional<SceneId> repaired_from;  // set when the provider named an unknown scene
};

/// Valid plan for `profile`; unknown scenes are repaired to the home scene.
PlanOutcome plan_next(CognitionProvider& provider, const AgentProfile& profile, const ContextBundle& context,
                      const WorldMap& map);

/// Next turn of a conversation between `a` (initiator) and `b`. Provider failures
/// yield a synthetic terminating turn; the turn at max_turns-1 always terminates.
DialogueTurn next_dialogue_turn(CognitionProvider& provider, std::span<const DialogueTurn> turns,
                                const AgentProfile& a, const AgentProfile& b, const ContextBundle& context_a,
                                const ContextBundle& context_b, std::size_t max_turns = kDefaultMaxTurns);

/// Non-empty summary strictly shorter than the concatenated event texts.
std::string summarize_events(CognitionProvider& provider, std::span<const MemoryEvent> events);

UserReply respond_to_user(CognitionProvider& provider, const AgentProfile& profile, const ContextBundle& context,
                          std::string_view user_text, const WorldMap& map);

/// Deterministic summary template shared by the stub and the LLM fallback path.
std::string template_summary(std::span<const MemoryEvent> events);

/// Activity labels a persona picks from, keyed by occupation (home) or scene category.
const std::vector<std::string>& occupation_activities(std::string_view occupation);
const std::vector<std::string>& category_activities(SceneCategory category);
std::string default_activity(const WorldMap& map, const SceneId& scene, const AgentProfile& profile);

/// key: value lines from the first fenced block (or the whole text when unfenced).
/// Keys are lower-cased; returns nullopt when nothing parses.
std::optional<std::map<std::string, std::string>> parse_structured_block(std::string_view text);

}  // namespace lifespace
