#pragma once

#include "lifespace/cognition.hpp"

#include <cstdint>

namespace lifespace {

/// Rule-based provider that needs no network. Every answer is a pure function of
/// the seed and the call's inputs. Published rules:
///
/// plan
///   - no life-track memory at all: go to the home scene.
///   - otherwise: pick among all scenes except the one of the most recent arrival,
///     index = hash(seed, agent, n) mod count, n = life summaries + recent life events.
///   - activity: occupation list at home, scene-category list elsewhere, index n mod size.
///
/// dialogue_turn
///   - turn 0: "Hi <listener>! How is your day going?"
///   - conversation length L = 4 + hash(seed, initiator, partner, topic) mod 3 turns; turn L-1
///     says goodbye and terminates.
///   - middle turns alternate between asking about and riffing on a topic picked from the
///     two occupations; riffs quote the speaker's most recent life event.
///
/// summarize
///   - template_summary(): event count, distinct scenes visited, partners talked with.
///
/// reply
///   - text naming an existing scene (id or label, case-insensitive): accept, moving there
///     with that scene's default activity.
///   - questions about today / recently / lately: quote the most recent life event verbatim
///     (falling back to the latest life summary).
///   - anything else: an in-character acknowledgement without an action.
class StubProvider final : public CognitionProvider {
public:
    explicit StubProvider(std::uint64_t seed = 0) : seed_(seed) {}

    PlanDecision plan(const AgentProfile& profile, const ContextBundle& context, const WorldMap& map) override;
    DialogueTurn dialogue_turn(const DialogueRequest& request) override;
    std::string summarize(std::span<const MemoryEvent> events) override;
    UserReply reply(const AgentProfile& profile, const ContextBundle& context, std::string_view user_text,
                    const WorldMap& map) override;

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
};

/// Topic an occupation likes to talk about ("music" for a musician, ...).
std::string occupation_topic(std::string_view occupation);

}  // namespace lifespace
