#pragma once

#include "lifespace/agent.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lifespace {

enum class Track { interaction, life_space };
enum class MemoryKind { movement, arrival, activity, agent_dialogue, user_exchange };

std::string_view to_string(Track t);
std::string_view to_string(MemoryKind k);
std::optional<Track> parse_track(std::string_view s);
std::optional<MemoryKind> parse_memory_kind(std::string_view s);

/// The track a kind belongs to: user_exchange is interaction, everything else life_space.
Track track_of(MemoryKind k);

struct MemoryEvent {
    std::uint64_t seq = 0;  // assigned by record_event
    std::uint64_t tick = 0;
    Track track = Track::life_space;
    MemoryKind kind = MemoryKind::activity;
    std::string text;
    std::vector<AgentId> participants;  // other agents involved
    std::optional<SceneId> scene;        // where it happened, when known

    friend bool operator==(const MemoryEvent&, const MemoryEvent&) = default;
};

struct LongTermSummary {
    std::uint64_t first_seq = 0;
    std::uint64_t last_seq = 0;
    Track track = Track::life_space;
    std::string text;

    friend bool operator==(const LongTermSummary&, const LongTermSummary&) = default;
};

inline constexpr std::size_t kDefaultMemoryThreshold = 10;

/// Per-agent dual-track store. The two tracks never share events.
struct MemoryStore {
    AgentId agent;
    std::size_t threshold = kDefaultMemoryThreshold;
    std::array<std::vector<MemoryEvent>, 2> short_term;
    std::array<std::vector<LongTermSummary>, 2> long_term;
    std::uint64_t next_seq = 1;

    const std::vector<MemoryEvent>& recent(Track t) const { return short_term[static_cast<std::size_t>(t)]; }
    std::vector<MemoryEvent>& recent(Track t) { return short_term[static_cast<std::size_t>(t)]; }
    const std::vector<LongTermSummary>& summaries(Track t) const { return long_term[static_cast<std::size_t>(t)]; }
    std::vector<LongTermSummary>& summaries(Track t) { return long_term[static_cast<std::size_t>(t)]; }

    friend bool operator==(const MemoryStore&, const MemoryStore&) = default;
};

MemoryStore make_memory_store(AgentId agent, std::size_t threshold = kDefaultMemoryThreshold);

/// Throws TrackMismatchError when kind and track disagree, PreconditionError on empty text.
void validate_memory_event(const MemoryEvent& event);

/// Appends to the matching track and returns the assigned seq.
std::uint64_t record_event(MemoryStore& store, MemoryEvent event);

/// Produces summary text for events drawn from one track; throws on failure.
using Summarizer = std::function<std::string(std::span<const MemoryEvent>)>;

/// Summarizes the K oldest events of every track holding at least K. All-or-nothing:
/// if the summarizer throws, the store is left untouched and the error propagates.
std::vector<LongTermSummary> maybe_compress(MemoryStore& store, const Summarizer& summarizer);

/// Applies an already produced summary (used when replaying a log). The summary
/// must cover exactly the oldest events of its track.
void apply_summary(MemoryStore& store, const LongTermSummary& summary);

struct ContextBundle {
    std::vector<LongTermSummary> long_term_interaction;
    std::vector<LongTermSummary> long_term_life;
    std::vector<MemoryEvent> recent_interaction;
    std::vector<MemoryEvent> recent_life;

    friend bool operator==(const ContextBundle&, const ContextBundle&) = default;
};

ContextBundle assemble_context(const MemoryStore& store);

/// Fixed four-section prompt block; identical bundles render identical bytes.
std::string render_context(const ContextBundle& bundle);

}  // namespace lifespace
