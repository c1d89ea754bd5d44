#include "lifespace/memory.hpp"

#include "lifespace/errors.hpp"

#include <algorithm>

namespace lifespace {

std::string_view to_string(Track t) {
    return t == Track::interaction ? "interaction" : "life_space";
}

std::string_view to_string(MemoryKind k) {
    switch (k) {
        case MemoryKind::movement: return "movement";
        case MemoryKind::arrival: return "arrival";
        case MemoryKind::activity: return "activity";
        case MemoryKind::agent_dialogue: return "agent_dialogue";
        case MemoryKind::user_exchange: return "user_exchange";
    }
    return "activity";
}

std::optional<Track> parse_track(std::string_view s) {
    if (s == "interaction") return Track::interaction;
    if (s == "life_space") return Track::life_space;
    return std::nullopt;
}

std::optional<MemoryKind> parse_memory_kind(std::string_view s) {
    for (auto k : {MemoryKind::movement, MemoryKind::arrival, MemoryKind::activity, MemoryKind::agent_dialogue,
                   MemoryKind::user_exchange}) {
        if (to_string(k) == s) return k;
    }
    return std::nullopt;
}

Track track_of(MemoryKind k) {
    return k == MemoryKind::user_exchange ? Track::interaction : Track::life_space;
}

MemoryStore make_memory_store(AgentId agent, std::size_t threshold) {
    if (threshold < 1) throw PreconditionError("memory threshold must be at least 1");
    MemoryStore store;
    store.agent = std::move(agent);
    store.threshold = threshold;
    return store;
}

void validate_memory_event(const MemoryEvent& event) {
    if (track_of(event.kind) != event.track) {
        throw TrackMismatchError("memory kind '" + std::string(to_string(event.kind)) + "' cannot go on the " +
                                 std::string(to_string(event.track)) + " track");
    }
    if (event.text.empty()) throw PreconditionError("memory event text must not be empty");
}

std::uint64_t record_event(MemoryStore& store, MemoryEvent event) {
    validate_memory_event(event);
    event.seq = store.next_seq++;
    const auto seq = event.seq;
    store.recent(event.track).push_back(std::move(event));
    return seq;
}

std::vector<LongTermSummary> maybe_compress(MemoryStore& store, const Summarizer& summarizer) {
    std::vector<LongTermSummary> produced;
    for (auto track : {Track::interaction, Track::life_space}) {
        const auto& buffer = store.recent(track);
        if (buffer.size() < store.threshold) continue;
        std::span<const MemoryEvent> oldest(buffer.data(), store.threshold);
        std::string text = summarizer(oldest);
        if (text.empty()) throw ProviderUnavailableError("summarizer returned empty text");
        produced.push_back({oldest.front().seq, oldest.back().seq, track, std::move(text)});
    }
    for (const auto& s : produced) apply_summary(store, s);
    return produced;
}

void apply_summary(MemoryStore& store, const LongTermSummary& summary) {
    auto& buffer = store.recent(summary.track);
    if (buffer.size() < store.threshold) {
        throw PreconditionError("cannot apply summary: " + std::string(to_string(summary.track)) +
                                " buffer holds fewer than " + std::to_string(store.threshold) + " events");
    }
    if (buffer.front().seq != summary.first_seq || buffer[store.threshold - 1].seq != summary.last_seq) {
        throw PreconditionError("summary range " + std::to_string(summary.first_seq) + ".." +
                                std::to_string(summary.last_seq) + " does not match the oldest buffered events");
    }
    buffer.erase(buffer.begin(), buffer.begin() + static_cast<std::ptrdiff_t>(store.threshold));
    store.summaries(summary.track).push_back(summary);
}

ContextBundle assemble_context(const MemoryStore& store) {
    return {store.summaries(Track::interaction), store.summaries(Track::life_space), store.recent(Track::interaction),
            store.recent(Track::life_space)};
}

std::string render_context(const ContextBundle& bundle) {
    std::string out;
    auto section = [&out](std::string_view heading, const auto& items) {
        out += heading;
        out += '\n';
        for (const auto& item : items) {
            out += "- ";
            for (char c : item.text) out += (c == '\n' || c == '\r') ? ' ' : c;
            out += '\n';
        }
    };
    section("## Past (shared with user)", bundle.long_term_interaction);
    section("## Past (own life)", bundle.long_term_life);
    section("## Recent (shared with user)", bundle.recent_interaction);
    section("## Recent (own life)", bundle.recent_life);
    return out;
}

}  // namespace lifespace
