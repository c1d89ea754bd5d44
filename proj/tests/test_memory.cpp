#include "lifespace/errors.hpp"
#include "lifespace/memory.hpp"

#include <doctest.h>

using namespace lifespace;

namespace {

MemoryEvent life(std::string text, std::uint64_t tick = 1) {
    MemoryEvent e;
    e.tick = tick;
    e.track = Track::life_space;
    e.kind = MemoryKind::activity;
    e.text = std::move(text);
    return e;
}

MemoryEvent chat(std::string text, std::uint64_t tick = 1) {
    MemoryEvent e;
    e.tick = tick;
    e.track = Track::interaction;
    e.kind = MemoryKind::user_exchange;
    e.text = std::move(text);
    return e;
}

std::string count_summary(std::span<const MemoryEvent> events) {
    return "summary of " + std::to_string(events.size());
}

}  // namespace

TEST_CASE("kinds map to their track") {
    CHECK(track_of(MemoryKind::user_exchange) == Track::interaction);
    for (auto k : {MemoryKind::movement, MemoryKind::arrival, MemoryKind::activity, MemoryKind::agent_dialogue})
        CHECK(track_of(k) == Track::life_space);
    CHECK(parse_track("life_space") == Track::life_space);
    CHECK(parse_memory_kind("user_exchange") == MemoryKind::user_exchange);
    CHECK_FALSE(parse_track("dream").has_value());
}

TEST_CASE("record_event assigns increasing seq and routes by track") {
    auto store = make_memory_store("anty");
    auto a = record_event(store, life("cooked"));
    auto b = record_event(store, chat("talked"));
    auto c = record_event(store, life("cleaned"));
    CHECK(a < b);
    CHECK(b < c);
    CHECK(store.recent(Track::life_space).size() == 2);
    CHECK(store.recent(Track::interaction).size() == 1);
    CHECK(store.recent(Track::interaction)[0].seq == b);
}

TEST_CASE("mismatched or empty memories are rejected") {
    auto store = make_memory_store("anty");
    auto bad = life("x");
    bad.kind = MemoryKind::user_exchange;
    CHECK_THROWS_AS(record_event(store, bad), TrackMismatchError);
    auto bad2 = chat("x");
    bad2.kind = MemoryKind::arrival;
    CHECK_THROWS_AS(record_event(store, bad2), TrackMismatchError);
    CHECK_THROWS_AS(record_event(store, life("")), PreconditionError);
    CHECK(store.recent(Track::life_space).empty());
    CHECK_THROWS_AS(make_memory_store("a", 0), PreconditionError);
}

TEST_CASE("compression consumes the oldest K of a full track only") {
    auto store = make_memory_store("anty", 3);
    for (int i = 0; i < 2; ++i) record_event(store, life("l" + std::to_string(i)));
    for (int i = 0; i < 3; ++i) record_event(store, chat("c" + std::to_string(i)));
    auto out = maybe_compress(store, count_summary);
    REQUIRE(out.size() == 1);
    CHECK(out[0].track == Track::interaction);
    CHECK(out[0].text == "summary of 3");
    CHECK(store.recent(Track::interaction).empty());
    CHECK(store.recent(Track::life_space).size() == 2);
    CHECK(store.summaries(Track::interaction).size() == 1);
    CHECK(store.summaries(Track::life_space).empty());
}

TEST_CASE("K=10 over 25 life events compresses at 10 and 20") {
    auto store = make_memory_store("anty", 10);
    std::vector<std::size_t> compress_points;
    std::vector<std::uint64_t> seqs;
    for (int i = 1; i <= 25; ++i) {
        seqs.push_back(record_event(store, life("event " + std::to_string(i))));
        auto out = maybe_compress(store, count_summary);
        if (!out.empty()) {
            compress_points.push_back(static_cast<std::size_t>(i));
            REQUIRE(out.size() == 1);
            CHECK(out[0].first_seq == seqs[static_cast<std::size_t>(i) - 10]);
            CHECK(out[0].last_seq == seqs[static_cast<std::size_t>(i) - 1]);
        }
    }
    CHECK(compress_points == std::vector<std::size_t>{10, 20});
    CHECK(store.recent(Track::life_space).size() == 5);
    CHECK(store.recent(Track::life_space).front().text == "event 21");
    CHECK(store.summaries(Track::life_space).size() == 2);
}

TEST_CASE("a failing summarizer leaves the store untouched") {
    auto store = make_memory_store("anty", 2);
    record_event(store, life("a"));
    record_event(store, life("b"));
    record_event(store, chat("c"));
    record_event(store, chat("d"));
    auto before = store;
    int calls = 0;
    Summarizer flaky = [&](std::span<const MemoryEvent>) -> std::string {
        if (++calls == 2) throw ProviderUnavailableError("down");
        return "ok";
    };
    CHECK_THROWS_AS(maybe_compress(store, flaky), ProviderUnavailableError);
    CHECK(store == before);
    CHECK_THROWS_AS(maybe_compress(store, [](auto) { return std::string(); }), ProviderUnavailableError);
    CHECK(store == before);
}

TEST_CASE("apply_summary reproduces maybe_compress") {
    auto live = make_memory_store("anty", 3);
    for (int i = 0; i < 3; ++i) record_event(live, life("l" + std::to_string(i)));
    auto replayed = live;
    auto out = maybe_compress(live, count_summary);
    REQUIRE(out.size() == 1);
    apply_summary(replayed, out[0]);
    CHECK(replayed == live);
    CHECK_THROWS_AS(apply_summary(replayed, out[0]), PreconditionError);
}

TEST_CASE("context keeps tracks apart and renders deterministically") {
    auto store = make_memory_store("anty", 2);
    record_event(store, life("walked to the cafe"));
    record_event(store, chat("User said: hi.\nAnty replied: hello."));
    auto ctx = assemble_context(store);
    CHECK(ctx.recent_life.size() == 1);
    CHECK(ctx.recent_interaction.size() == 1);
    auto text = render_context(ctx);
    CHECK(text == render_context(assemble_context(store)));
    auto past_user = text.find("## Past (shared with user)");
    auto past_own = text.find("## Past (own life)");
    auto recent_user = text.find("## Recent (shared with user)");
    auto recent_own = text.find("## Recent (own life)");
    CHECK(past_user < past_own);
    CHECK(past_own < recent_user);
    CHECK(recent_user < recent_own);
    CHECK(text.find("- User said: hi. Anty replied: hello.") > recent_user);
    CHECK(text.find("- walked to the cafe") > recent_own);
}
