#include "lifespace/chat.hpp"
#include "lifespace/errors.hpp"
#include "lifespace/simulation.hpp"
#include "lifespace/stub_provider.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <set>

using namespace lifespace;

namespace {

SimConfig fast(std::uint64_t seed = 42) {
    SimConfig c;
    c.seed = seed;
    c.tick_ms = 0;
    return c;
}

class Broken final : public CognitionProvider {
public:
    PlanDecision plan(const AgentProfile&, const ContextBundle&, const WorldMap&) override { fail(); }
    DialogueTurn dialogue_turn(const DialogueRequest&) override { fail(); }
    std::string summarize(std::span<const MemoryEvent>) override { fail(); }
    UserReply reply(const AgentProfile&, const ContextBundle&, std::string_view, const WorldMap&) override { fail(); }

private:
    [[noreturn]] static void fail() { throw ProviderUnavailableError("offline"); }
};

/// Delegates to the stub until switched off.
class Switchable final : public CognitionProvider {
public:
    explicit Switchable(std::uint64_t seed) : stub_(seed) {}
    bool down = false;

    PlanDecision plan(const AgentProfile& p, const ContextBundle& c, const WorldMap& m) override {
        check();
        return stub_.plan(p, c, m);
    }
    DialogueTurn dialogue_turn(const DialogueRequest& r) override {
        check();
        return stub_.dialogue_turn(r);
    }
    std::string summarize(std::span<const MemoryEvent> e) override {
        check();
        return stub_.summarize(e);
    }
    UserReply reply(const AgentProfile& p, const ContextBundle& c, std::string_view t, const WorldMap& m) override {
        check();
        return stub_.reply(p, c, t, m);
    }

private:
    void check() const {
        if (down) throw ProviderUnavailableError("offline");
    }
    StubProvider stub_;
};

template <typename T>
std::size_t count_type(const std::vector<SimEvent>& events) {
    std::size_t n = 0;
    for (const auto& e : events) n += e.as<T>() ? 1 : 0;
    return n;
}

}  // namespace

TEST_CASE("config validation") {
    CHECK_NOTHROW(validate(SimConfig{}));
    auto c = SimConfig{};
    c.proximity_radius = -1;
    CHECK_THROWS_AS(validate(c), ValidationError);
    c = SimConfig{};
    c.memory_threshold = 0;
    CHECK_THROWS_AS(validate(c), ValidationError);
    c = SimConfig{};
    c.max_turns = 0;
    CHECK_THROWS_AS(validate(c), ValidationError);
    c = SimConfig{};
    c.tick_ms = -5;
    CHECK_THROWS_AS(validate(c), ValidationError);
}

TEST_CASE("first tick sends everyone home to work") {
    auto sim = oracle::make_stub_simulation(fast());
    auto events = sim.tick();
    CHECK(count_type<ev::Planned>(events) == 5);
    CHECK(count_type<ev::Arrived>(events) == 5);
    CHECK(count_type<ev::ActivityStarted>(events) == 5);
    for (const auto& a : sim.state().roster.agents()) {
        CHECK(a.state.mode == AgentMode::acting);
        CHECK(scene_at(sim.map(), a.state.position) == std::optional<SceneId>(a.profile.home_scene));
    }
    CHECK(sim.state().tick == 1);
    for (std::size_t i = 0; i < events.size(); ++i) CHECK(events[i].seq == i + 1);
}

TEST_CASE("pair selection is greedy by distance then ids") {
    auto map = load_map("9 1\n.........\nscene a social 0,0\n");
    std::vector<AgentProfile> profiles;
    for (auto id : {"a", "b", "c", "d"}) profiles.push_back({id, id, "chef", "", "a", "", std::string(id) == "a"});
    auto roster = make_roster(profiles, map);
    auto place = [&](const char* id, int x) { roster.at(id).state.position = {x, 0}; };
    place("a", 0);
    place("b", 2);
    place("c", 3);
    place("d", 8);
    auto pairs = select_conversation_pairs(roster, 2);
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].a == "b");
    CHECK(pairs[0].b == "c");
    CHECK(pairs[0].distance == 1);

    roster.at("c").state.cooldown = 3;
    pairs = select_conversation_pairs(roster, 2);
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].a == "a");
    CHECK(pairs[0].b == "b");
    CHECK(select_conversation_pairs(roster, 0).empty());
}

TEST_CASE("long stub run keeps every invariant") {
    const auto cfg = fast(7);
    auto sim = oracle::make_stub_simulation(cfg);
    const auto initial = sim.state().roster;
    std::vector<SimEvent> all;
    std::map<ConversationId, std::vector<AgentId>> speakers;
    for (int t = 0; t < 300; ++t) {
        auto events = sim.tick();
        for (const auto& a : sim.state().roster.agents()) {
            auto problem = coherence_violation(a.state);
            CHECK_MESSAGE(!problem, a.profile.id, ": ", problem.value_or(""));
            CHECK(a.state.cooldown >= 0);
            CHECK(a.state.cooldown <= cfg.conversation_cooldown);
            CHECK(sim.map().walkable(a.state.position));
        }
        for (const auto& [id, store] : sim.state().memories) {
            CHECK(store.recent(Track::life_space).size() < cfg.memory_threshold);
            CHECK(store.recent(Track::interaction).size() < cfg.memory_threshold);
        }
        for (const auto& e : events) {
            if (auto* d = e.as<ev::DialogueTurnSpoken>()) speakers[d->conversation].push_back(d->speaker);
        }
        all.insert(all.end(), events.begin(), events.end());
    }
    CHECK(oracle::check_no_teleport(sim.map(), initial, all).empty());
    CHECK(oracle::check_social_triggers(initial, all, cfg.proximity_radius, cfg.conversation_cooldown).empty());
    for (const auto& [id, who] : speakers) {
        CHECK(who.size() <= cfg.max_turns);
        for (std::size_t i = 1; i < who.size(); ++i) CHECK(who[i] != who[i - 1]);
    }
    for (std::size_t i = 1; i < all.size(); ++i) {
        CHECK(all[i].seq == all[i - 1].seq + 1);
        CHECK(all[i].tick >= all[i - 1].tick);
    }
}

TEST_CASE("within 200 ticks every agent travels and talks") {
    auto sim = oracle::make_stub_simulation(fast());
    std::set<AgentId> travelled, talked;
    for (int t = 0; t < 200; ++t) {
        for (const auto& e : sim.tick()) {
            if (auto* a = e.as<ev::Arrived>(); a && e.tick > 1) travelled.insert(a->agent);
            if (auto* c = e.as<ev::ConversationStarted>()) {
                talked.insert(c->initiator);
                talked.insert(c->partner);
            }
        }
    }
    CHECK(travelled.size() == 5);
    CHECK(talked.size() == 5);
}

TEST_CASE("user exchanges land on the interaction track at the next tick") {
    auto sim = oracle::make_stub_simulation(fast());
    sim.tick();
    MemoryEvent m;
    m.track = Track::interaction;
    m.kind = MemoryKind::user_exchange;
    m.text = "User said: hi. Anty replied: hello.";
    sim.inject_user_exchange("anty", m, "s1", "hi", "hello");
    CHECK(sim.inbox_size() == 1);
    auto events = sim.tick();
    REQUIRE(count_type<ev::UserExchange>(events) == 1);
    CHECK(events.front().as<ev::UserExchange>() != nullptr);
    const auto& store = sim.state().memories.at("anty");
    REQUIRE(store.recent(Track::interaction).size() == 1);
    CHECK(store.recent(Track::interaction)[0].text == m.text);
    for (const auto& e : store.recent(Track::life_space)) CHECK(e.kind != MemoryKind::user_exchange);

    m.track = Track::life_space;
    CHECK_THROWS_AS(sim.inject_user_exchange("anty", m), TrackMismatchError);
    m.track = Track::interaction;
    CHECK_THROWS_AS(sim.inject_user_exchange("zed", m), UnknownAgentError);
    CHECK_THROWS_AS(sim.request_replan("anty", {"moon", "x", ""}), UnknownSceneError);
    CHECK_THROWS_AS(sim.request_replan("zed", {"cafe", "x", ""}), UnknownAgentError);
}

TEST_CASE("a replan preempts a conversation with a closing line") {
    auto sim = oracle::make_stub_simulation(fast());
    std::optional<ev::ConversationStarted> started;
    for (int t = 0; t < 400 && !started; ++t) {
        for (const auto& e : sim.tick())
            if (auto* c = e.as<ev::ConversationStarted>()) started = *c;
    }
    REQUIRE(started.has_value());
    const auto who = started->partner;
    REQUIRE(sim.state().roster.at(who).state.mode == AgentMode::conversing);
    sim.request_replan(who, {"plaza", "people watching", "asked by user"});
    auto events = sim.tick();
    const ev::ConversationEnded* ended = nullptr;
    const ev::DialogueTurnSpoken* last_turn = nullptr;
    const ev::Planned* planned = nullptr;
    for (const auto& e : events) {
        if (auto* d = e.as<ev::DialogueTurnSpoken>(); d && !ended) last_turn = d;
        if (auto* c = e.as<ev::ConversationEnded>(); c && !ended) ended = c;
        if (auto* p = e.as<ev::Planned>(); p && p->agent == who && !planned) planned = p;
    }
    REQUIRE(ended != nullptr);
    CHECK(ended->reason == "preempted");
    REQUIRE(last_turn != nullptr);
    CHECK(last_turn->terminate);
    REQUIRE(planned != nullptr);
    CHECK(planned->user_influenced);
    CHECK(planned->destination == "plaza");
    CHECK(sim.state().roster.at(started->initiator).state.mode != AgentMode::conversing);
    CHECK(sim.state().roster.at(started->initiator).state.cooldown > 0);
}

TEST_CASE("held agents skip autonomous planning") {
    auto cfg = fast();
    cfg.activity_duration = 1;
    auto sim = oracle::make_stub_simulation(cfg);
    sim.tick();
    sim.set_chat_hold("cleo", true);
    for (int t = 0; t < 10; ++t) {
        for (const auto& e : sim.tick()) {
            if (auto* p = e.as<ev::Planned>()) CHECK(p->agent != "cleo");
        }
    }
    CHECK(sim.state().roster.at("cleo").state.mode == AgentMode::idle);
    sim.set_chat_hold("cleo", false);
    bool planned = false;
    for (const auto& e : sim.tick())
        if (auto* p = e.as<ev::Planned>()) planned |= p->agent == "cleo";
    CHECK(planned);
}

TEST_CASE("an offline provider degrades without stopping the clock") {
    auto map = load_map(default_map_text());
    auto broken = std::make_shared<Broken>();
    Simulation sim(map, default_roster(map), fast(), Providers{broken, broken});
    for (int t = 0; t < 5; ++t) CHECK(sim.tick().empty());
    CHECK(sim.state().tick == 5);
    CHECK(sim.degraded_calls() == 25);
    for (const auto& a : sim.state().roster.agents()) CHECK(a.state.mode == AgentMode::idle);
}

TEST_CASE("summaries wait while the provider is down and catch up later") {
    auto cfg = fast();
    cfg.memory_threshold = 3;
    auto map = load_map(default_map_text());
    auto provider = std::make_shared<Switchable>(cfg.seed);
    Simulation sim(map, default_roster(map), cfg, Providers{provider, provider});
    sim.tick();
    provider->down = true;
    MemoryEvent m;
    m.track = Track::interaction;
    m.kind = MemoryKind::user_exchange;
    for (int i = 0; i < 4; ++i) {
        m.text = "exchange " + std::to_string(i);
        sim.inject_user_exchange("anty", m);
        sim.tick();
    }
    CHECK(sim.state().memories.at("anty").recent(Track::interaction).size() == 4);
    CHECK(sim.state().memories.at("anty").summaries(Track::interaction).empty());
    provider->down = false;
    sim.tick();
    const auto& store = sim.state().memories.at("anty");
    CHECK(store.summaries(Track::interaction).size() == 1);
    CHECK(store.recent(Track::interaction).size() == 1);
    CHECK(store.recent(Track::interaction)[0].text == "exchange 3");
}

TEST_CASE("dialogue failures end conversations early") {
    auto cfg = fast();
    auto map = load_map(default_map_text());
    auto provider = std::make_shared<Switchable>(cfg.seed);
    Simulation sim(map, default_roster(map), cfg, Providers{provider, provider});
    bool started = false;
    for (int t = 0; t < 400 && !started; ++t)
        for (const auto& e : sim.tick()) started |= e.as<ev::ConversationStarted>() != nullptr;
    REQUIRE(started);
    provider->down = true;
    auto events = sim.tick();
    REQUIRE(count_type<ev::ConversationEnded>(events) >= 1);
    for (const auto& e : events) {
        if (auto* d = e.as<ev::DialogueTurnSpoken>()) {
            CHECK(d->terminate);
            CHECK(d->text.find("has to leave") != std::string::npos);
        }
    }
    CHECK(sim.state().conversations.empty());
}

TEST_CASE("scripted chats keep tracks isolated and memories conserved") {
    auto run = oracle::run_scripted(11, 300, 7);
    CHECK(run.chats > 0);
    auto tally = oracle::tally_memories(run.events);
    for (const auto& [id, store] : run.final_state.memories) {
        for (auto track : {Track::interaction, Track::life_space}) {
            auto t = tally[{id, track}];
            CHECK(t.drafted == store.recent(track).size() + t.compressed);
            for (const auto& e : store.recent(track)) CHECK(e.track == track);
        }
        for (const auto& e : store.recent(Track::interaction)) CHECK(e.kind == MemoryKind::user_exchange);
        for (const auto& e : store.recent(Track::life_space)) CHECK(e.kind != MemoryKind::user_exchange);
    }
}
