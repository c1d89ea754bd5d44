#include "lifespace/chat.hpp"
#include "lifespace/cli.hpp"
#include "lifespace/engine.hpp"
#include "lifespace/errors.hpp"
#include "lifespace/stub_provider.hpp"
#include "support/oracles.hpp"

#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

using namespace lifespace;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

SimConfig fast(std::uint64_t seed) {
    SimConfig c;
    c.seed = seed;
    c.tick_ms = 0;
    return c;
}

Outcome pathfinding() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(20240601);
    std::uniform_int_distribution<int> coord(0, 19);
    std::size_t pairs = 0, unreachable = 0, bad = 0;
    std::string first_bad;
    for (int grid = 0; grid < 50; ++grid) {
        auto map = oracle::random_grid(rng, 20, 20, 0.3);
        for (int i = 0; i < 200; ++i) {
            Position s{coord(rng), coord(rng)}, g{coord(rng), coord(rng)};
            ++pairs;
            auto expected = oracle::bfs_distance(map, s, g);
            std::optional<Path> got;
            try {
                got = find_path(map, s, g);
            } catch (const NoRouteError&) {
            }
            bool ok = expected ? got && static_cast<int>(got->size()) == *expected &&
                                     oracle::path_problem(map, s, g, *got).empty()
                               : !got.has_value();
            unreachable += expected ? 0 : 1;
            if (!ok && bad++ == 0) first_bad = "grid " + std::to_string(grid) + " pair " + std::to_string(i);
        }
    }
    const double secs = seconds_since(t0);
    std::ostringstream d;
    d << pairs << " pairs (" << unreachable << " unreachable), " << bad << " disagreements, " << secs << " s";
    if (bad) d << ", first at " << first_bad;
    return {bad == 0 && secs < 5.0, d.str()};
}

Outcome no_teleport() {
    auto sim = oracle::make_stub_simulation(fast(1000));
    auto initial = sim.state().roster;
    std::vector<SimEvent> events;
    for (int t = 0; t < 1000; ++t) {
        auto e = sim.tick();
        events.insert(events.end(), e.begin(), e.end());
    }
    auto problems = oracle::check_no_teleport(sim.map(), initial, events);
    std::size_t moves = 0;
    for (const auto& e : events) moves += e.as<ev::Moved>() ? 1 : 0;
    std::string d = std::to_string(moves) + " moves, " + std::to_string(problems.size()) + " violations";
    if (!problems.empty()) d += ", first: " + problems.front();
    return {problems.empty() && moves > 0, d};
}

Outcome social_triggers() {
    SimConfig cfg = fast(500);
    auto run = oracle::run_scripted(500, 500, 13, cfg);
    auto mismatches = oracle::check_social_triggers(run.initial, run.events, cfg.proximity_radius,
                                                    cfg.conversation_cooldown);
    std::size_t starts = 0;
    for (const auto& e : run.events) starts += e.as<ev::ConversationStarted>() ? 1 : 0;
    std::string d = std::to_string(starts) + " conversations, " + std::to_string(mismatches.size()) + " mismatches";
    if (!mismatches.empty())
        d += ", first at tick " + std::to_string(mismatches.front().tick) + ": " + mismatches.front().detail;
    return {mismatches.empty() && starts > 0, d};
}

Outcome dual_track() {
    SimConfig cfg = fast(404);
    auto run = oracle::run_scripted(404, 500, 5, cfg);
    auto tally = oracle::tally_memories(run.events);
    std::size_t problems = 0, exchanges = 0, compressions = 0;
    std::string first;
    auto flag = [&](std::string what) {
        if (problems++ == 0) first = std::move(what);
    };
    for (const auto& e : run.events) {
        if (e.as<ev::UserExchange>()) ++exchanges;
        if (auto* c = e.as<ev::MemoryCompressed>()) {
            ++compressions;
            if (c->count != cfg.memory_threshold) flag("compression of " + std::to_string(c->count));
        }
    }
    if (exchanges != run.chats) flag("chats " + std::to_string(run.chats) + " but exchanges " + std::to_string(exchanges));
    for (const auto& [id, store] : run.final_state.memories) {
        for (auto track : {Track::interaction, Track::life_space}) {
            auto t = tally[{id, track}];
            if (t.drafted != store.recent(track).size() + t.compressed)
                flag(id + "/" + std::string(to_string(track)) + " not conserved");
            for (const auto& m : store.recent(track))
                if (m.track != track) flag(id + " holds a foreign event");
        }
        for (const auto& m : store.recent(Track::interaction))
            if (m.kind != MemoryKind::user_exchange) flag(id + " interaction track holds agent life");
        for (const auto& m : store.recent(Track::life_space))
            if (m.kind == MemoryKind::user_exchange) flag(id + " life track holds a user exchange");
    }
    std::ostringstream d;
    d << run.chats << " chats, " << compressions << " compressions, " << problems << " problems";
    if (problems) d << ", first: " << first;
    return {problems == 0 && run.chats > 0 && compressions > 0, d.str()};
}

Outcome compression_schedule() {
    auto store = make_memory_store("anty", 10);
    std::vector<std::uint64_t> seqs;
    std::vector<std::size_t> points;
    bool oldest = true;
    for (int i = 1; i <= 25; ++i) {
        MemoryEvent e;
        e.tick = static_cast<std::uint64_t>(i);
        e.kind = MemoryKind::activity;
        e.text = "life event " + std::to_string(i);
        seqs.push_back(record_event(store, e));
        auto out = maybe_compress(store, template_summary);
        if (out.empty()) continue;
        points.push_back(static_cast<std::size_t>(i));
        oldest = oldest && out.size() == 1 && out[0].first_seq == seqs[static_cast<std::size_t>(i) - 10] &&
                 out[0].last_seq == seqs[static_cast<std::size_t>(i) - 1];
    }
    const bool pass = points == std::vector<std::size_t>{10, 20} && oldest &&
                      store.recent(Track::life_space).size() == 5;
    std::string d = "compressed at";
    for (auto p : points) d += " " + std::to_string(p);
    d += oldest ? ", oldest ten each time" : ", wrong span";
    return {pass, d};
}

std::unique_ptr<Engine> make_engine(std::uint64_t seed) {
    SimConfig cfg = fast(seed);
    auto map = load_map(default_map_text());
    auto stub = std::make_shared<StubProvider>(seed);
    return std::make_unique<Engine>(map, make_initial_state(default_roster(map), cfg), cfg, Providers{stub, stub});
}

Outcome mode_invariance() {
    auto observed = make_engine(66);
    auto hidden = make_engine(66);
    std::ostringstream log_a, log_b;
    observed->attach_log(log_a);
    hidden->attach_log(log_b);
    observed->start(false);
    hidden->start(false);
    hidden->set_mode(ViewMode::unobservable);
    auto sub_a = observed->subscribe(0, 1'000'000);
    auto sub_b = hidden->subscribe(0, 1'000'000);
    auto sa = observed->sessions().open(observed->handle(), "anty");
    auto sb = hidden->sessions().open(hidden->handle(), "anty");
    const char* lines[] = {"What did you do today?", "go to garden", "Visit the library please", "Nice!"};
    std::size_t flag_errors = 0, envelopes = 0, visible_hidden = 0;
    for (int t = 0; t < 300; ++t) {
        if (t % 17 == 5) {
            observed->sessions().message(sa, lines[t % 4], observed->handle());
            hidden->sessions().message(sb, lines[t % 4], hidden->handle());
        }
        observed->step();
        hidden->step();
        for (const auto& e : sub_a->poll_envelopes(1'000'000)) flag_errors += e.visible ? 0 : 1;
        for (const auto& e : sub_b->poll_envelopes(1'000'000)) {
            ++envelopes;
            visible_hidden += e.visible ? 1 : 0;
            flag_errors += e.visible == (e.event.as<ev::UserExchange>() != nullptr) ? 0 : 1;
        }
    }
    observed->stop();
    hidden->stop();
    const bool identical = log_a.str() == log_b.str();
    std::ostringstream d;
    d << "logs " << (identical ? "byte-identical" : "differ") << " (" << log_a.str().size() << " bytes), "
      << envelopes << " envelopes, " << visible_hidden << " visible while unobservable, " << flag_errors
      << " flag errors";
    return {identical && flag_errors == 0 && visible_hidden > 0, d.str()};
}

Outcome immediate_influence() {
    auto sim = oracle::make_stub_simulation(fast(77));
    LocalSimHandle handle(sim);
    auto session = open_session(handle, "anty", "s1");
    std::size_t samples = 0, failures = 0;
    std::string first;
    for (std::uint64_t t = 1; t <= 400; ++t) {
        const bool ask = t % 37 == 0 && scene_at(sim.map(), sim.state().roster.at("anty").state.position) != "garden";
        if (ask) {
            auto r = user_message(session, "go to garden", handle);
            ++samples;
            auto events = sim.tick();
            std::optional<std::uint64_t> planned_tick, moved_tick;
            bool exchange = false;
            for (const auto& e : events) {
                if (auto* p = e.as<ev::Planned>(); p && p->agent == "anty" && p->user_influenced &&
                                                   p->destination == "garden" && !planned_tick)
                    planned_tick = e.tick;
                if (auto* m = e.as<ev::Moved>(); m && m->agent == "anty" && planned_tick && !moved_tick)
                    moved_tick = e.tick;
                exchange |= e.as<ev::UserExchange>() != nullptr;
            }
            const bool ok = r.acted && exchange && planned_tick && moved_tick && *planned_tick == *moved_tick;
            if (!ok && failures++ == 0) first = "tick " + std::to_string(t);
        } else {
            sim.tick();
        }
    }
    std::string d = std::to_string(samples) + " requests, " + std::to_string(failures) + " without same-tick move";
    if (failures) d += ", first at " + first;
    return {failures == 0 && samples >= 3, d};
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<std::string> event_lines_after(const std::string& text, std::uint64_t tick) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) {
        auto j = nlohmann::json::parse(line);
        if (j["type"] == "header" || j["type"] == "trailer") continue;
        if (j["tick"].get<std::uint64_t>() > tick) out.push_back(line);
    }
    return out;
}

Outcome determinism(Clock::time_point suite_start) {
    const auto dir = fs::temp_directory_path();
    const auto a = (dir / "lifespace_accept_a.jsonl").string();
    const auto b = (dir / "lifespace_accept_b.jsonl").string();
    const auto snap = (dir / "lifespace_accept_snap.json").string();
    const auto tail = (dir / "lifespace_accept_tail.jsonl").string();
    const auto full = (dir / "lifespace_accept_full.jsonl").string();
    std::ostringstream sink, err;
    auto run = [&](CliOptions o) { return cmd_run(o, sink, err); };

    CliOptions o;
    o.seed = 31337;
    o.tick_ms = 0;
    o.ticks = 300;
    o.out_path = a;
    bool ok = run(o) == 0;
    o.out_path = b;
    ok = ok && run(o) == 0;
    const bool identical = ok && slurp(a) == slurp(b) && !slurp(a).empty();

    std::ostringstream replay_out;
    const bool replay_ok = cmd_replay(a, replay_out, err) == 0 && replay_out.str().rfind("digest match", 0) == 0;

    CliOptions first = o;
    first.ticks = 100;
    first.out_path.reset();
    first.snapshot_on_exit = snap;
    CliOptions resumed;
    resumed.resume_path = snap;
    resumed.tick_ms = 0;
    resumed.ticks = 10;
    resumed.out_path = tail;
    CliOptions whole = o;
    whole.ticks = 110;
    whole.out_path = full;
    bool resume_ok = run(first) == 0 && run(resumed) == 0 && run(whole) == 0;
    auto tail_lines = event_lines_after(slurp(tail), 100);
    auto full_lines = event_lines_after(slurp(full), 100);
    resume_ok = resume_ok && !tail_lines.empty() && tail_lines == full_lines;

    for (const auto& p : {a, b, snap, tail, full}) fs::remove(p);
    const double secs = seconds_since(suite_start);
    std::ostringstream d;
    d << "repeat runs " << (identical ? "identical" : "differ") << ", replay "
      << (replay_ok ? "digest match" : "failed") << ", resume suffix " << (resume_ok ? "matches" : "differs") << " ("
      << tail_lines.size() << " events), suite so far " << secs << " s";
    return {identical && replay_ok && resume_ok && secs < 60.0, d.str()};
}

Outcome roster() {
    auto map = load_map(default_map_text());
    auto r = default_roster(map);
    std::set<std::string> occupations;
    for (const auto& a : r.agents()) occupations.insert(a.profile.occupation);
    std::string d = std::to_string(r.size()) + " agents, " + std::to_string(occupations.size()) +
                    " occupations, primary " + r.primary().profile.id + " (" + r.primary().profile.occupation + ")";
    return {r.size() == 5 && occupations.size() == 5 && r.primary().profile.occupation == "chef", d};
}

}  // namespace

int main() {
    const auto suite_start = Clock::now();
    struct Criterion {
        int id;
        const char* name;
        std::function<Outcome()> check;
    };
    const std::vector<Criterion> criteria = {
        {1, "pathfinding matches BFS on random grids", pathfinding},
        {2, "no teleportation over 1000 ticks", no_teleport},
        {3, "conversation starts follow the pair rule", social_triggers},
        {4, "dual-track isolation and conservation", dual_track},
        {5, "K=10 compression schedule", compression_schedule},
        {6, "view mode leaves the backend unchanged", mode_invariance},
        {7, "user requests act in the same tick", immediate_influence},
        {8, "determinism, replay and resume", [&] { return determinism(suite_start); }},
        {9, "five distinct personas, chef primary", roster},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        Outcome o;
        try {
            o = c.check();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        failed += o.pass ? 0 : 1;
        std::cout << (o.pass ? "PASS" : "FAIL") << " [" << c.id << "] " << c.name << ": " << o.detail << "\n";
    }
    std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size()
              << " criteria passed in " << seconds_since(suite_start) << " s\n";
    return failed == 0 ? 0 : 1;
}
