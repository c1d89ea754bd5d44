#include "oracles.hpp"

#include "lifespace/chat.hpp"
#include "lifespace/stub_provider.hpp"

#include <algorithm>
#include <deque>
#include <set>

namespace oracle {

std::optional<int> bfs_distance(const WorldMap& map, Position start, Position goal) {
    if (!map.walkable(start) || !map.walkable(goal)) return std::nullopt;
    std::vector<int> dist(static_cast<std::size_t>(map.width() * map.height()), -1);
    auto at = [&](Position p) -> int& { return dist[static_cast<std::size_t>(p.y * map.width() + p.x)]; };
    std::deque<Position> queue{start};
    at(start) = 0;
    while (!queue.empty()) {
        auto p = queue.front();
        queue.pop_front();
        if (p == goal) return at(p);
        const Position around[] = {{p.x + 1, p.y}, {p.x - 1, p.y}, {p.x, p.y + 1}, {p.x, p.y - 1}};
        for (auto n : around) {
            if (!map.walkable(n) || at(n) >= 0) continue;
            at(n) = at(p) + 1;
            queue.push_back(n);
        }
    }
    return std::nullopt;
}

WorldMap random_grid(std::mt19937_64& rng, int width, int height, double blocked) {
    std::bernoulli_distribution is_blocked(blocked);
    std::vector<std::uint8_t> walkable(static_cast<std::size_t>(width * height));
    for (auto& w : walkable) w = is_blocked(rng) ? 0 : 1;
    walkable[0] = 1;
    return WorldMap(width, height, std::move(walkable), {});
}

std::string path_problem(const WorldMap& map, Position start, Position goal, const Path& path) {
    Position cur = start;
    for (std::size_t i = 0; i < path.steps.size(); ++i) {
        auto next = path.steps[i];
        if (manhattan(cur, next) != 1) return "step " + std::to_string(i) + " is not adjacent";
        if (!map.walkable(next)) return "step " + std::to_string(i) + " is blocked";
        cur = next;
    }
    if (!(cur == goal)) return "path does not end at the goal";
    return {};
}

namespace {

struct Mirror {
    Position position;
    AgentMode mode = AgentMode::idle;
    int acting_left = 0;
    std::optional<std::uint64_t> last_end;
};

}  // namespace

std::vector<PairMismatch> check_social_triggers(const Roster& initial, const std::vector<SimEvent>& events,
                                                int radius, int cooldown) {
    std::map<AgentId, Mirror> agents;
    for (const auto& a : initial.agents()) agents[a.profile.id] = {a.state.position, a.state.mode, 0, std::nullopt};

    std::vector<PairMismatch> mismatches;
    std::size_t i = 0;
    while (i < events.size()) {
        const auto tick = events[i].tick;
        std::size_t end = i;
        while (end < events.size() && events[end].tick == tick) ++end;

        std::vector<std::tuple<int, AgentId, AgentId>> expected_starts;
        bool predicted = false;
        auto predict = [&] {
            predicted = true;
            std::vector<std::tuple<int, AgentId, AgentId>> candidates;
            for (auto a = agents.begin(); a != agents.end(); ++a) {
                for (auto b = std::next(a); b != agents.end(); ++b) {
                    auto eligible = [&](const Mirror& m) {
                        if (m.mode == AgentMode::conversing) return false;
                        return !m.last_end || tick - *m.last_end >= static_cast<std::uint64_t>(cooldown);
                    };
                    if (!eligible(a->second) || !eligible(b->second)) continue;
                    int d = manhattan(a->second.position, b->second.position);
                    if (d <= radius) candidates.emplace_back(d, a->first, b->first);
                }
            }
            std::sort(candidates.begin(), candidates.end());
            std::set<AgentId> taken;
            for (auto& [d, a, b] : candidates) {
                if (taken.count(a) || taken.count(b)) continue;
                taken.insert(a);
                taken.insert(b);
                expected_starts.emplace_back(d, a, b);
            }
        };

        std::vector<std::tuple<int, AgentId, AgentId>> actual_starts;
        for (std::size_t k = i; k < end; ++k) {
            const auto& e = events[k];
            const bool social = e.as<ev::ConversationStarted>() || e.as<ev::DialogueTurnSpoken>() ||
                                (e.as<ev::ConversationEnded>() && e.as<ev::ConversationEnded>()->reason != "preempted");
            if (social && !predicted) predict();
            if (auto* p = e.as<ev::Planned>()) {
                auto& m = agents[p->agent];
                m.mode = p->path.empty() ? AgentMode::idle : AgentMode::moving;
            } else if (auto* mv = e.as<ev::Moved>()) {
                agents[mv->agent].position = mv->to;
            } else if (auto* ar = e.as<ev::Arrived>()) {
                agents[ar->agent].mode = AgentMode::idle;
            } else if (auto* as = e.as<ev::ActivityStarted>()) {
                agents[as->agent].mode = AgentMode::acting;
                agents[as->agent].acting_left = as->duration;
            } else if (auto* cs = e.as<ev::ConversationStarted>()) {
                actual_starts.emplace_back(cs->distance, cs->initiator, cs->partner);
                agents[cs->initiator].mode = AgentMode::conversing;
                agents[cs->partner].mode = AgentMode::conversing;
            } else if (auto* ce = e.as<ev::ConversationEnded>()) {
                for (const auto& who : {ce->initiator, ce->partner}) {
                    agents[who].mode = AgentMode::idle;
                    agents[who].last_end = tick;
                }
            }
        }
        if (!predicted) predict();
        if (expected_starts != actual_starts) {
            std::string detail = "expected";
            for (auto& [d, a, b] : expected_starts) detail += " " + a + "+" + b + "@" + std::to_string(d);
            detail += " got";
            for (auto& [d, a, b] : actual_starts) detail += " " + a + "+" + b + "@" + std::to_string(d);
            mismatches.push_back({tick, detail});
        }
        for (auto& [id, m] : agents) {
            if (m.mode == AgentMode::acting && --m.acting_left <= 0) m.mode = AgentMode::idle;
        }
        i = end;
    }
    return mismatches;
}

std::vector<std::string> check_no_teleport(const WorldMap& map, const Roster& initial,
                                           const std::vector<SimEvent>& events) {
    std::map<AgentId, Position> where;
    for (const auto& a : initial.agents()) where[a.profile.id] = a.state.position;
    std::vector<std::string> problems;
    std::map<std::pair<AgentId, std::uint64_t>, int> moves_per_tick;
    for (const auto& e : events) {
        auto* mv = e.as<ev::Moved>();
        if (!mv) continue;
        auto label = "seq " + std::to_string(e.seq) + " (" + mv->agent + ")";
        if (!(where[mv->agent] == mv->from)) problems.push_back(label + ": from disagrees with replayed position");
        if (manhattan(mv->from, mv->to) != 1) problems.push_back(label + ": moved more than one tile");
        if (!map.walkable(mv->to)) problems.push_back(label + ": moved onto a blocked tile");
        if (++moves_per_tick[{mv->agent, e.tick}] > 1) problems.push_back(label + ": second move in one tick");
        where[mv->agent] = mv->to;
    }
    return problems;
}

std::map<std::pair<AgentId, Track>, TrackTally> tally_memories(const std::vector<SimEvent>& events) {
    std::map<std::pair<AgentId, Track>, TrackTally> out;
    auto draft = [&](const AgentId& a, const MemoryDraft& d) { ++out[{a, d.track()}].drafted; };
    for (const auto& e : events) {
        if (auto* p = e.as<ev::Planned>()) {
            if (p->memory) draft(p->agent, *p->memory);
        } else if (auto* ar = e.as<ev::Arrived>()) {
            draft(ar->agent, ar->memory);
        } else if (auto* as = e.as<ev::ActivityStarted>()) {
            draft(as->agent, as->memory);
        } else if (auto* ce = e.as<ev::ConversationEnded>()) {
            draft(ce->initiator, ce->initiator_memory);
            draft(ce->partner, ce->partner_memory);
        } else if (auto* ux = e.as<ev::UserExchange>()) {
            draft(ux->agent, ux->memory);
        } else if (auto* mc = e.as<ev::MemoryCompressed>()) {
            out[{mc->agent, mc->track}].compressed += mc->count;
        }
    }
    return out;
}

Simulation make_stub_simulation(const SimConfig& config) {
    auto map = load_map(default_map_text());
    auto roster = default_roster(map);
    auto stub = std::make_shared<StubProvider>(config.seed);
    return Simulation(map, std::move(roster), config, Providers{stub, stub});
}

ScriptedRun run_scripted(std::uint64_t seed, std::uint64_t ticks, std::uint64_t chat_every, SimConfig config) {
    config.seed = seed;
    config.tick_ms = 0;
    auto sim = make_stub_simulation(config);
    ScriptedRun run;
    run.initial = sim.state().roster;
    LocalSimHandle handle(sim);
    static const char* lines[] = {"How was your day?", "What have you been up to lately?", "go to garden",
                                  "Tell me something nice.", "Could you visit the library?"};
    std::vector<ChatSession> sessions;
    for (const auto& a : run.initial.agents()) sessions.push_back(open_session(handle, a.profile.id, a.profile.id));
    for (std::uint64_t t = 1; t <= ticks; ++t) {
        if (chat_every > 0 && t % chat_every == 0) {
            auto& s = sessions[run.chats % sessions.size()];
            user_message(s, lines[run.chats % std::size(lines)], handle);
            ++run.chats;
        }
        auto events = sim.tick();
        run.events.insert(run.events.end(), events.begin(), events.end());
    }
    run.final_state = sim.state();
    return run;
}

}  // namespace oracle
