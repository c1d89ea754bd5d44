#include "lifespace/simulation.hpp"

#include "lifespace/errors.hpp"

#include <algorithm>
#include <chrono>
#include <thread>

namespace lifespace {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::string place_label(const WorldMap& map, const std::optional<SceneId>& scene) {
    if (!scene) return {};
    const auto* s = map.find_scene(*scene);
    return s ? s->label : *scene;
}

void check(bool ok, const std::string& what) {
    if (!ok) throw CorruptLogError(what);
}

AgentState& state_of(SimState& state, const AgentId& id) {
    auto* agent = state.roster.find(id);
    check(agent != nullptr, "event names unknown agent '" + id + "'");
    return agent->state;
}

void queue_memory(SimState& state, const AgentId& agent, const MemoryDraft& draft) {
    state.pending.push_back({agent, state.tick, draft});
}

}  // namespace

void validate(const SimConfig& config) {
    if (config.proximity_radius < 1) throw ValidationError("proximity_radius must be at least 1");
    if (config.conversation_cooldown < 0) throw ValidationError("conversation_cooldown must not be negative");
    if (config.activity_duration < 1) throw ValidationError("activity_duration must be at least 1");
    if (config.memory_threshold < 1) throw ValidationError("memory_threshold must be at least 1");
    if (config.max_turns < 1) throw ValidationError("max_turns must be at least 1");
    if (config.tick_ms < 0) throw ValidationError("tick_ms must not be negative");
}

SimState make_initial_state(Roster roster, const SimConfig& config) {
    SimState state;
    state.seed = config.seed;
    for (const auto& a : roster.agents()) {
        state.memories.emplace(a.profile.id, make_memory_store(a.profile.id, config.memory_threshold));
    }
    state.roster = std::move(roster);
    return state;
}

void apply_event(SimState& state, const SimEvent& event, const WorldMap& map, const SimConfig& config) {
    try {
        std::visit(
            Overloaded{
                [&](const ev::Planned& e) {
                    auto& s = state_of(state, e.agent);
                    check(s.mode != AgentMode::conversing, "planned event for conversing agent '" + e.agent + "'");
                    check(map.has_scene(e.destination), "planned event names unknown scene '" + e.destination + "'");
                    Position prev = s.position;
                    for (const auto& p : e.path) {
                        check(manhattan(prev, p) == 1 && map.walkable(p), "planned path is not a walkable 4-path");
                        prev = p;
                    }
                    s = begin_path(std::move(s), Path{e.path}, e.destination, e.activity);
                    if (e.memory) queue_memory(state, e.agent, *e.memory);
                },
                [&](const ev::Moved& e) {
                    auto& s = state_of(state, e.agent);
                    check(s.mode == AgentMode::moving && s.position == e.from &&
                              s.path->steps[s.path_cursor] == e.to,
                          "moved event does not follow the agent's path");
                    s = advance_one_step(std::move(s)).state;
                },
                [&](const ev::Arrived& e) {
                    auto& s = state_of(state, e.agent);
                    check(s.mode == AgentMode::idle && s.position == e.position,
                          "arrived event does not match agent '" + e.agent + "'");
                    queue_memory(state, e.agent, e.memory);
                },
                [&](const ev::ActivityStarted& e) {
                    auto& s = state_of(state, e.agent);
                    s = set_activity(std::move(s), e.activity);
                    s.activity_ticks_left = e.duration;
                    s.destination.reset();
                    s.planned_activity.reset();
                    queue_memory(state, e.agent, e.memory);
                },
                [&](const ev::ConversationStarted& e) {
                    check(e.conversation == state.next_conversation, "conversation ids out of sequence");
                    check(e.initiator != e.partner, "conversation needs two distinct agents");
                    auto& a = state_of(state, e.initiator);
                    auto& b = state_of(state, e.partner);
                    a = begin_conversation(std::move(a), e.conversation);
                    b = begin_conversation(std::move(b), e.conversation);
                    state.conversations.emplace(e.conversation,
                                                Conversation{e.conversation, e.initiator, e.partner, {}, state.tick});
                    state.next_conversation = e.conversation + 1;
                },
                [&](const ev::DialogueTurnSpoken& e) {
                    auto it = state.conversations.find(e.conversation);
                    check(it != state.conversations.end(), "dialogue turn for a closed conversation");
                    auto& conv = it->second;
                    const auto& expected = conv.turns.size() % 2 == 0 ? conv.initiator : conv.partner;
                    check(e.speaker == expected, "dialogue turns must alternate speakers");
                    conv.turns.push_back({e.speaker, e.text, e.terminate});
                },
                [&](const ev::ConversationEnded& e) {
                    auto it = state.conversations.find(e.conversation);
                    check(it != state.conversations.end(), "conversation_ended for unknown conversation");
                    check(it->second.initiator == e.initiator && it->second.partner == e.partner,
                          "conversation_ended participants differ");
                    auto& a = state_of(state, e.initiator);
                    auto& b = state_of(state, e.partner);
                    a = end_conversation(std::move(a), config.conversation_cooldown);
                    b = end_conversation(std::move(b), config.conversation_cooldown);
                    state.conversations.erase(it);
                    queue_memory(state, e.initiator, e.initiator_memory);
                    queue_memory(state, e.partner, e.partner_memory);
                },
                [&](const ev::MemoryCompressed& e) {
                    commit_pending(state);
                    auto it = state.memories.find(e.agent);
                    check(it != state.memories.end(), "memory_compressed for unknown agent");
                    check(e.count == it->second.threshold, "memory_compressed count differs from threshold");
                    apply_summary(it->second, {e.first_seq, e.last_seq, e.track, e.summary});
                },
                [&](const ev::UserExchange& e) {
                    state_of(state, e.agent);
                    check(e.memory.kind == MemoryKind::user_exchange, "user_exchange must carry an interaction memory");
                    queue_memory(state, e.agent, e.memory);
                },
                [&](const ev::PlanRepaired& e) { state_of(state, e.agent); },
            },
            event.payload);
    } catch (const CorruptLogError&) {
        throw;
    } catch (const Error& e) {
        throw CorruptLogError(e.what());
    }
    state.next_event_seq = event.seq + 1;
}

void commit_pending(SimState& state) {
    for (auto& p : state.pending) {
        MemoryEvent event;
        event.tick = p.tick;
        event.track = p.draft.track();
        event.kind = p.draft.kind;
        event.text = std::move(p.draft.text);
        event.participants = std::move(p.draft.participants);
        event.scene = std::move(p.draft.scene);
        record_event(state.memories.at(p.agent), std::move(event));
    }
    state.pending.clear();
}

void finish_tick(SimState& state) {
    commit_pending(state);
    for (auto& agent : state.roster.agents()) {
        auto& s = agent.state;
        if (s.mode != AgentMode::conversing && s.cooldown > 0) --s.cooldown;
        if (s.mode == AgentMode::acting && --s.activity_ticks_left <= 0) {
            s.mode = AgentMode::idle;
            s.activity.reset();
            s.activity_ticks_left = 0;
        }
    }
}

std::vector<PairCandidate> select_conversation_pairs(const Roster& roster, int radius) {
    std::vector<PairCandidate> candidates;
    const auto& agents = roster.agents();
    auto eligible = [](const AgentState& s) { return s.mode != AgentMode::conversing && s.cooldown == 0; };
    for (std::size_t i = 0; i < agents.size(); ++i) {
        if (!eligible(agents[i].state)) continue;
        for (std::size_t j = i + 1; j < agents.size(); ++j) {
            if (!eligible(agents[j].state)) continue;
            const int d = manhattan(agents[i].state.position, agents[j].state.position);
            if (d <= radius) candidates.push_back({agents[i].profile.id, agents[j].profile.id, d});
        }
    }
    std::sort(candidates.begin(), candidates.end(), [](const PairCandidate& x, const PairCandidate& y) {
        return std::tie(x.distance, x.a, x.b) < std::tie(y.distance, y.a, y.b);
    });
    std::vector<PairCandidate> chosen;
    std::set<AgentId> busy;
    for (const auto& c : candidates) {
        if (busy.contains(c.a) || busy.contains(c.b)) continue;
        busy.insert(c.a);
        busy.insert(c.b);
        chosen.push_back(c);
    }
    return chosen;
}

MemoryDraft user_exchange_memory(const AgentProfile& agent, std::string_view user_text, std::string_view reply) {
    return {MemoryKind::user_exchange,
            "User said: " + std::string(user_text) + ". " + agent.name + " replied: " + std::string(reply) + ".",
            {},
            std::nullopt};
}

Simulation::Simulation(WorldMap map, Roster roster, SimConfig config, Providers providers)
    : Simulation(map, make_initial_state(std::move(roster), config), config, std::move(providers)) {}

Simulation::Simulation(WorldMap map, SimState state, SimConfig config, Providers providers)
    : map_(std::move(map)), config_(config), providers_(std::move(providers)), state_(std::move(state)) {
    validate(config_);
    if (!providers_.planner || !providers_.conversationalist) {
        throw PreconditionError("simulation needs both provider roles");
    }
    for (const auto& a : state_.roster.agents()) {
        if (!map_.has_scene(a.profile.home_scene)) {
            throw MissingSceneError("home scene '" + a.profile.home_scene + "' of '" + a.profile.id + "' is missing");
        }
        if (!state_.memories.contains(a.profile.id)) {
            throw ValidationError("state lacks a memory store for '" + a.profile.id + "'");
        }
    }
}

ContextBundle Simulation::context(const AgentId& agent) const {
    auto it = state_.memories.find(agent);
    if (it == state_.memories.end()) throw UnknownAgentError("unknown agent '" + agent + "'");
    return assemble_context(it->second);
}

void Simulation::inject_user_exchange(const AgentId& agent, const MemoryEvent& exchange, std::string session,
                                      std::string user_text, std::string reply) {
    state_.roster.at(agent);
    validate_memory_event(exchange);
    if (exchange.track != Track::interaction) {
        throw TrackMismatchError("user exchanges belong to the interaction track");
    }
    inbox_.push_back(ExchangeInput{agent,
                                   MemoryDraft{exchange.kind, exchange.text, exchange.participants, exchange.scene},
                                   std::move(session), std::move(user_text), std::move(reply)});
}

void Simulation::request_replan(const AgentId& agent, PlanDecision decision) {
    const auto& a = state_.roster.at(agent);
    if (!map_.has_scene(decision.destination)) {
        throw UnknownSceneError("cannot replan to unknown scene '" + decision.destination + "'");
    }
    if (decision.activity.empty()) decision.activity = default_activity(map_, decision.destination, a.profile);
    inbox_.push_back(ReplanInput{agent, std::move(decision)});
}

void Simulation::set_chat_hold(const AgentId& agent, bool held) {
    state_.roster.at(agent);
    if (held) {
        held_.insert(agent);
    } else {
        held_.erase(agent);
    }
}

void Simulation::emit(EventPayload payload, bool already_applied) {
    SimEvent event{state_.next_event_seq, state_.tick, std::move(payload)};
    if (already_applied) {
        state_.next_event_seq = event.seq + 1;
    } else {
        apply_event(state_, event, map_, config_);
    }
    current_.push_back(std::move(event));
}

std::vector<SimEvent> Simulation::tick() {
    current_.clear();
    ++state_.tick;
    drain_inbox();
    plan_idle_agents();
    move_agents();
    social_stage();
    memory_stage();
    return std::exchange(current_, {});
}

std::vector<SimEvent> Simulation::run(std::uint64_t ticks) {
    std::vector<SimEvent> log;
    auto deadline = std::chrono::steady_clock::now();
    for (std::uint64_t i = 0; i < ticks; ++i) {
        auto events = tick();
        log.insert(log.end(), std::make_move_iterator(events.begin()), std::make_move_iterator(events.end()));
        if (config_.tick_ms > 0) {
            deadline += std::chrono::milliseconds(config_.tick_ms);
            std::this_thread::sleep_until(deadline);
        }
    }
    return log;
}

void Simulation::drain_inbox() {
    while (!inbox_.empty()) {
        Input input = std::move(inbox_.front());
        inbox_.pop_front();
        if (auto* ex = std::get_if<ExchangeInput>(&input)) {
            emit(ev::UserExchange{ex->agent, ex->session, ex->user_text, ex->reply, ex->memory});
            continue;
        }
        auto& replan = std::get<ReplanInput>(input);
        const auto& s = state_.roster.at(replan.agent).state;
        if (s.conversation) {
            const auto id = *s.conversation;
            const auto& conv = state_.conversations.at(id);
            const auto& next = conv.turns.size() % 2 == 0 ? conv.initiator : conv.partner;
            const auto& leaver = state_.roster.at(replan.agent).profile;
            std::string text = next == replan.agent ? "Sorry, I have to go now."
                                                    : "Oh, you have to go? See you later, " + leaver.name + ".";
            emit(ev::DialogueTurnSpoken{id, next, std::move(text), true});
            close_conversation(id, "preempted");
        }
        start_plan(replan.agent, replan.decision, true);
    }
}

void Simulation::plan_idle_agents() {
    for (const auto& agent : state_.roster.agents()) {
        if (agent.state.mode != AgentMode::idle || held_.contains(agent.profile.id)) continue;
        const AgentId id = agent.profile.id;
        PlanOutcome outcome;
        try {
            outcome = plan_next(*providers_.planner, agent.profile, context(id), map_);
        } catch (const ProviderUnavailableError&) {
            ++degraded_;
            continue;
        }
        if (outcome.repaired_from) emit(ev::PlanRepaired{id, *outcome.repaired_from, outcome.decision.destination});
        start_plan(id, outcome.decision, false);
    }
}

void Simulation::start_plan(const AgentId& agent, const PlanDecision& decision, bool user_influenced) {
    const auto& a = state_.roster.at(agent);
    const Position here = a.state.position;
    const auto current_scene = scene_at(map_, here);
    Path path;
    if (current_scene != decision.destination) {
        try {
            path = find_path(map_, here, scene_anchor(map_, decision.destination));
        } catch (const NoRouteError&) {
            ++degraded_;
            return;
        }
    }
    std::optional<MemoryDraft> memory;
    if (!path.empty()) {
        const auto to = place_label(map_, decision.destination);
        std::string text = current_scene ? a.profile.name + " left the " + place_label(map_, current_scene) +
                                               ", heading to the " + to
                                         : a.profile.name + " headed to the " + to;
        memory = MemoryDraft{MemoryKind::movement, text + " to go " + decision.activity, {}, current_scene};
    }
    emit(ev::Planned{agent, decision.destination, decision.activity, decision.rationale, path.steps, user_influenced,
                     std::move(memory)});
    if (path.empty()) arrive(agent);
}

void Simulation::arrive(const AgentId& agent) {
    const auto& a = state_.roster.at(agent);
    const auto scene = scene_at(map_, a.state.position);
    const SceneId where = scene.value_or(a.state.destination.value_or(a.profile.home_scene));
    const auto label = place_label(map_, where);
    const std::string activity = a.state.planned_activity.value_or(default_activity(map_, where, a.profile));
    const std::string name = a.profile.name;
    emit(ev::Arrived{agent, where, a.state.position,
                     MemoryDraft{MemoryKind::arrival, name + " arrived at the " + label, {}, where}});
    emit(ev::ActivityStarted{agent, activity, where, config_.activity_duration,
                             MemoryDraft{MemoryKind::activity, name + " started " + activity + " at the " + label, {},
                                         where}});
}

void Simulation::move_agents() {
    for (std::size_t i = 0; i < state_.roster.size(); ++i) {
        const auto& s = state_.roster.agents()[i].state;
        if (s.mode != AgentMode::moving) continue;
        const AgentId id = s.id;
        emit(ev::Moved{id, s.position, s.path->steps[s.path_cursor]});
        if (state_.roster.at(id).state.mode == AgentMode::idle) arrive(id);
    }
}

void Simulation::social_stage() {
    for (const auto& pair : select_conversation_pairs(state_.roster, config_.proximity_radius)) {
        emit(ev::ConversationStarted{state_.next_conversation, pair.a, pair.b, pair.distance});
    }
    std::vector<ConversationId> open;
    for (const auto& [id, conv] : state_.conversations) open.push_back(id);
    for (auto id : open) {
        const auto& conv = state_.conversations.at(id);
        const auto& a = state_.roster.at(conv.initiator).profile;
        const auto& b = state_.roster.at(conv.partner).profile;
        auto turn = next_dialogue_turn(*providers_.planner, conv.turns, a, b, context(a.id), context(b.id),
                                       config_.max_turns);
        emit(ev::DialogueTurnSpoken{id, turn.speaker, turn.text, turn.terminate});
        if (turn.terminate) {
            close_conversation(id, state_.conversations.at(id).turns.size() >= config_.max_turns ? "max_turns"
                                                                                                   : "finished");
        }
    }
}

void Simulation::close_conversation(ConversationId id, std::string reason) {
    const auto& conv = state_.conversations.at(id);
    const auto& a = state_.roster.at(conv.initiator);
    const auto& b = state_.roster.at(conv.partner);
    std::string transcript;
    for (const auto& t : conv.turns) {
        if (!transcript.empty()) transcript += " ";
        transcript += state_.roster.at(t.speaker).profile.name + ": " + t.text;
    }
    const auto scene = scene_at(map_, a.state.position);
    const std::string where = scene ? " in the " + place_label(map_, scene) : "";
    auto memory_for = [&](const Agent& self, const Agent& other) {
        return MemoryDraft{MemoryKind::agent_dialogue,
                           self.profile.name + " had a conversation with " + other.profile.name + where + ": " +
                               transcript,
                           {other.profile.id},
                           scene};
    };
    emit(ev::ConversationEnded{id, conv.initiator, conv.partner, std::move(reason), conv.turns.size(),
                               memory_for(a, b), memory_for(b, a)});
}

void Simulation::memory_stage() {
    commit_pending(state_);
    const Summarizer summarizer = [this](std::span<const MemoryEvent> events) {
        return summarize_events(*providers_.planner, events);
    };
    for (auto& [id, store] : state_.memories) {
        try {
            for (const auto& s : maybe_compress(store, summarizer)) {
                emit(ev::MemoryCompressed{id, s.track, s.first_seq, s.last_seq, store.threshold, s.text}, true);
            }
        } catch (const ProviderUnavailableError&) {
            ++degraded_;
        }
    }
    finish_tick(state_);
}

}  // namespace lifespace
