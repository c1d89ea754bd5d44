#include "lifespace/persistence.hpp"

#include "lifespace/errors.hpp"
#include "lifespace/hash.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace lifespace {
namespace {

using nlohmann::json;

// Field access that reports the dotted path of whatever is missing or mistyped.
template <typename T>
T field(const json& j, const char* key, const std::string& path) {
    const std::string where = path.empty() ? key : path + "." + key;
    if (!j.is_object() || !j.contains(key)) throw CorruptSnapshotError("snapshot field '" + where + "' is missing");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw CorruptSnapshotError("snapshot field '" + where + "' is invalid: " + e.what());
    }
}

const json& sub(const json& j, const char* key, const std::string& path) {
    const std::string where = path.empty() ? key : path + "." + key;
    if (!j.is_object() || !j.contains(key)) throw CorruptSnapshotError("snapshot field '" + where + "' is missing");
    return j.at(key);
}

json pos_json(Position p) { return json::array({p.x, p.y}); }

Position pos_from(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer()) {
        throw CorruptSnapshotError("snapshot field '" + path + "' must be [x, y]");
    }
    return {j[0].get<int>(), j[1].get<int>()};
}

json opt(const std::optional<std::string>& v) { return v ? json(*v) : json(nullptr); }

std::optional<std::string> opt_from(const json& j, const char* key, const std::string& path) {
    const auto& v = sub(j, key, path);
    if (v.is_null()) return std::nullopt;
    if (!v.is_string()) throw CorruptSnapshotError("snapshot field '" + path + "." + key + "' must be a string");
    return v.get<std::string>();
}

json profile_json(const AgentProfile& p) {
    return {{"id", p.id},
            {"name", p.name},
            {"occupation", p.occupation},
            {"personality", p.personality},
            {"home_scene", p.home_scene},
            {"bio", p.bio},
            {"primary", p.primary}};
}

AgentProfile profile_from(const json& j, const std::string& path) {
    return {field<std::string>(j, "id", path),          field<std::string>(j, "name", path),
            field<std::string>(j, "occupation", path),  field<std::string>(j, "personality", path),
            field<std::string>(j, "home_scene", path),  field<std::string>(j, "bio", path),
            field<bool>(j, "primary", path)};
}

json agent_state_json(const AgentState& s) {
    json path = nullptr;
    if (s.path) {
        path = json::array();
        for (const auto& p : s.path->steps) path.push_back(pos_json(p));
    }
    return {{"id", s.id},
            {"position", pos_json(s.position)},
            {"mode", to_string(s.mode)},
            {"path", path},
            {"path_cursor", s.path_cursor},
            {"destination", opt(s.destination)},
            {"planned_activity", opt(s.planned_activity)},
            {"activity", opt(s.activity)},
            {"activity_ticks_left", s.activity_ticks_left},
            {"conversation", s.conversation ? json(*s.conversation) : json(nullptr)},
            {"cooldown", s.cooldown}};
}

AgentState agent_state_from(const json& j, const std::string& path) {
    AgentState s;
    s.id = field<std::string>(j, "id", path);
    s.position = pos_from(sub(j, "position", path), path + ".position");
    auto mode = parse_agent_mode(field<std::string>(j, "mode", path));
    if (!mode) throw CorruptSnapshotError("snapshot field '" + path + ".mode' is not a valid mode");
    s.mode = *mode;
    if (const auto& p = sub(j, "path", path); !p.is_null()) {
        if (!p.is_array()) throw CorruptSnapshotError("snapshot field '" + path + ".path' must be an array");
        Path steps;
        for (std::size_t i = 0; i < p.size(); ++i) {
            steps.steps.push_back(pos_from(p[i], path + ".path[" + std::to_string(i) + "]"));
        }
        s.path = std::move(steps);
    }
    s.path_cursor = field<std::size_t>(j, "path_cursor", path);
    s.destination = opt_from(j, "destination", path);
    s.planned_activity = opt_from(j, "planned_activity", path);
    s.activity = opt_from(j, "activity", path);
    s.activity_ticks_left = field<int>(j, "activity_ticks_left", path);
    if (const auto& c = sub(j, "conversation", path); !c.is_null()) {
        s.conversation = field<ConversationId>(j, "conversation", path);
    }
    s.cooldown = field<int>(j, "cooldown", path);
    if (auto why = coherence_violation(s)) {
        throw CorruptSnapshotError("snapshot field '" + path + "' is incoherent: " + *why);
    }
    return s;
}

json memory_event_json(const MemoryEvent& e) {
    return {{"seq", e.seq},
            {"tick", e.tick},
            {"track", to_string(e.track)},
            {"kind", to_string(e.kind)},
            {"text", e.text},
            {"participants", e.participants},
            {"scene", opt(e.scene)}};
}

MemoryEvent memory_event_from(const json& j, const std::string& path) {
    MemoryEvent e;
    e.seq = field<std::uint64_t>(j, "seq", path);
    e.tick = field<std::uint64_t>(j, "tick", path);
    auto track = parse_track(field<std::string>(j, "track", path));
    auto kind = parse_memory_kind(field<std::string>(j, "kind", path));
    if (!track || !kind) throw CorruptSnapshotError("snapshot field '" + path + "' has an unknown track or kind");
    e.track = *track;
    e.kind = *kind;
    e.text = field<std::string>(j, "text", path);
    e.participants = field<std::vector<std::string>>(j, "participants", path);
    e.scene = opt_from(j, "scene", path);
    try {
        validate_memory_event(e);
    } catch (const Error& err) {
        throw CorruptSnapshotError("snapshot field '" + path + "': " + err.what());
    }
    return e;
}

json store_json(const MemoryStore& s) {
    json out{{"agent", s.agent}, {"threshold", s.threshold}, {"next_seq", s.next_seq}};
    for (auto track : {Track::interaction, Track::life_space}) {
        json recent = json::array();
        for (const auto& e : s.recent(track)) recent.push_back(memory_event_json(e));
        json summaries = json::array();
        for (const auto& l : s.summaries(track)) {
            summaries.push_back({{"first_seq", l.first_seq}, {"last_seq", l.last_seq}, {"text", l.text}});
        }
        out["short_term"][std::string(to_string(track))] = recent;
        out["long_term"][std::string(to_string(track))] = summaries;
    }
    return out;
}

MemoryStore store_from(const json& j, const std::string& path) {
    MemoryStore s;
    s.agent = field<std::string>(j, "agent", path);
    s.threshold = field<std::size_t>(j, "threshold", path);
    if (s.threshold < 1) throw CorruptSnapshotError("snapshot field '" + path + ".threshold' must be >= 1");
    s.next_seq = field<std::uint64_t>(j, "next_seq", path);
    for (auto track : {Track::interaction, Track::life_space}) {
        const std::string name(to_string(track));
        const auto& recent = sub(sub(j, "short_term", path), name.c_str(), path + ".short_term");
        for (std::size_t i = 0; i < recent.size(); ++i) {
            auto e = memory_event_from(recent[i], path + ".short_term." + name + "[" + std::to_string(i) + "]");
            if (e.track != track) throw CorruptSnapshotError("snapshot field '" + path + "' mixes tracks");
            s.recent(track).push_back(std::move(e));
        }
        const auto& summaries = sub(sub(j, "long_term", path), name.c_str(), path + ".long_term");
        for (std::size_t i = 0; i < summaries.size(); ++i) {
            const auto p = path + ".long_term." + name + "[" + std::to_string(i) + "]";
            s.summaries(track).push_back({field<std::uint64_t>(summaries[i], "first_seq", p),
                                          field<std::uint64_t>(summaries[i], "last_seq", p), track,
                                          field<std::string>(summaries[i], "text", p)});
        }
    }
    return s;
}

json state_json(const SimState& state) {
    json agents = json::array();
    for (const auto& a : state.roster.agents()) {
        agents.push_back({{"profile", profile_json(a.profile)}, {"state", agent_state_json(a.state)}});
    }
    json memories = json::object();
    for (const auto& [id, store] : state.memories) memories[id] = store_json(store);
    json conversations = json::array();
    for (const auto& [id, c] : state.conversations) {
        json turns = json::array();
        for (const auto& t : c.turns) turns.push_back({{"speaker", t.speaker}, {"text", t.text}, {"terminate", t.terminate}});
        conversations.push_back({{"id", c.id},
                                 {"initiator", c.initiator},
                                 {"partner", c.partner},
                                 {"turns", turns},
                                 {"started_tick", c.started_tick}});
    }
    json pending = json::array();
    for (const auto& p : state.pending) {
        pending.push_back({{"agent", p.agent},
                           {"tick", p.tick},
                           {"kind", to_string(p.draft.kind)},
                           {"text", p.draft.text},
                           {"participants", p.draft.participants},
                           {"scene", opt(p.draft.scene)}});
    }
    return {{"tick", state.tick},
            {"seed", state.seed},
            {"next_event_seq", state.next_event_seq},
            {"next_conversation", state.next_conversation},
            {"agents", agents},
            {"memories", memories},
            {"conversations", conversations},
            {"pending", pending}};
}

SimState state_from(const json& j) {
    const std::string root = "state";
    SimState state;
    state.tick = field<std::uint64_t>(j, "tick", root);
    state.seed = field<std::uint64_t>(j, "seed", root);
    state.next_event_seq = field<std::uint64_t>(j, "next_event_seq", root);
    state.next_conversation = field<ConversationId>(j, "next_conversation", root);

    std::vector<Agent> agents;
    const auto& list = sub(j, "agents", root);
    if (!list.is_array()) throw CorruptSnapshotError("snapshot field 'state.agents' must be an array");
    for (std::size_t i = 0; i < list.size(); ++i) {
        const auto p = root + ".agents[" + std::to_string(i) + "]";
        agents.push_back({profile_from(sub(list[i], "profile", p), p + ".profile"),
                          agent_state_from(sub(list[i], "state", p), p + ".state")});
    }
    try {
        state.roster = Roster(std::move(agents));
    } catch (const Error& e) {
        throw CorruptSnapshotError(std::string("snapshot field 'state.agents': ") + e.what());
    }

    const auto& memories = sub(j, "memories", root);
    for (const auto& a : state.roster.agents()) {
        const auto& id = a.profile.id;
        const auto p = root + ".memories." + id;
        state.memories.emplace(id, store_from(sub(memories, id.c_str(), root + ".memories"), p));
    }

    const auto& conversations = sub(j, "conversations", root);
    for (std::size_t i = 0; i < conversations.size(); ++i) {
        const auto p = root + ".conversations[" + std::to_string(i) + "]";
        const auto& c = conversations[i];
        Conversation conv{field<ConversationId>(c, "id", p), field<std::string>(c, "initiator", p),
                          field<std::string>(c, "partner", p), {}, field<std::uint64_t>(c, "started_tick", p)};
        const auto& turns = sub(c, "turns", p);
        for (std::size_t t = 0; t < turns.size(); ++t) {
            const auto tp = p + ".turns[" + std::to_string(t) + "]";
            conv.turns.push_back({field<std::string>(turns[t], "speaker", tp), field<std::string>(turns[t], "text", tp),
                                  field<bool>(turns[t], "terminate", tp)});
        }
        state.conversations.emplace(conv.id, std::move(conv));
    }

    const auto& pending = sub(j, "pending", root);
    for (std::size_t i = 0; i < pending.size(); ++i) {
        const auto p = root + ".pending[" + std::to_string(i) + "]";
        auto kind = parse_memory_kind(field<std::string>(pending[i], "kind", p));
        if (!kind) throw CorruptSnapshotError("snapshot field '" + p + ".kind' is unknown");
        state.pending.push_back({field<std::string>(pending[i], "agent", p), field<std::uint64_t>(pending[i], "tick", p),
                                 MemoryDraft{*kind, field<std::string>(pending[i], "text", p),
                                             field<std::vector<std::string>>(pending[i], "participants", p),
                                             opt_from(pending[i], "scene", p)}});
    }
    return state;
}

json config_json(const SimConfig& c) {
    return {{"seed", c.seed},
            {"tick_ms", c.tick_ms},
            {"proximity_radius", c.proximity_radius},
            {"conversation_cooldown", c.conversation_cooldown},
            {"activity_duration", c.activity_duration},
            {"memory_threshold", c.memory_threshold},
            {"max_turns", c.max_turns},
            {"chat_holds_agent", c.chat_holds_agent}};
}

SimConfig config_from(const json& j, const std::string& path) {
    SimConfig c;
    c.seed = field<std::uint64_t>(j, "seed", path);
    c.tick_ms = field<int>(j, "tick_ms", path);
    c.proximity_radius = field<int>(j, "proximity_radius", path);
    c.conversation_cooldown = field<int>(j, "conversation_cooldown", path);
    c.activity_duration = field<int>(j, "activity_duration", path);
    c.memory_threshold = field<std::size_t>(j, "memory_threshold", path);
    c.max_turns = field<std::size_t>(j, "max_turns", path);
    c.chat_holds_agent = field<bool>(j, "chat_holds_agent", path);
    try {
        validate(c);
    } catch (const ValidationError& e) {
        throw CorruptSnapshotError("snapshot field '" + path + "': " + e.what());
    }
    return c;
}

json snapshot_json(const WorldMap& map, const SimConfig& config, const SimState& state) {
    return {{"format", "lifespace-snapshot/1"},
            {"map", serialize_map(map)},
            {"config", config_json(config)},
            {"state", state_json(state)}};
}

Snapshot snapshot_from(const json& j) {
    if (field<std::string>(j, "format", "") != "lifespace-snapshot/1") {
        throw CorruptSnapshotError("snapshot field 'format' is not lifespace-snapshot/1");
    }
    Snapshot s;
    try {
        s.map = load_map(field<std::string>(j, "map", ""));
    } catch (const CorruptSnapshotError&) {
        throw;
    } catch (const Error& e) {
        throw CorruptSnapshotError(std::string("snapshot field 'map': ") + e.what());
    }
    s.config = config_from(sub(j, "config", ""), "config");
    s.state = state_from(sub(j, "state", ""));
    for (const auto& a : s.state.roster.agents()) {
        if (!s.map.has_scene(a.profile.home_scene) || !s.map.walkable(a.state.position)) {
            throw CorruptSnapshotError("snapshot field 'state.agents' places '" + a.profile.id + "' off the map");
        }
    }
    return s;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CorruptSnapshotError("cannot read snapshot '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

std::string state_to_json(const SimState& state) { return state_json(state).dump(); }

std::string state_digest(const SimState& state) { return Fnv1a().add(state_to_json(state)).hex(); }

SimState state_from_json(std::string_view text) {
    try {
        return state_from(json::parse(text));
    } catch (const json::parse_error& e) {
        throw CorruptSnapshotError(std::string("state is not valid JSON: ") + e.what());
    }
}

std::string config_to_json(const SimConfig& config) { return config_json(config).dump(); }

SimConfig config_from_json(std::string_view text) {
    try {
        return config_from(json::parse(text), "config");
    } catch (const json::parse_error& e) {
        throw CorruptSnapshotError(std::string("config is not valid JSON: ") + e.what());
    }
}

std::string snapshot_to_json(const WorldMap& map, const SimConfig& config, const SimState& state) {
    return snapshot_json(map, config, state).dump();
}

Snapshot snapshot_from_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw CorruptSnapshotError(std::string("snapshot is not valid JSON: ") + e.what());
    }
    return snapshot_from(j);
}

void save_snapshot(const std::string& path, const WorldMap& map, const SimConfig& config, const SimState& state) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write snapshot '" + tmp + "'");
        out << snapshot_to_json(map, config, state) << '\n';
        if (!out.flush()) throw Error("failed writing snapshot '" + tmp + "'");
    }
    std::filesystem::rename(tmp, path);
}

Snapshot load_snapshot(const std::string& path) { return snapshot_from_json(read_file(path)); }

void EventLogWriter::header(const WorldMap& map, const SimConfig& config, const SimState& initial) {
    nlohmann::ordered_json j;
    j["seq"] = 0;
    j["tick"] = initial.tick;
    j["type"] = "header";
    j["agents"] = nlohmann::ordered_json::array();
    j["data"] = snapshot_json(map, config, initial);
    out_ << j.dump() << '\n';
    last_seq_ = initial.next_event_seq - 1;
}

void EventLogWriter::event(const SimEvent& event) {
    out_ << to_json_line(event) << '\n';
    last_seq_ = event.seq;
    ++count_;
}

void EventLogWriter::events(const std::vector<SimEvent>& events) {
    for (const auto& e : events) event(e);
}

void EventLogWriter::checkpoint(const SimState& state) {
    checkpoints_.push_back({state.tick, last_seq_, state_digest(state)});
}

void EventLogWriter::trailer(const SimState& final_state) {
    nlohmann::ordered_json j;
    j["seq"] = last_seq_;
    j["tick"] = final_state.tick;
    j["type"] = "trailer";
    j["agents"] = nlohmann::ordered_json::array();
    auto checkpoints = nlohmann::ordered_json::array();
    for (const auto& c : checkpoints_) checkpoints.push_back({c.tick, c.seq, c.digest});
    j["data"] = {{"digest", state_digest(final_state)}, {"events", count_}, {"checkpoints", std::move(checkpoints)}};
    out_ << j.dump() << '\n';
    out_.flush();
}

void ReplayCursor::advance_to(std::uint64_t tick) {
    while (state_.tick < tick) {
        if (tick_open_) finish_tick(state_);
        ++state_.tick;
        tick_open_ = true;
    }
}

void ReplayCursor::apply(const SimEvent& event) {
    if (event.tick < state_.tick || (event.tick == state_.tick && !tick_open_)) {
        throw CorruptLogError("event " + std::to_string(event.seq) + " goes back in time");
    }
    advance_to(event.tick);
    apply_event(state_, event, map_, config_);
}

void ReplayCursor::finish_through(std::uint64_t tick) {
    advance_to(tick);
    if (tick_open_) finish_tick(state_);
    tick_open_ = false;
}

ReplayReport replay_log(std::istream& in) {
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) lines.push_back(std::move(line));
    std::size_t line_no = 0;
    auto fail = [&](const std::string& what) {
        return CorruptLogError("line " + std::to_string(line_no) + ": " + what);
    };

    if (lines.empty()) throw CorruptLogError("line 1: log is empty");
    line_no = 1;
    Snapshot initial;
    try {
        auto head = json::parse(lines[0]);
        if (head.value("type", "") != "header") throw fail("first record must be the header");
        initial = snapshot_from(head.at("data"));
    } catch (const json::exception& e) {
        throw fail(std::string("unreadable header: ") + e.what());
    } catch (const CorruptSnapshotError& e) {
        throw fail(e.what());
    }

    ReplayReport report;
    std::size_t trailer_line = 0;
    for (std::size_t i = lines.size(); i-- > 1;) {
        if (lines[i].empty()) continue;
        trailer_line = i;
        break;
    }
    std::uint64_t final_tick = 0;
    std::uint64_t trailer_events = 0;
    std::uint64_t trailer_seq = 0;
    struct Checkpoint {
        std::uint64_t tick;
        std::uint64_t seq;
        std::string digest;
    };
    std::vector<Checkpoint> checkpoints;
    {
        line_no = trailer_line + 1;
        json probe;
        try {
            probe = json::parse(lines.at(trailer_line));
        } catch (const std::exception&) {
            throw fail("missing trailer record");
        }
        if (!probe.is_object() || probe.value("type", "") != "trailer") throw fail("missing trailer record");
        try {
            report.expected_digest = probe.at("data").at("digest").get<std::string>();
            final_tick = probe.at("tick").get<std::uint64_t>();
            trailer_events = probe.at("data").at("events").get<std::uint64_t>();
            trailer_seq = probe.at("seq").get<std::uint64_t>();
            if (probe.at("data").contains("checkpoints")) {
                for (const auto& c : probe.at("data").at("checkpoints")) {
                    checkpoints.push_back(
                        {c.at(0).get<std::uint64_t>(), c.at(1).get<std::uint64_t>(), c.at(2).get<std::string>()});
                }
            }
        } catch (const json::exception& e) {
            throw fail(std::string("malformed trailer: ") + e.what());
        }
    }

    ReplayCursor cursor(initial.map, initial.config, initial.state);
    std::uint64_t expected_seq = initial.state.next_event_seq;
    std::uint64_t last_good_seq = expected_seq - 1;
    bool diverged = false;
    std::size_t next_checkpoint = 0;

    auto diverge = [&](std::uint64_t seq, std::string detail) {
        diverged = true;
        report.first_divergent_seq = seq;
        report.detail = std::move(detail);
    };
    auto check_through = [&](std::uint64_t tick) {
        while (!diverged && next_checkpoint < checkpoints.size() && checkpoints[next_checkpoint].tick <= tick) {
            const auto& c = checkpoints[next_checkpoint++];
            if (c.tick < cursor.state().tick) continue;
            cursor.finish_through(c.tick);
            if (state_digest(cursor.state()) != c.digest) {
                diverge(last_good_seq + 1, "state after tick " + std::to_string(c.tick) + " differs");
            } else {
                last_good_seq = c.seq;
            }
        }
    };

    for (std::size_t i = 1; i < trailer_line; ++i) {
        line_no = i + 1;
        if (lines[i].empty()) continue;
        SimEvent event;
        try {
            event = parse_event_line(lines[i]);
        } catch (const CorruptLogError& e) {
            throw fail(e.what());
        }
        ++report.events;
        if (diverged) continue;
        if (event.seq != expected_seq) {
            diverge(expected_seq, "expected seq " + std::to_string(expected_seq) + ", found " +
                                      std::to_string(event.seq));
            continue;
        }
        if (event.tick > 0) check_through(event.tick - 1);
        if (diverged) continue;
        try {
            cursor.apply(event);
        } catch (const CorruptLogError& e) {
            diverge(event.seq, e.what());
            continue;
        }
        ++expected_seq;
    }

    if (!diverged && trailer_seq != expected_seq - 1) {
        diverge(expected_seq, "log ends at seq " + std::to_string(expected_seq - 1) + " but the trailer expects " +
                                  std::to_string(trailer_seq));
    }
    if (!diverged) check_through(final_tick);
    if (!diverged) cursor.finish_through(final_tick);
    report.actual_digest = state_digest(cursor.state());
    if (!diverged && trailer_events != report.events) {
        diverged = true;
        report.detail = "trailer counts " + std::to_string(trailer_events) + " events, log holds " +
                        std::to_string(report.events);
    }
    report.match = !diverged && report.actual_digest == report.expected_digest;
    if (!diverged && !report.match) {
        report.first_divergent_seq = last_good_seq + 1;
        report.detail = "final state digest differs";
    }
    return report;
}

ReplayReport replay_log_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CorruptLogError("cannot read log '" + path + "'");
    return replay_log(in);
}

}  // namespace lifespace
