#include "lifespace/events.hpp"

#include "lifespace/errors.hpp"

#include <json.hpp>

namespace lifespace {
namespace {

using Json = nlohmann::ordered_json;

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

Json pos_json(Position p) { return Json::array({p.x, p.y}); }

Position pos_from(const Json& j) {
    if (!j.is_array() || j.size() != 2) throw CorruptLogError("position must be [x, y]");
    return {j.at(0).get<int>(), j.at(1).get<int>()};
}

Json memory_json(const MemoryDraft& m) {
    Json j;
    j["kind"] = to_string(m.kind);
    j["track"] = to_string(m.track());
    j["text"] = m.text;
    j["participants"] = m.participants;
    j["scene"] = m.scene ? Json(*m.scene) : Json(nullptr);
    return j;
}

MemoryDraft memory_from(const Json& j) {
    MemoryDraft m;
    auto kind = parse_memory_kind(j.at("kind").get<std::string>());
    if (!kind) throw CorruptLogError("unknown memory kind");
    m.kind = *kind;
    if (auto track = parse_track(j.at("track").get<std::string>()); !track || *track != m.track()) {
        throw CorruptLogError("memory track does not match its kind");
    }
    m.text = j.at("text").get<std::string>();
    m.participants = j.at("participants").get<std::vector<AgentId>>();
    if (!j.at("scene").is_null()) m.scene = j.at("scene").get<std::string>();
    return m;
}

Json opt_memory_json(const std::optional<MemoryDraft>& m) { return m ? memory_json(*m) : Json(nullptr); }

Json data_of(const EventPayload& payload) {
    return std::visit(
        Overloaded{
            [](const ev::Planned& e) {
                Json j;
                j["destination"] = e.destination;
                j["activity"] = e.activity;
                j["rationale"] = e.rationale;
                Json path = Json::array();
                for (const auto& p : e.path) path.push_back(pos_json(p));
                j["path"] = path;
                j["user_influenced"] = e.user_influenced;
                j["memory"] = opt_memory_json(e.memory);
                return j;
            },
            [](const ev::Moved& e) {
                Json j;
                j["from"] = pos_json(e.from);
                j["to"] = pos_json(e.to);
                return j;
            },
            [](const ev::Arrived& e) {
                Json j;
                j["scene"] = e.scene;
                j["position"] = pos_json(e.position);
                j["memory"] = memory_json(e.memory);
                return j;
            },
            [](const ev::ActivityStarted& e) {
                Json j;
                j["activity"] = e.activity;
                j["scene"] = e.scene;
                j["duration"] = e.duration;
                j["memory"] = memory_json(e.memory);
                return j;
            },
            [](const ev::ConversationStarted& e) {
                Json j;
                j["conversation"] = e.conversation;
                j["distance"] = e.distance;
                return j;
            },
            [](const ev::DialogueTurnSpoken& e) {
                Json j;
                j["conversation"] = e.conversation;
                j["speaker"] = e.speaker;
                j["text"] = e.text;
                j["terminate"] = e.terminate;
                return j;
            },
            [](const ev::ConversationEnded& e) {
                Json j;
                j["conversation"] = e.conversation;
                j["reason"] = e.reason;
                j["turns"] = e.turns;
                j["memories"] = Json::array({memory_json(e.initiator_memory), memory_json(e.partner_memory)});
                return j;
            },
            [](const ev::MemoryCompressed& e) {
                Json j;
                j["track"] = to_string(e.track);
                j["first_seq"] = e.first_seq;
                j["last_seq"] = e.last_seq;
                j["count"] = e.count;
                j["summary"] = e.summary;
                return j;
            },
            [](const ev::UserExchange& e) {
                Json j;
                j["session"] = e.session;
                j["user_text"] = e.user_text;
                j["reply"] = e.reply;
                j["memory"] = memory_json(e.memory);
                return j;
            },
            [](const ev::PlanRepaired& e) {
                Json j;
                j["requested"] = e.requested;
                j["repaired_to"] = e.repaired_to;
                return j;
            },
        },
        payload);
}

const AgentId& single(const std::vector<AgentId>& agents, std::size_t n) {
    if (agents.size() != n) throw CorruptLogError("expected " + std::to_string(n) + " agent(s)");
    return agents.front();
}

EventPayload payload_from(std::string_view type, const std::vector<AgentId>& agents, const Json& d) {
    if (type == "planned") {
        ev::Planned e;
        e.agent = single(agents, 1);
        e.destination = d.at("destination").get<std::string>();
        e.activity = d.at("activity").get<std::string>();
        e.rationale = d.at("rationale").get<std::string>();
        for (const auto& p : d.at("path")) e.path.push_back(pos_from(p));
        e.user_influenced = d.at("user_influenced").get<bool>();
        if (!d.at("memory").is_null()) e.memory = memory_from(d.at("memory"));
        return e;
    }
    if (type == "moved") {
        return ev::Moved{single(agents, 1), pos_from(d.at("from")), pos_from(d.at("to"))};
    }
    if (type == "arrived") {
        return ev::Arrived{single(agents, 1), d.at("scene").get<std::string>(), pos_from(d.at("position")),
                           memory_from(d.at("memory"))};
    }
    if (type == "activity_started") {
        return ev::ActivityStarted{single(agents, 1), d.at("activity").get<std::string>(),
                                   d.at("scene").get<std::string>(), d.at("duration").get<int>(),
                                   memory_from(d.at("memory"))};
    }
    if (type == "conversation_started") {
        single(agents, 2);
        return ev::ConversationStarted{d.at("conversation").get<ConversationId>(), agents[0], agents[1],
                                       d.at("distance").get<int>()};
    }
    if (type == "dialogue_turn") {
        return ev::DialogueTurnSpoken{d.at("conversation").get<ConversationId>(), d.at("speaker").get<std::string>(),
                                      d.at("text").get<std::string>(), d.at("terminate").get<bool>()};
    }
    if (type == "conversation_ended") {
        single(agents, 2);
        const auto& mem = d.at("memories");
        if (!mem.is_array() || mem.size() != 2) throw CorruptLogError("conversation_ended needs two memories");
        return ev::ConversationEnded{d.at("conversation").get<ConversationId>(),
                                     agents[0],
                                     agents[1],
                                     d.at("reason").get<std::string>(),
                                     d.at("turns").get<std::size_t>(),
                                     memory_from(mem.at(0)),
                                     memory_from(mem.at(1))};
    }
    if (type == "memory_compressed") {
        auto track = parse_track(d.at("track").get<std::string>());
        if (!track) throw CorruptLogError("unknown track");
        return ev::MemoryCompressed{single(agents, 1),
                                    *track,
                                    d.at("first_seq").get<std::uint64_t>(),
                                    d.at("last_seq").get<std::uint64_t>(),
                                    d.at("count").get<std::size_t>(),
                                    d.at("summary").get<std::string>()};
    }
    if (type == "user_exchange") {
        return ev::UserExchange{single(agents, 1), d.at("session").get<std::string>(),
                                d.at("user_text").get<std::string>(), d.at("reply").get<std::string>(),
                                memory_from(d.at("memory"))};
    }
    if (type == "plan_repaired") {
        return ev::PlanRepaired{single(agents, 1), d.at("requested").get<std::string>(),
                                d.at("repaired_to").get<std::string>()};
    }
    throw CorruptLogError("unknown event type '" + std::string(type) + "'");
}

}  // namespace

std::string_view SimEvent::type() const {
    return std::visit(Overloaded{
                          [](const ev::Planned&) { return std::string_view("planned"); },
                          [](const ev::Moved&) { return std::string_view("moved"); },
                          [](const ev::Arrived&) { return std::string_view("arrived"); },
                          [](const ev::ActivityStarted&) { return std::string_view("activity_started"); },
                          [](const ev::ConversationStarted&) { return std::string_view("conversation_started"); },
                          [](const ev::DialogueTurnSpoken&) { return std::string_view("dialogue_turn"); },
                          [](const ev::ConversationEnded&) { return std::string_view("conversation_ended"); },
                          [](const ev::MemoryCompressed&) { return std::string_view("memory_compressed"); },
                          [](const ev::UserExchange&) { return std::string_view("user_exchange"); },
                          [](const ev::PlanRepaired&) { return std::string_view("plan_repaired"); },
                      },
                      payload);
}

std::vector<AgentId> SimEvent::agents() const {
    return std::visit(Overloaded{
                          [](const ev::ConversationStarted& e) { return std::vector<AgentId>{e.initiator, e.partner}; },
                          [](const ev::ConversationEnded& e) { return std::vector<AgentId>{e.initiator, e.partner}; },
                          [](const ev::DialogueTurnSpoken& e) { return std::vector<AgentId>{e.speaker}; },
                          [](const auto& e) { return std::vector<AgentId>{e.agent}; },
                      },
                      payload);
}

std::string to_json_line(const SimEvent& event) {
    Json j;
    j["seq"] = event.seq;
    j["tick"] = event.tick;
    j["type"] = event.type();
    j["agents"] = event.agents();
    j["data"] = data_of(event.payload);
    return j.dump();
}

SimEvent parse_event_line(std::string_view line) {
    Json j;
    try {
        j = Json::parse(line);
    } catch (const Json::parse_error& e) {
        throw CorruptLogError(std::string("invalid JSON: ") + e.what());
    }
    try {
        SimEvent event;
        event.seq = j.at("seq").get<std::uint64_t>();
        event.tick = j.at("tick").get<std::uint64_t>();
        event.payload = payload_from(j.at("type").get<std::string>(), j.at("agents").get<std::vector<AgentId>>(),
                                     j.at("data"));
        return event;
    } catch (const Json::exception& e) {
        throw CorruptLogError(std::string("malformed event: ") + e.what());
    }
}

}  // namespace lifespace
