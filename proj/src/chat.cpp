#include "lifespace/chat.hpp"

#include "lifespace/errors.hpp"

#include <json.hpp>

namespace lifespace {

std::string_view to_string(ChatRole r) { return r == ChatRole::user ? "user" : "agent"; }

ChatSession open_session(SimHandle& sim, const AgentId& agent, std::string id) {
    sim.profile(agent);
    if (sim.chat_holds_agent()) sim.set_chat_hold(agent, true);
    return {std::move(id), agent, {}, true};
}

ChatResult user_message(ChatSession& session, std::string_view text, SimHandle& sim) {
    if (!session.open) throw ClosedSessionError("session '" + session.id + "' is closed");
    if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) {
        throw PreconditionError("message text must not be empty");
    }
    const auto profile = sim.profile(session.agent);
    const auto reply = respond_to_user(sim.conversationalist(), profile, sim.context(session.agent), text, sim.map());

    const auto tick = sim.current_tick();
    const std::string said(text);
    const auto draft = user_exchange_memory(profile, said, reply.text);
    MemoryEvent exchange;
    exchange.tick = tick;
    exchange.track = Track::interaction;
    exchange.kind = MemoryKind::user_exchange;
    exchange.text = draft.text;
    sim.inject_user_exchange(session.agent, exchange, session.id, said, reply.text);

    session.transcript.push_back({ChatRole::user, said, tick});
    session.transcript.push_back({ChatRole::agent, reply.text, tick});

    ChatResult result{reply.text, false};
    if (reply.accepted_action) {
        sim.request_replan(session.agent, *reply.accepted_action);
        result.acted = true;
    }
    return result;
}

void close_session(ChatSession& session, SimHandle& sim) {
    if (!session.open) throw ClosedSessionError("session '" + session.id + "' is already closed");
    session.open = false;
    if (sim.chat_holds_agent()) sim.set_chat_hold(session.agent, false);
}

std::string export_transcript(const ChatSession& session) {
    std::string out;
    for (const auto& entry : session.transcript) {
        nlohmann::ordered_json j;
        j["session"] = session.id;
        j["role"] = to_string(entry.role);
        j["text"] = entry.text;
        j["tick"] = entry.tick;
        out += j.dump();
        out += '\n';
    }
    return out;
}

std::shared_ptr<SessionRegistry::Slot> SessionRegistry::find(const std::string& id) const {
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw UnknownSessionError("unknown session '" + id + "'");
    return it->second;
}

std::string SessionRegistry::open(SimHandle& sim, const AgentId& agent) {
    std::string id;
    {
        std::lock_guard lock(mutex_);
        id = "s" + std::to_string(next_id_++);
    }
    auto slot = std::make_shared<Slot>();
    slot->session = open_session(sim, agent, id);
    std::lock_guard lock(mutex_);
    sessions_.emplace(id, std::move(slot));
    return id;
}

ChatResult SessionRegistry::message(const std::string& id, std::string_view text, SimHandle& sim) {
    auto slot = find(id);
    std::lock_guard busy(slot->busy);
    return user_message(slot->session, text, sim);
}

ChatSession SessionRegistry::close(const std::string& id, SimHandle& sim) {
    auto slot = find(id);
    std::lock_guard busy(slot->busy);
    close_session(slot->session, sim);
    return slot->session;
}

ChatSession SessionRegistry::get(const std::string& id) const {
    auto slot = find(id);
    std::lock_guard busy(slot->busy);
    return slot->session;
}

}  // namespace lifespace
