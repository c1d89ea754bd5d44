#pragma once

#include "lifespace/cognition.hpp"
#include "lifespace/simulation.hpp"

#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <vector>

namespace lifespace {

/// What a chat session needs from the running life space. Implementations
/// route writes through the simulation inbox so each memory store keeps a
/// single writer.
class SimHandle {
public:
    virtual ~SimHandle() = default;

    virtual AgentProfile profile(const AgentId& agent) const = 0;  // throws UnknownAgentError
    virtual ContextBundle context(const AgentId& agent) const = 0;
    virtual const WorldMap& map() const = 0;
    virtual std::uint64_t current_tick() const = 0;
    virtual CognitionProvider& conversationalist() = 0;
    virtual bool chat_holds_agent() const = 0;

    virtual void inject_user_exchange(const AgentId& agent, const MemoryEvent& exchange, const std::string& session,
                                      const std::string& user_text, const std::string& reply) = 0;
    virtual void request_replan(const AgentId& agent, const PlanDecision& decision) = 0;
    virtual void set_chat_hold(const AgentId& agent, bool held) = 0;
};

/// Direct, single-threaded handle over a Simulation.
class LocalSimHandle final : public SimHandle {
public:
    explicit LocalSimHandle(Simulation& sim) : sim_(sim) {}

    AgentProfile profile(const AgentId& agent) const override { return sim_.state().roster.at(agent).profile; }
    ContextBundle context(const AgentId& agent) const override { return sim_.context(agent); }
    const WorldMap& map() const override { return sim_.map(); }
    std::uint64_t current_tick() const override { return sim_.state().tick; }
    CognitionProvider& conversationalist() override { return *sim_.providers().conversationalist; }
    bool chat_holds_agent() const override { return sim_.config().chat_holds_agent; }

    void inject_user_exchange(const AgentId& agent, const MemoryEvent& exchange, const std::string& session,
                              const std::string& user_text, const std::string& reply) override {
        sim_.inject_user_exchange(agent, exchange, session, user_text, reply);
    }
    void request_replan(const AgentId& agent, const PlanDecision& decision) override {
        sim_.request_replan(agent, decision);
    }
    void set_chat_hold(const AgentId& agent, bool held) override { sim_.set_chat_hold(agent, held); }

private:
    Simulation& sim_;
};

enum class ChatRole { user, agent };
std::string_view to_string(ChatRole r);

struct TranscriptEntry {
    ChatRole role = ChatRole::user;
    std::string text;
    std::uint64_t tick = 0;
};

struct ChatSession {
    std::string id;
    AgentId agent;
    std::vector<TranscriptEntry> transcript;
    bool open = true;
};

struct ChatResult {
    std::string agent_text;
    bool acted = false;
};

ChatSession open_session(SimHandle& sim, const AgentId& agent, std::string id);

/// One user turn: reply grounded in the agent's memory, one interaction-track
/// memory injected, and an immediate replan when the agent agrees to act.
/// Throws ClosedSessionError, PreconditionError or ProviderUnavailableError
/// (transcript unchanged on any error).
ChatResult user_message(ChatSession& session, std::string_view text, SimHandle& sim);

/// Throws ClosedSessionError when already closed.
void close_session(ChatSession& session, SimHandle& sim);

/// JSON Lines of {"session","role","text","tick"}.
std::string export_transcript(const ChatSession& session);

/// Thread-safe registry handing out distinct session ids ("s1", "s2", ...).
/// Messages to the same session are serialized.
class SessionRegistry {
public:
    std::string open(SimHandle& sim, const AgentId& agent);
    ChatResult message(const std::string& id, std::string_view text, SimHandle& sim);
    ChatSession close(const std::string& id, SimHandle& sim);
    ChatSession get(const std::string& id) const;  // throws UnknownSessionError

private:
    struct Slot {
        ChatSession session;
        std::mutex busy;
    };
    std::shared_ptr<Slot> find(const std::string& id) const;

    mutable std::mutex mutex_;
    std::map<std::string, std::shared_ptr<Slot>> sessions_;
    std::uint64_t next_id_ = 1;
};

}  // namespace lifespace
