#pragma once

#include "lifespace/cognition.hpp"

#include <memory>
#include <string>
#include <vector>

namespace lifespace {

/// Connection settings for one provider role (OpenAI-compatible chat completions).
struct ProviderConfig {
    std::string endpoint = "https://api.openai.com/v1";  // base URL; "/chat/completions" is appended
    std::string model_name;
    std::string api_key_ref = "OPENAI_API_KEY";  // environment variable holding the bearer token
    double timeout_seconds = 30.0;
    int max_retries = 2;
    double temperature = 0.0;
};

void validate(const ProviderConfig& config);

struct ChatMessage {
    std::string role;
    std::string content;

    friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    /// Assistant message content. Throws ProviderUnavailableError.
    virtual std::string complete(const std::vector<ChatMessage>& messages) = 0;
};

/// Request body for POST <endpoint>/chat/completions.
std::string build_chat_request(const ProviderConfig& config, const std::vector<ChatMessage>& messages);
/// choices[0].message.content of a completion response. Throws ProviderUnavailableError.
std::string parse_chat_response(std::string_view body);

class OpenAiChatBackend final : public ChatBackend {
public:
    explicit OpenAiChatBackend(ProviderConfig config);
    std::string complete(const std::vector<ChatMessage>& messages) override;

private:
    ProviderConfig config_;
    std::string origin_;  // scheme://host[:port]
    std::string path_;    // path prefix + /chat/completions
};

/// Prompts a chat backend for each task, asking for a fenced "key: value" block.
/// An unparseable answer is re-prompted once, then replaced by a safe default.
class LlmProvider final : public CognitionProvider {
public:
    explicit LlmProvider(std::shared_ptr<ChatBackend> backend) : backend_(std::move(backend)) {}

    PlanDecision plan(const AgentProfile& profile, const ContextBundle& context, const WorldMap& map) override;
    DialogueTurn dialogue_turn(const DialogueRequest& request) override;
    std::string summarize(std::span<const MemoryEvent> events) override;
    UserReply reply(const AgentProfile& profile, const ContextBundle& context, std::string_view user_text,
                    const WorldMap& map) override;

private:
    using Fields = std::map<std::string, std::string>;
    std::optional<Fields> ask(std::vector<ChatMessage> messages, std::initializer_list<const char*> required);

    std::shared_ptr<ChatBackend> backend_;
};

}  // namespace lifespace
