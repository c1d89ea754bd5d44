#include "lifespace/llm_provider.hpp"

#include "lifespace/errors.hpp"

#include <httplib.h>
#include <json.hpp>

#include <cstdlib>

namespace lifespace {
namespace {

using nlohmann::json;

std::string persona(const AgentProfile& p) {
    std::string out = "You are " + p.name + ", a " + p.occupation + " living in a small town.";
    if (!p.personality.empty()) out += " Personality: " + p.personality + ".";
    if (!p.bio.empty()) out += " " + p.bio;
    out += " Stay in character and speak naturally and briefly.";
    return out;
}

std::string places(const WorldMap& map) {
    std::string out;
    for (const auto& s : map.scenes()) out += "- " + s.id + " (" + std::string(to_string(s.category)) + ")\n";
    return out;
}

bool truthy(const std::string& v) {
    return v == "yes" || v == "true" || v == "Yes" || v == "True" || v == "YES" || v == "1";
}

constexpr const char* kReprompt =
    "Your answer could not be parsed. Answer ONLY with the fenced block in the requested format.";

}  // namespace

void validate(const ProviderConfig& config) {
    if (!(config.timeout_seconds > 0)) throw ValidationError("provider timeout must be positive");
    if (config.max_retries < 0) throw ValidationError("provider max_retries must not be negative");
    if (config.endpoint.find("://") == std::string::npos) {
        throw ValidationError("provider endpoint '" + config.endpoint + "' is not a URL");
    }
}

std::string build_chat_request(const ProviderConfig& config, const std::vector<ChatMessage>& messages) {
    json msgs = json::array();
    for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
    return json{{"model", config.model_name}, {"messages", msgs}, {"temperature", config.temperature}}.dump();
}

std::string parse_chat_response(std::string_view body) {
    try {
        auto doc = json::parse(body);
        return doc.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw ProviderUnavailableError(std::string("malformed chat completion response: ") + e.what());
    }
}

OpenAiChatBackend::OpenAiChatBackend(ProviderConfig config) : config_(std::move(config)) {
    validate(config_);
    const auto scheme_end = config_.endpoint.find("://") + 3;
    const auto slash = config_.endpoint.find('/', scheme_end);
    origin_ = config_.endpoint.substr(0, slash);
    std::string prefix = slash == std::string::npos ? "" : config_.endpoint.substr(slash);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    path_ = prefix + "/chat/completions";
}

std::string OpenAiChatBackend::complete(const std::vector<ChatMessage>& messages) {
    httplib::Client client(origin_);
    const auto secs = static_cast<time_t>(config_.timeout_seconds);
    const auto usecs = static_cast<time_t>((config_.timeout_seconds - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);

    httplib::Headers headers;
    if (const char* key = std::getenv(config_.api_key_ref.c_str()); key && *key) {
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }
    const std::string body = build_chat_request(config_, messages);

    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        auto res = client.Post(path_, headers, body, "application/json");
        if (!res) {
            last_error = httplib::to_string(res.error());
            continue;
        }
        if (res->status / 100 != 2) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        try {
            return parse_chat_response(res->body);
        } catch (const ProviderUnavailableError& e) {
            last_error = e.what();
        }
    }
    throw ProviderUnavailableError("provider at " + origin_ + path_ + " unavailable after " +
                                   std::to_string(config_.max_retries + 1) + " attempts: " + last_error);
}

std::optional<LlmProvider::Fields> LlmProvider::ask(std::vector<ChatMessage> messages,
                                                     std::initializer_list<const char*> required) {
    auto complete_fields = [&](const std::string& answer) -> std::optional<Fields> {
        auto fields = parse_structured_block(answer);
        if (!fields) return std::nullopt;
        for (const char* key : required) {
            if (!fields->contains(key) || fields->at(key).empty()) return std::nullopt;
        }
        return fields;
    };
    std::string answer = backend_->complete(messages);
    if (auto fields = complete_fields(answer)) return fields;
    messages.push_back({"assistant", answer});
    messages.push_back({"user", kReprompt});
    return complete_fields(backend_->complete(messages));
}

PlanDecision LlmProvider::plan(const AgentProfile& profile, const ContextBundle& context, const WorldMap& map) {
    std::vector<ChatMessage> messages{
        {"system", persona(profile)},
        {"user", "Your memories:\n" + render_context(context) + "\nPlaces you can go:\n" + places(map) +
                     "\nDecide where to go next and what to do there. Answer only with a fenced block:\n"
                     "```\ndestination: <place id from the list>\nactivity: <short activity>\n"
                     "rationale: <one sentence>\n```"}};
    if (auto f = ask(std::move(messages), {"destination", "activity"})) {
        return {f->at("destination"), f->at("activity"), f->contains("rationale") ? f->at("rationale") : ""};
    }
    return {profile.home_scene, default_activity(map, profile.home_scene, profile), "unparseable plan; going home"};
}

DialogueTurn LlmProvider::dialogue_turn(const DialogueRequest& request) {
    std::string transcript;
    for (const auto& t : request.turns) {
        const auto& who = t.speaker == request.speaker.id ? request.speaker.name : request.listener.name;
        transcript += who + ": " + t.text + "\n";
    }
    if (transcript.empty()) transcript = "(you are starting the conversation)\n";
    std::vector<ChatMessage> messages{
        {"system", persona(request.speaker)},
        {"user", "You ran into " + request.listener.name + ", a " + request.listener.occupation +
                     ".\nYour memories:\n" + render_context(request.speaker_context) + "\nConversation so far:\n" +
                     transcript + "\nThe conversation may last at most " + std::to_string(request.max_turns) +
                     " lines in total. Say your next line. Answer only with a fenced block:\n"
                     "```\nsay: <one or two sentences>\nend: <yes if the conversation should end after this line, "
                     "otherwise no>\n```"}};
    if (auto f = ask(std::move(messages), {"say"})) {
        return {request.speaker.id, f->at("say"), f->contains("end") && truthy(f->at("end"))};
    }
    return {request.speaker.id, "Sorry, I have to go. See you, " + request.listener.name + ".", true};
}

std::string LlmProvider::summarize(std::span<const MemoryEvent> events) {
    std::string list;
    for (const auto& e : events) list += "- " + e.text + "\n";
    const bool life = !events.empty() && events.front().track == Track::life_space;
    std::vector<ChatMessage> messages{
        {"system", "You compress an agent's memories into short, abstract summaries."},
        {"user", std::string(life ? "These events happened in the agent's own life:\n"
                                  : "These are the agent's exchanges with its user:\n") +
                     list + "\nSummarize them in one or two sentences. Answer only with a fenced block:\n"
                            "```\nsummary: <text>\n```"}};
    if (auto f = ask(std::move(messages), {"summary"})) return f->at("summary");
    return template_summary(events);
}

UserReply LlmProvider::reply(const AgentProfile& profile, const ContextBundle& context, std::string_view user_text,
                             const WorldMap& map) {
    std::vector<ChatMessage> messages{
        {"system", persona(profile) + "\n\nYour memories:\n" + render_context(context) + "\nPlaces in town:\n" +
                       places(map) +
                       "\nIf the user asks you to go somewhere or do something and you agree, set action to go and "
                       "name the place id and activity. Answer only with a fenced block:\n"
                       "```\nreply: <what you say to the user>\naction: <go or none>\ndestination: <place id or "
                       "empty>\nactivity: <activity or empty>\n```"},
        {"user", std::string(user_text)}};

    std::string answer = backend_->complete(messages);
    auto fields = parse_structured_block(answer);
    if (!fields || !fields->contains("reply") || fields->at("reply").empty()) {
        messages.push_back({"assistant", answer});
        messages.push_back({"user", kReprompt});
        answer = backend_->complete(messages);
        fields = parse_structured_block(answer);
    }
    if (!fields || !fields->contains("reply") || fields->at("reply").empty()) {
        return {answer, std::nullopt};
    }
    UserReply out{fields->at("reply"), std::nullopt};
    if (fields->contains("action") && fields->at("action") == "go" && fields->contains("destination") &&
        !fields->at("destination").empty()) {
        out.accepted_action =
            PlanDecision{fields->at("destination"), fields->contains("activity") ? fields->at("activity") : "",
                         "user suggestion"};
    }
    return out;
}

}  // namespace lifespace
