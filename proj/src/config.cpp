#include "lifespace/config.hpp"

#include "lifespace/errors.hpp"
#include "lifespace/stub_provider.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace lifespace {
namespace {

using nlohmann::json;

template <typename T>
void read(const json& j, const char* key, T& target, const std::string& path) {
    if (!j.contains(key)) return;
    try {
        target = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ParseError("config field '" + path + key + "' is invalid: " + e.what());
    }
}

void read_provider(const json& j, ProviderConfig& p, const std::string& path) {
    if (!j.is_object()) throw ParseError("config field '" + path + "' must be an object");
    read(j, "endpoint", p.endpoint, path + ".");
    read(j, "model", p.model_name, path + ".");
    read(j, "api_key_env", p.api_key_ref, path + ".");
    read(j, "timeout", p.timeout_seconds, path + ".");
    read(j, "max_retries", p.max_retries, path + ".");
    read(j, "temperature", p.temperature, path + ".");
}

}  // namespace

std::optional<ProviderKind> parse_provider_kind(std::string_view s) {
    if (s == "stub") return ProviderKind::stub;
    if (s == "remote") return ProviderKind::remote;
    return std::nullopt;
}

AppConfig default_app_config() {
    AppConfig c;
    c.planner.model_name = "planner-model";
    c.planner.temperature = 0.0;
    c.conversationalist.model_name = "chat-model";
    c.conversationalist.temperature = 0.7;
    return c;
}

AppConfig parse_app_config(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("config must be a JSON object");

    AppConfig c = default_app_config();
    if (doc.contains("sim")) {
        const auto& s = doc.at("sim");
        read(s, "seed", c.sim.seed, "sim.");
        read(s, "tick_ms", c.sim.tick_ms, "sim.");
        read(s, "proximity_radius", c.sim.proximity_radius, "sim.");
        read(s, "conversation_cooldown", c.sim.conversation_cooldown, "sim.");
        read(s, "activity_duration", c.sim.activity_duration, "sim.");
        read(s, "memory_threshold", c.sim.memory_threshold, "sim.");
        read(s, "max_turns", c.sim.max_turns, "sim.");
        read(s, "chat_holds_agent", c.sim.chat_holds_agent, "sim.");
    }
    if (doc.contains("provider")) {
        std::string kind;
        read(doc, "provider", kind, "");
        auto parsed = parse_provider_kind(kind);
        if (!parsed) throw ParseError("config field 'provider' must be \"stub\" or \"remote\"");
        c.provider = *parsed;
    }
    if (doc.contains("providers")) {
        const auto& p = doc.at("providers");
        if (p.contains("planner")) read_provider(p.at("planner"), c.planner, "providers.planner");
        if (p.contains("conversationalist")) {
            read_provider(p.at("conversationalist"), c.conversationalist, "providers.conversationalist");
        }
    }
    if (doc.contains("paths")) {
        const auto& p = doc.at("paths");
        std::string value;
        if (p.contains("map")) {
            read(p, "map", value, "paths.");
            c.map_path = value;
        }
        if (p.contains("roster")) {
            read(p, "roster", value, "paths.");
            c.roster_path = value;
        }
    }
    validate(c.sim);
    validate(c.planner);
    validate(c.conversationalist);
    return c;
}

AppConfig load_app_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot read config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_app_config(buf.str());
}

Providers make_providers(const AppConfig& config) {
    if (config.provider == ProviderKind::stub) {
        auto stub = std::make_shared<StubProvider>(config.sim.seed);
        return {stub, stub};
    }
    for (const auto* role : {&config.planner, &config.conversationalist}) {
        if (role->model_name.empty()) throw ValidationError("remote provider needs a model name");
    }
    return {std::make_shared<LlmProvider>(std::make_shared<OpenAiChatBackend>(config.planner)),
            std::make_shared<LlmProvider>(std::make_shared<OpenAiChatBackend>(config.conversationalist))};
}

}  // namespace lifespace
