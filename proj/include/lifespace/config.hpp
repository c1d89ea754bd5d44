#pragma once

#include "lifespace/llm_provider.hpp"
#include "lifespace/simulation.hpp"

#include <optional>
#include <string>

namespace lifespace {

enum class ProviderKind { stub, remote };

/// Everything needed to build an engine; loaded from one JSON file, then
/// overridden by command-line flags.
struct AppConfig {
    SimConfig sim;
    ProviderKind provider = ProviderKind::stub;
    ProviderConfig planner;
    ProviderConfig conversationalist;
    std::optional<std::string> map_path;
    std::optional<std::string> roster_path;
};

AppConfig default_app_config();
/// Missing keys keep their defaults. Throws ParseError / ValidationError.
AppConfig parse_app_config(std::string_view json_text);
AppConfig load_app_config(const std::string& path);

std::optional<ProviderKind> parse_provider_kind(std::string_view s);

/// Stub: one StubProvider(seed) shared by both roles. Remote: an LlmProvider per role.
Providers make_providers(const AppConfig& config);

}  // namespace lifespace
