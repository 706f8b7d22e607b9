// Copyright 2026 The flowpilot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "flowpilot/http.hpp"

#include <filesystem>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

namespace flowpilot {

/// Agent roles served by a generation backend. Every role prompt starts
/// with the line "ROLE: <name>" so backends can dispatch on it.
enum class Role { Planner, Subgoal, Decision, Verifier, Narrator, Judge };

[[nodiscard]] std::string_view to_string(Role role) noexcept;
[[nodiscard]] std::optional<Role> parse_role(std::string_view name) noexcept;

/// The system prompt for a role.
[[nodiscard]] std::string const & role_prompt(Role role);

/// Role named on the first line of a role prompt, if any.
[[nodiscard]] std::optional<Role> role_of(std::string_view role_prompt);

/// Sentinel a sub-goal planner emits when every milestone is achieved.
inline constexpr std::string_view kTaskComplete = "TASK_COMPLETE";

/// Text generation behind one call. Not required to be thread-safe; each
/// concurrently running episode owns its own backend.
class GenerationBackend
{
public:
    virtual ~GenerationBackend() = default;

    virtual std::string complete(std::string const & role_prompt, std::string const & context) = 0;
};

// ---------------------------------------------------------------------------

/// Chat-completions client.
///   request:  {"model":..,"messages":[{"role":"system","content":..},
///              {"role":"user","content":..}],"temperature":..}
///   response: {"choices":[{"message":{"content":..}}]}
class RemoteBackend final : public GenerationBackend
{
public:
    explicit RemoteBackend(EndpointConfig endpoint, SleepFn sleep = {});

    std::string complete(std::string const & role_prompt, std::string const & context) override;

    [[nodiscard]] EndpointConfig const & endpoint() const noexcept { return endpoint_; }

private:
    EndpointConfig endpoint_;
    SleepFn sleep_;
};

[[nodiscard]] std::string chat_request_body(
    std::string const & model,
    std::string const & system,
    std::string const & user,
    double temperature);

/// Throws ProtocolError unless choices[0].message.content is a string.
[[nodiscard]] std::string parse_chat_response(std::string const & body);

// ---------------------------------------------------------------------------

/// One entry of a scripted response table. `match` and `unless` are
/// ECMAScript regexes searched in the context; `role` restricts the rule to
/// one role.
struct ScriptRule
{
    std::optional<Role> role;
    std::string match;
    std::string unless;
    std::string response;
};

/// Deterministic pattern -> response table; first matching rule wins.
///
/// File format:
///   {"v":1,"rules":[{"role":"decision","match":"...","unless":"...","response":"..."}],
///    "default":"..."}
class ScriptedBackend final : public GenerationBackend
{
public:
    struct Call
    {
        std::optional<Role> role;
        std::string context;
        std::string response;
    };

    ScriptedBackend(std::vector<ScriptRule> rules, std::optional<std::string> fallback = std::nullopt);

    [[nodiscard]] static ScriptedBackend from_file(std::filesystem::path const & path);
    [[nodiscard]] static ScriptedBackend from_json(std::string_view text);

    /// Throws BackendError when no rule matches and there is no default.
    std::string complete(std::string const & role_prompt, std::string const & context) override;

    [[nodiscard]] std::vector<Call> const & calls() const noexcept { return calls_; }

private:
    struct Compiled
    {
        ScriptRule rule;
        std::regex match;
        std::optional<std::regex> unless;
    };

    std::vector<Compiled> rules_;
    std::optional<std::string> fallback_;
    std::vector<Call> calls_;
};

} // namespace flowpilot
