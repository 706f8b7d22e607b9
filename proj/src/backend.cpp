// Copyright 2026 The flowpilot Authors
// SPDX-License-Identifier: Apache-2.0

#include "flowpilot/backend.hpp"

#include "flowpilot/core.hpp"
#include "flowpilot/errors.hpp"
#include "flowpilot/serialize.hpp"

#include <json.hpp>

#include <array>

namespace flowpilot {

namespace {

constexpr std::array<std::pair<std::string_view, Role>, 6> kRoles = {{
    {"planner", Role::Planner},
    {"subgoal", Role::Subgoal},
    {"decision", Role::Decision},
    {"verifier", Role::Verifier},
    {"narrator", Role::Narrator},
    {"judge", Role::Judge},
}};

std::string make_prompt(Role role, std::string_view body)
{
    return "ROLE: " + std::string(to_string(role)) + "\n" + std::string(body);
}

} // namespace

std::string_view to_string(Role role) noexcept
{
    for (auto const & [name, r] : kRoles) {
        if (r == role) {
            return name;
        }
    }
    return "?";
}

std::optional<Role> parse_role(std::string_view name) noexcept
{
    for (auto const & [n, r] : kRoles) {
        if (n == name) {
            return r;
        }
    }
    return std::nullopt;
}

std::string const & role_prompt(Role role)
{
    static std::string const planner = make_prompt(Role::Planner,
        "You are the Global Planning Agent of a GUI automation system. Decompose the user's task into an ordered "
        "list of high-level milestones. Use the guidelines retrieved from similar past tasks when they apply. "
        "Answer with one milestone per line, numbered \"1.\", \"2.\", ...");
    static std::string const subgoal = make_prompt(Role::Subgoal,
        "You are the Sub-goal Planning Agent. Given the global plan and the history of what has happened so far, "
        "state the single immediate sub-goal as \"<milestone number>. <sub-goal>\". If verifier feedback is "
        "present, revise the sub-goal so the next action addresses it. If every milestone is already achieved, "
        "answer exactly TASK_COMPLETE.");
    static std::string const decision = make_prompt(Role::Decision,
        "You are the Decision Agent. Propose exactly one atomic action for the current sub-goal on the current "
        "screen. Answer with one line in this grammar: TAP <element_id> | TYPE <element_id> \"<text>\" | "
        "SCROLL up|down | NAVIGATE <app_id> | BACK | HOME | COMPLETE");
    static std::string const verifier = make_prompt(Role::Verifier,
        "You are the Verifier Agent. Judge whether the proposed action is logically consistent with the current "
        "screen and sub-goal before it executes. Answer APPROVE, or REJECT: <constructive feedback explaining what "
        "must happen first>.");
    static std::string const narrator = make_prompt(Role::Narrator,
        "You are the history narrator. In one to three sentences describe how the screen changed because of the "
        "action, relative to the goal. Quote verbatim any newly revealed text the goal may need later.");
    static std::string const judge = make_prompt(Role::Judge,
        "You classify GUI transitions. Given the screen before an action, the action, and the screen after it, "
        "answer PAGE_JUMP if the action moved to a different page or app, or IN_PAGE if it only modified the "
        "current page.");
    switch (role) {
    case Role::Planner: return planner;
    case Role::Subgoal: return subgoal;
    case Role::Decision: return decision;
    case Role::Verifier: return verifier;
    case Role::Narrator: return narrator;
    case Role::Judge: return judge;
    }
    return planner;
}

std::optional<Role> role_of(std::string_view prompt)
{
    constexpr std::string_view tag = "ROLE: ";
    if (prompt.substr(0, tag.size()) != tag) {
        return std::nullopt;
    }
    auto rest = prompt.substr(tag.size());
    auto nl = rest.find('\n');
    return parse_role(trim(rest.substr(0, nl)));
}

// ---------------------------------------------------------------------------

std::string chat_request_body(
    std::string const & model,
    std::string const & system,
    std::string const & user,
    double temperature)
{
    nlohmann::ordered_json body;
    body["model"] = model;
    body["messages"] = nlohmann::ordered_json::array({
        nlohmann::ordered_json{{"role", "system"}, {"content", system}},
        nlohmann::ordered_json{{"role", "user"}, {"content", user}},
    });
    body["temperature"] = temperature;
    return body.dump();
}

std::string parse_chat_response(std::string const & body)
{
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(body);
    } catch (nlohmann::json::parse_error const & ex) {
        throw ProtocolError(std::string("chat response is not JSON: ") + ex.what());
    }
    if (!doc.is_object() || !doc.contains("choices") || !doc.at("choices").is_array() || doc.at("choices").empty()) {
        throw ProtocolError("chat response lacks a non-empty \"choices\" array");
    }
    auto const & first = doc.at("choices").at(0);
    if (!first.is_object() || !first.contains("message") || !first.at("message").is_object() ||
        !first.at("message").contains("content") || !first.at("message").at("content").is_string()) {
        throw ProtocolError("chat response choices[0].message.content is not a string");
    }
    return first.at("message").at("content").get<std::string>();
}

RemoteBackend::RemoteBackend(EndpointConfig endpoint, SleepFn sleep)
: endpoint_(std::move(endpoint))
, sleep_(std::move(sleep))
{}

std::string RemoteBackend::complete(std::string const & role_prompt, std::string const & context)
{
    auto body = chat_request_body(endpoint_.model, role_prompt, context, endpoint_.temperature);
    return parse_chat_response(post_json(endpoint_, body, sleep_));
}

// ---------------------------------------------------------------------------

ScriptedBackend::ScriptedBackend(std::vector<ScriptRule> rules, std::optional<std::string> fallback)
: fallback_(std::move(fallback))
{
    rules_.reserve(rules.size());
    for (auto & r : rules) {
        try {
            Compiled c{r, std::regex(r.match, std::regex::ECMAScript), std::nullopt};
            if (!r.unless.empty()) {
                c.unless = std::regex(r.unless, std::regex::ECMAScript);
            }
            rules_.push_back(std::move(c));
        } catch (std::regex_error const & ex) {
            throw InvalidArgument("bad script regex '" + r.match + "': " + ex.what());
        }
    }
}

ScriptedBackend ScriptedBackend::from_json(std::string_view text)
{
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (nlohmann::json::parse_error const & ex) {
        throw LoadError("script line " + std::to_string(line_of_offset(text, ex.byte)) + ": " + ex.what());
    }
    if (doc.value("v", 0) != kSchemaVersion || !doc.contains("rules") || !doc.at("rules").is_array()) {
        throw LoadError("script needs \"v\":1 and a \"rules\" array");
    }
    std::vector<ScriptRule> rules;
    std::size_t i = 0;
    for (auto const & r : doc.at("rules")) {
        if (!r.is_object() || !r.contains("response") || !r.at("response").is_string()) {
            throw LoadError("script rule " + std::to_string(i) + ": \"response\" string required");
        }
        ScriptRule rule;
        if (r.contains("role")) {
            auto name = r.at("role").get<std::string>();
            rule.role = parse_role(name);
            if (!rule.role) {
                throw LoadError("script rule " + std::to_string(i) + ": unknown role '" + name + "'");
            }
        }
        rule.match = r.value("match", std::string{});
        rule.unless = r.value("unless", std::string{});
        rule.response = r.at("response").get<std::string>();
        rules.push_back(std::move(rule));
        ++i;
    }
    std::optional<std::string> fallback;
    if (doc.contains("default") && doc.at("default").is_string()) {
        fallback = doc.at("default").get<std::string>();
    }
    try {
        return ScriptedBackend(std::move(rules), std::move(fallback));
    } catch (InvalidArgument const & ex) {
        throw LoadError(std::string("script: ") + ex.what());
    }
}

ScriptedBackend ScriptedBackend::from_file(std::filesystem::path const & path)
{
    return from_json(read_file(path));
}

std::string ScriptedBackend::complete(std::string const & prompt, std::string const & context)
{
    auto const role = role_of(prompt);
    for (auto const & c : rules_) {
        if (c.rule.role && c.rule.role != role) {
            continue;
        }
        if (!std::regex_search(context, c.match)) {
            continue;
        }
        if (c.unless && std::regex_search(context, *c.unless)) {
            continue;
        }
        calls_.push_back({role, context, c.rule.response});
        return c.rule.response;
    }
    if (fallback_) {
        calls_.push_back({role, context, *fallback_});
        return *fallback_;
    }
    throw BackendError(
        "no scripted rule matched for role " + std::string(role ? to_string(*role) : "?"));
}

} // namespace flowpilot
