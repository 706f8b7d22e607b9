// Copyright 2026 The flowpilot Authors
// SPDX-License-Identifier: Apache-2.0

#include "flowpilot/core.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <set>
#include <utility>

namespace flowpilot {

namespace {

bool is_space(char c)
{
    return std::isspace(static_cast<unsigned char>(c)) != 0;
}

template <typename Enum, std::size_t N>
std::optional<Enum> lookup(std::string_view name, std::pair<std::string_view, Enum> const (&table)[N])
{
    for (auto const & [key, value] : table) {
        if (key == name) {
            return value;
        }
    }
    return std::nullopt;
}

constexpr std::pair<std::string_view, ElementKind> kElementKinds[] = {
    {"button", ElementKind::Button},
    {"text_field", ElementKind::TextField},
    {"list_item", ElementKind::ListItem},
    {"label", ElementKind::Label},
    {"toggle", ElementKind::Toggle},
};

constexpr std::pair<std::string_view, ActionKind> kActionKinds[] = {
    {"TAP", ActionKind::Tap},
    {"TYPE", ActionKind::Type},
    {"SCROLL", ActionKind::Scroll},
    {"NAVIGATE", ActionKind::Navigate},
    {"BACK", ActionKind::Back},
    {"HOME", ActionKind::Home},
    {"COMPLETE", ActionKind::Complete},
};

constexpr std::pair<std::string_view, Category> kCategories[] = {
    {"Tool", Category::Tool},
    {"Information", Category::Information},
    {"Shopping", Category::Shopping},
    {"Media", Category::Media},
    {"Social", Category::Social},
    {"MultiApps", Category::MultiApps},
};

template <typename Enum, std::size_t N>
std::string_view name_of(Enum value, std::pair<std::string_view, Enum> const (&table)[N]) noexcept
{
    for (auto const & [key, v] : table) {
        if (v == value) {
            return key;
        }
    }
    return "?";
}

std::string hex32(std::uint64_t h)
{
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08x", static_cast<unsigned>(h & 0xffffffffULL));
    return buf;
}

// Tokenizer for the action grammar: bare words and one double-quoted string.
struct Token
{
    std::string value;
    bool quoted = false;
};

std::optional<std::vector<Token>> tokenize(std::string_view line)
{
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < line.size()) {
        if (is_space(line[i])) {
            ++i;
            continue;
        }
        Token tok;
        if (line[i] == '"') {
            tok.quoted = true;
            ++i;
            bool closed = false;
            while (i < line.size()) {
                char c = line[i++];
                if (c == '\\') {
                    if (i >= line.size()) {
                        return std::nullopt;
                    }
                    tok.value.push_back(line[i++]);
                } else if (c == '"') {
                    closed = true;
                    break;
                } else {
                    tok.value.push_back(c);
                }
            }
            if (!closed) {
                return std::nullopt;
            }
            if (i < line.size() && !is_space(line[i])) {
                return std::nullopt;
            }
        } else {
            while (i < line.size() && !is_space(line[i])) {
                if (line[i] == '"') {
                    return std::nullopt;
                }
                tok.value.push_back(line[i++]);
            }
        }
        out.push_back(std::move(tok));
    }
    return out;
}

std::string upper(std::string_view s)
{
    std::string out(s);
    for (auto & c : out) {
        c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
    return out;
}

} // namespace

std::string_view to_string(ElementKind kind) noexcept { return name_of(kind, kElementKinds); }
std::optional<ElementKind> parse_element_kind(std::string_view name) noexcept { return lookup(name, kElementKinds); }
std::string_view to_string(ActionKind kind) noexcept { return name_of(kind, kActionKinds); }
std::optional<ActionKind> parse_action_kind(std::string_view name) noexcept { return lookup(name, kActionKinds); }
std::string_view to_string(Category c) noexcept { return name_of(c, kCategories); }
std::optional<Category> parse_category(std::string_view name) noexcept { return lookup(name, kCategories); }

std::string_view to_string(ScrollDirection dir) noexcept
{
    return dir == ScrollDirection::Up ? "up" : "down";
}

std::optional<ScrollDirection> parse_direction(std::string_view name) noexcept
{
    if (name == "up") {
        return ScrollDirection::Up;
    }
    if (name == "down") {
        return ScrollDirection::Down;
    }
    return std::nullopt;
}

std::string_view to_string(TransitionKind kind) noexcept
{
    return kind == TransitionKind::PageJump ? "PageJump" : "InPage";
}

std::string to_lower(std::string_view s)
{
    std::string out(s);
    for (auto & c : out) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

std::string trim(std::string_view s)
{
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && is_space(s[b])) {
        ++b;
    }
    while (e > b && is_space(s[e - 1])) {
        --e;
    }
    return std::string(s.substr(b, e - b));
}

std::string join(std::span<std::string const> parts, std::string_view sep)
{
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) {
            out += sep;
        }
        out += parts[i];
    }
    return out;
}

// ---------------------------------------------------------------------------

UiElement const * GuiState::find(std::string_view element_id) const noexcept
{
    for (auto const & e : elements) {
        if (e.element_id == element_id) {
            return &e;
        }
    }
    return nullptr;
}

UiElement const * GuiState::focused_element() const noexcept
{
    for (auto const & e : elements) {
        if (e.focused) {
            return &e;
        }
    }
    return nullptr;
}

std::string compute_text_digest(std::span<UiElement const> elements)
{
    std::string out;
    bool first = true;
    for (auto const & e : elements) {
        if (!first) {
            out.push_back('\n');
        }
        first = false;
        bool pending_space = false;
        bool any = false;
        for (char c : e.label) {
            if (is_space(c)) {
                pending_space = any;
                continue;
            }
            if (pending_space) {
                out.push_back(' ');
                pending_space = false;
            }
            out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
            any = true;
        }
    }
    return out;
}

GuiState make_state(
    std::string app_id,
    std::string screen_id,
    std::vector<UiElement> elements,
    std::string state_id)
{
    GuiState s;
    s.app_id = std::move(app_id);
    s.screen_id = std::move(screen_id);
    s.elements = std::move(elements);
    s.text_digest = compute_text_digest(s.elements);
    if (state_id.empty()) {
        // Content hash covers everything that can differ between two
        // renderings of the same screen, including focus and enablement.
        std::string content = state_fingerprint(s);
        for (auto const & e : s.elements) {
            content += '\x1f';
            content += e.element_id;
            content += e.enabled ? "+e" : "-e";
            content += e.focused ? "+f" : "-f";
        }
        state_id = s.app_id + "/" + s.screen_id + "#" + hex32(fnv1a64(content));
    }
    s.state_id = std::move(state_id);
    return s;
}

std::string state_fingerprint(GuiState const & state)
{
    std::vector<std::string> pairs;
    pairs.reserve(state.elements.size());
    for (auto const & e : state.elements) {
        std::string p(to_string(e.kind));
        p += ':';
        p += std::to_string(e.label.size());
        p += ':';
        p += e.label;
        pairs.push_back(std::move(p));
    }
    std::sort(pairs.begin(), pairs.end());
    std::string out = std::to_string(state.app_id.size()) + ":" + state.app_id + "|" +
                      std::to_string(state.screen_id.size()) + ":" + state.screen_id + "|";
    out += join(pairs, ";");
    return out;
}

std::vector<std::string> validate_state(GuiState const & state)
{
    std::vector<std::string> out;
    if (state.state_id.empty()) {
        out.emplace_back("state_id empty");
    }
    std::set<std::string_view> seen;
    int focused = 0;
    for (auto const & e : state.elements) {
        if (e.element_id.empty()) {
            out.emplace_back("element with empty element_id");
        } else if (!seen.insert(e.element_id).second) {
            out.push_back("duplicate element id '" + e.element_id + "'");
        }
        focused += e.focused ? 1 : 0;
    }
    if (focused > 1) {
        out.emplace_back("more than one focused element");
    }
    if (state.text_digest != compute_text_digest(state.elements)) {
        out.emplace_back("text_digest does not match elements");
    }
    return out;
}

// ---------------------------------------------------------------------------

Action Action::tap(std::string target) { return {ActionKind::Tap, std::move(target), std::nullopt, std::nullopt}; }
Action Action::type(std::string target, std::string text) { return {ActionKind::Type, std::move(target), std::move(text), std::nullopt}; }
Action Action::scroll(ScrollDirection dir) { return {ActionKind::Scroll, std::nullopt, std::nullopt, dir}; }
Action Action::navigate(std::string app) { return {ActionKind::Navigate, std::move(app), std::nullopt, std::nullopt}; }
Action Action::back() { return {ActionKind::Back, std::nullopt, std::nullopt, std::nullopt}; }
Action Action::home() { return {ActionKind::Home, std::nullopt, std::nullopt, std::nullopt}; }
Action Action::complete() { return {ActionKind::Complete, std::nullopt, std::nullopt, std::nullopt}; }

std::vector<std::string> validate_action(Action const & a)
{
    std::vector<std::string> out;
    auto const has_target = a.target && !a.target->empty();
    switch (a.kind) {
    case ActionKind::Tap:
        if (!has_target) {
            out.emplace_back("TAP requires target");
        }
        break;
    case ActionKind::Type:
        if (!a.text) {
            out.emplace_back("TYPE requires text");
        }
        if (!has_target) {
            out.emplace_back("TYPE requires target");
        }
        break;
    case ActionKind::Scroll:
        if (!a.direction) {
            out.emplace_back("SCROLL requires direction");
        }
        break;
    case ActionKind::Navigate:
        if (!has_target) {
            out.emplace_back("NAVIGATE requires app");
        }
        break;
    case ActionKind::Complete:
        if (a.target || a.text) {
            out.emplace_back("COMPLETE takes no target or text");
        }
        break;
    case ActionKind::Back:
    case ActionKind::Home:
        break;
    }
    return out;
}

std::string render_action(Action const & a)
{
    std::string out(to_string(a.kind));
    switch (a.kind) {
    case ActionKind::Tap:
    case ActionKind::Navigate:
        out += ' ';
        out += a.target.value_or("");
        break;
    case ActionKind::Type: {
        out += ' ';
        out += a.target.value_or("");
        out += " \"";
        for (char c : a.text.value_or("")) {
            if (c == '"' || c == '\\') {
                out.push_back('\\');
            }
            out.push_back(c);
        }
        out += '"';
        break;
    }
    case ActionKind::Scroll:
        out += ' ';
        out += to_string(a.direction.value_or(ScrollDirection::Down));
        break;
    default:
        break;
    }
    return out;
}

std::optional<Action> parse_action(std::string_view line)
{
    auto tokens = tokenize(line);
    if (!tokens || tokens->empty() || (*tokens)[0].quoted) {
        return std::nullopt;
    }
    auto const & toks = *tokens;
    auto kind = parse_action_kind(upper(toks[0].value));
    if (!kind) {
        return std::nullopt;
    }
    auto bare = [&](std::size_t i) { return i < toks.size() && !toks[i].quoted && !toks[i].value.empty(); };
    switch (*kind) {
    case ActionKind::Tap:
        if (toks.size() == 2 && bare(1)) {
            return Action::tap(toks[1].value);
        }
        break;
    case ActionKind::Navigate:
        if (toks.size() == 2 && bare(1)) {
            return Action::navigate(toks[1].value);
        }
        break;
    case ActionKind::Type:
        if (toks.size() == 3 && bare(1) && toks[2].quoted) {
            return Action::type(toks[1].value, toks[2].value);
        }
        break;
    case ActionKind::Scroll:
        if (toks.size() == 2 && bare(1)) {
            if (auto dir = parse_direction(to_lower(toks[1].value))) {
                return Action::scroll(*dir);
            }
        }
        break;
    case ActionKind::Back:
    case ActionKind::Home:
    case ActionKind::Complete:
        if (toks.size() == 1) {
            return Action{*kind, std::nullopt, std::nullopt, std::nullopt};
        }
        break;
    }
    return std::nullopt;
}

std::optional<Action> find_action(std::string_view response)
{
    std::size_t pos = 0;
    while (pos <= response.size()) {
        auto nl = response.find('\n', pos);
        auto line = response.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        if (auto a = parse_action(line)) {
            return a;
        }
        if (nl == std::string_view::npos) {
            break;
        }
        pos = nl + 1;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------

std::vector<std::string> validate_episode(Episode const & ep)
{
    std::vector<std::string> out;
    if (ep.episode_id.empty()) {
        out.emplace_back("episode_id empty");
    }
    if (ep.steps.empty()) {
        out.emplace_back("steps empty");
    }
    for (std::size_t i = 0; i < ep.steps.size(); ++i) {
        auto const & step = ep.steps[i];
        auto prefix = "step " + std::to_string(i) + ": ";
        for (auto const & v : validate_state(step.before)) {
            out.push_back(prefix + "before " + v);
        }
        for (auto const & v : validate_state(step.after)) {
            out.push_back(prefix + "after " + v);
        }
        for (auto const & v : validate_action(step.action)) {
            out.push_back(prefix + v);
        }
        if (i > 0 && ep.steps[i - 1].after.state_id != step.before.state_id) {
            out.push_back("chain break at step " + std::to_string(i));
        }
    }
    return out;
}

} // namespace flowpilot
