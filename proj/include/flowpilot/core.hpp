// Copyright 2026 The flowpilot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace flowpilot {

/// FNV-1a, 64 bit. Used wherever a hash must be stable across runs and
/// platforms (embedding buckets, state ids, RNG stream derivation).
[[nodiscard]] constexpr std::uint64_t fnv1a64(std::string_view bytes) noexcept
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

// ---------------------------------------------------------------------------
// GUI state
// ---------------------------------------------------------------------------

enum class ElementKind { Button, TextField, ListItem, Label, Toggle };

[[nodiscard]] std::string_view to_string(ElementKind kind) noexcept;
[[nodiscard]] std::optional<ElementKind> parse_element_kind(std::string_view name) noexcept;

struct UiElement
{
    std::string element_id;
    ElementKind kind = ElementKind::Label;
    std::string label;
    bool enabled = true;
    bool focused = false;

    friend bool operator==(UiElement const &, UiElement const &) = default;
};

[[nodiscard]] constexpr bool is_interactive(ElementKind kind) noexcept
{
    return kind != ElementKind::Label;
}

struct GuiState
{
    std::string state_id;
    std::string app_id;
    std::string screen_id;
    std::vector<UiElement> elements;
    std::string text_digest;
    std::optional<std::string> image_ref;

    [[nodiscard]] UiElement const * find(std::string_view element_id) const noexcept;
    [[nodiscard]] UiElement const * focused_element() const noexcept;

    friend bool operator==(GuiState const &, GuiState const &) = default;
};

/// Lowercased, whitespace-collapsed labels joined by '\n' in element order.
[[nodiscard]] std::string compute_text_digest(std::span<UiElement const> elements);

/// Builds a state with its digest filled in. When `state_id` is empty a
/// content-derived id of the form "app/screen#xxxxxxxx" is assigned, so two
/// states with identical content always share an id.
[[nodiscard]] GuiState make_state(
    std::string app_id,
    std::string screen_id,
    std::vector<UiElement> elements,
    std::string state_id = {});

/// Structural identity: app, screen and the sorted multiset of
/// (kind, label) pairs. Element order, focus and enablement are ignored.
[[nodiscard]] std::string state_fingerprint(GuiState const & state);

[[nodiscard]] std::vector<std::string> validate_state(GuiState const & state);

// ---------------------------------------------------------------------------
// Actions
// ---------------------------------------------------------------------------

enum class ActionKind { Tap, Type, Scroll, Navigate, Back, Home, Complete };
enum class ScrollDirection { Up, Down };

[[nodiscard]] std::string_view to_string(ActionKind kind) noexcept;
[[nodiscard]] std::string_view to_string(ScrollDirection dir) noexcept;
[[nodiscard]] std::optional<ActionKind> parse_action_kind(std::string_view name) noexcept;
[[nodiscard]] std::optional<ScrollDirection> parse_direction(std::string_view name) noexcept;

/// An atomic GUI action. For NAVIGATE, `target` holds the app id.
struct Action
{
    ActionKind kind = ActionKind::Complete;
    std::optional<std::string> target;
    std::optional<std::string> text;
    std::optional<ScrollDirection> direction;

    static Action tap(std::string target);
    static Action type(std::string target, std::string text);
    static Action scroll(ScrollDirection dir);
    static Action navigate(std::string app);
    static Action back();
    static Action home();
    static Action complete();

    friend bool operator==(Action const &, Action const &) = default;
};

/// Rule violations for a single action ("TYPE requires text", ...).
[[nodiscard]] std::vector<std::string> validate_action(Action const & action);

/// One-line rendering in the action grammar:
///   TAP <id> | TYPE <id> "<text>" | SCROLL up|down | NAVIGATE <app>
///   | BACK | HOME | COMPLETE
/// Quotes and backslashes inside TYPE text are backslash-escaped.
[[nodiscard]] std::string render_action(Action const & action);

/// Strict parse of one grammar line (surrounding whitespace allowed, the
/// keyword is case-insensitive). Returns nullopt on any deviation.
[[nodiscard]] std::optional<Action> parse_action(std::string_view line);

/// First line of a free-form response that parses as an action.
[[nodiscard]] std::optional<Action> find_action(std::string_view response);

// ---------------------------------------------------------------------------
// Episodes
// ---------------------------------------------------------------------------

struct Step
{
    GuiState before;
    Action action;
    GuiState after;
    bool gold = true;

    friend bool operator==(Step const &, Step const &) = default;
};

/// The six functional domains, in report column order.
enum class Category { Tool, Information, Shopping, Media, Social, MultiApps };

inline constexpr Category kAllCategories[] = {
    Category::Tool, Category::Information, Category::Shopping,
    Category::Media, Category::Social, Category::MultiApps,
};

[[nodiscard]] std::string_view to_string(Category c) noexcept;
[[nodiscard]] std::optional<Category> parse_category(std::string_view name) noexcept;

struct Episode
{
    std::string episode_id;
    std::string goal;
    Category category = Category::Tool;
    std::vector<Step> steps;

    friend bool operator==(Episode const &, Episode const &) = default;
};

/// Every violated invariant, one description per violation. Step-level
/// messages are prefixed "step <i>: " (0-based); chain breaks read
/// "chain break at step <i>".
[[nodiscard]] std::vector<std::string> validate_episode(Episode const & ep);

enum class TransitionKind { PageJump, InPage };

[[nodiscard]] std::string_view to_string(TransitionKind kind) noexcept;

// ---------------------------------------------------------------------------
// Small string helpers shared by several modules.
// ---------------------------------------------------------------------------

[[nodiscard]] std::string to_lower(std::string_view s);
[[nodiscard]] std::string trim(std::string_view s);
[[nodiscard]] std::string join(std::span<std::string const> parts, std::string_view sep);

} // namespace flowpilot
