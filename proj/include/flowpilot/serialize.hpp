// Copyright 2026 The flowpilot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// JSON schema (version "v": 1) for episodes and workflow graphs.
//
//   episode line: {"v":1,"episode_id":..,"goal":..,"category":..,
//                  "steps":[{"before":State,"action":Action,"after":State,"gold":bool}]}
//   State:  {"state_id","app_id","screen_id","elements":[Element],"text_digest"[,"image_ref"]}
//   Element:{"element_id","kind","label","enabled","focused"}
//   Action: {"kind":"TAP"|...[,"target"][,"text"][,"direction":"up"|"down"]}
//   graph:  {"v":1,"nodes":[{"node_id","canonical_state","embedding":[..],"visit_count"}],
//            "edges":[{"src","dst","action_summary","condensed_actions":[Action],"support_count"}]}

#include "flowpilot/core.hpp"
#include "flowpilot/graph.hpp"

#include <json.hpp>

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace flowpilot {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

void to_json(json & j, UiElement const & e);
void from_json(json const & j, UiElement & e);
void to_json(json & j, GuiState const & s);
void from_json(json const & j, GuiState & s);
void to_json(json & j, Action const & a);
void from_json(json const & j, Action & a);
void to_json(json & j, Step const & s);
void from_json(json const & j, Step & s);
void to_json(json & j, Episode const & e);
void from_json(json const & j, Episode & e);
void to_json(json & j, EmbeddingVector const & v);
void from_json(json const & j, EmbeddingVector & v);
void to_json(json & j, WorkflowGraph const & g);
void from_json(json const & j, WorkflowGraph & g);

/// One compact JSON object per line, each terminated by '\n'.
[[nodiscard]] std::string episodes_to_jsonl(std::span<Episode const> episodes);

/// Throws LoadError naming the 1-based line on malformed input or a
/// schema version other than 1. Blank lines are skipped.
[[nodiscard]] std::vector<Episode> episodes_from_jsonl(std::string_view text);

[[nodiscard]] std::vector<Episode> read_episodes(std::filesystem::path const & path);
void write_episodes(std::filesystem::path const & path, std::span<Episode const> episodes);

/// Deterministic rendering (2-space indent, trailing newline).
[[nodiscard]] std::string graph_to_json(WorkflowGraph const & graph);
[[nodiscard]] WorkflowGraph graph_from_json(std::string_view text);

[[nodiscard]] WorkflowGraph read_graph(std::filesystem::path const & path);
void write_graph(std::filesystem::path const & path, WorkflowGraph const & graph);

[[nodiscard]] std::string read_file(std::filesystem::path const & path);
void write_file(std::filesystem::path const & path, std::string_view content);

/// 1-based line of a byte offset, for parse diagnostics.
[[nodiscard]] std::size_t line_of_offset(std::string_view text, std::size_t offset);

} // namespace flowpilot
