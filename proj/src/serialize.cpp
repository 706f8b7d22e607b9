// Copyright 2026 The flowpilot Authors
// SPDX-License-Identifier: Apache-2.0

#include "flowpilot/serialize.hpp"

#include "flowpilot/errors.hpp"

#include <fstream>
#include <sstream>

namespace flowpilot {

namespace {

template <typename T>
T required(json const & j, char const * field)
{
    if (!j.is_object() || !j.contains(field)) {
        throw json::other_error::create(501, std::string("missing field '") + field + "'", &j);
    }
    return j.at(field).get<T>();
}

void check_version(json const & j)
{
    if (!j.contains("v") || !j.at("v").is_number_integer() || j.at("v").get<int>() != kSchemaVersion) {
        throw json::other_error::create(502, "unsupported or missing schema version \"v\"", &j);
    }
}

} // namespace

void to_json(json & j, UiElement const & e)
{
    j = json{
        {"element_id", e.element_id},
        {"kind", std::string(to_string(e.kind))},
        {"label", e.label},
        {"enabled", e.enabled},
        {"focused", e.focused},
    };
}

void from_json(json const & j, UiElement & e)
{
    e.element_id = required<std::string>(j, "element_id");
    auto kind = required<std::string>(j, "kind");
    auto parsed = parse_element_kind(kind);
    if (!parsed) {
        throw json::other_error::create(503, "unknown element kind '" + kind + "'", &j);
    }
    e.kind = *parsed;
    e.label = j.value("label", std::string{});
    e.enabled = j.value("enabled", true);
    e.focused = j.value("focused", false);
}

void to_json(json & j, GuiState const & s)
{
    j = json{
        {"state_id", s.state_id},
        {"app_id", s.app_id},
        {"screen_id", s.screen_id},
        {"elements", s.elements},
        {"text_digest", s.text_digest},
    };
    if (s.image_ref) {
        j["image_ref"] = *s.image_ref;
    }
}

void from_json(json const & j, GuiState & s)
{
    s.state_id = required<std::string>(j, "state_id");
    s.app_id = required<std::string>(j, "app_id");
    s.screen_id = required<std::string>(j, "screen_id");
    s.elements = j.value("elements", std::vector<UiElement>{});
    s.text_digest = j.contains("text_digest") ? j.at("text_digest").get<std::string>()
                                              : compute_text_digest(s.elements);
    if (j.contains("image_ref") && !j.at("image_ref").is_null()) {
        s.image_ref = j.at("image_ref").get<std::string>();
    } else {
        s.image_ref.reset();
    }
}

void to_json(json & j, Action const & a)
{
    j = json{{"kind", std::string(to_string(a.kind))}};
    if (a.target) {
        j["target"] = *a.target;
    }
    if (a.text) {
        j["text"] = *a.text;
    }
    if (a.direction) {
        j["direction"] = std::string(to_string(*a.direction));
    }
}

void from_json(json const & j, Action & a)
{
    auto kind = required<std::string>(j, "kind");
    auto parsed = parse_action_kind(kind);
    if (!parsed) {
        throw json::other_error::create(503, "unknown action kind '" + kind + "'", &j);
    }
    a = Action{};
    a.kind = *parsed;
    if (j.contains("target") && !j.at("target").is_null()) {
        a.target = j.at("target").get<std::string>();
    }
    if (j.contains("text") && !j.at("text").is_null()) {
        a.text = j.at("text").get<std::string>();
    }
    if (j.contains("direction") && !j.at("direction").is_null()) {
        auto d = j.at("direction").get<std::string>();
        a.direction = parse_direction(d);
        if (!a.direction) {
            throw json::other_error::create(503, "unknown direction '" + d + "'", &j);
        }
    }
}

void to_json(json & j, Step const & s)
{
    j = json{{"before", s.before}, {"action", s.action}, {"after", s.after}, {"gold", s.gold}};
}

void from_json(json const & j, Step & s)
{
    s.before = required<GuiState>(j, "before");
    s.action = required<Action>(j, "action");
    s.after = required<GuiState>(j, "after");
    s.gold = j.value("gold", true);
}

void to_json(json & j, Episode const & e)
{
    j = json{
        {"v", kSchemaVersion},
        {"episode_id", e.episode_id},
        {"goal", e.goal},
        {"category", std::string(to_string(e.category))},
        {"steps", e.steps},
    };
}

void from_json(json const & j, Episode & e)
{
    check_version(j);
    e.episode_id = required<std::string>(j, "episode_id");
    e.goal = required<std::string>(j, "goal");
    auto cat = required<std::string>(j, "category");
    auto parsed = parse_category(cat);
    if (!parsed) {
        throw json::other_error::create(503, "unknown category '" + cat + "'", &j);
    }
    e.category = *parsed;
    e.steps = required<std::vector<Step>>(j, "steps");
}

void to_json(json & j, EmbeddingVector const & v)
{
    j = json::array();
    for (double x : v.values()) {
        j.push_back(x);
    }
}

void from_json(json const & j, EmbeddingVector & v)
{
    v = EmbeddingVector(j.get<std::vector<double>>());
}

void to_json(json & j, WorkflowGraph const & g)
{
    json nodes = json::array();
    for (auto const & n : g.nodes()) {
        nodes.push_back(json{
            {"node_id", n.node_id},
            {"canonical_state", n.canonical_state},
            {"embedding", n.embedding},
            {"visit_count", n.visit_count},
        });
    }
    json edges = json::array();
    for (auto const & e : g.edges()) {
        edges.push_back(json{
            {"src", e.src},
            {"dst", e.dst},
            {"action_summary", e.action_summary},
            {"condensed_actions", e.condensed_actions},
            {"support_count", e.support_count},
        });
    }
    j = json{{"v", kSchemaVersion}, {"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
}

void from_json(json const & j, WorkflowGraph & g)
{
    check_version(j);
    g = WorkflowGraph{};
    for (auto const & n : required<json>(j, "nodes")) {
        GraphNode node;
        node.node_id = required<std::string>(n, "node_id");
        node.canonical_state = required<GuiState>(n, "canonical_state");
        node.embedding = required<EmbeddingVector>(n, "embedding");
        node.visit_count = n.value("visit_count", 1);
        g.add_node(std::move(node));
    }
    for (auto const & e : required<json>(j, "edges")) {
        GraphEdge edge;
        edge.src = required<std::string>(e, "src");
        edge.dst = required<std::string>(e, "dst");
        edge.action_summary = required<std::string>(e, "action_summary");
        edge.condensed_actions = e.value("condensed_actions", std::vector<Action>{});
        edge.support_count = e.value("support_count", 1);
        if (!g.node(edge.src) || !g.node(edge.dst)) {
            throw json::other_error::create(504, "edge endpoint missing: " + edge.src + " -> " + edge.dst, &e);
        }
        g.add_edge(std::move(edge));
    }
}

// ---------------------------------------------------------------------------

std::size_t line_of_offset(std::string_view text, std::size_t offset)
{
    std::size_t line = 1;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
        line += text[i] == '\n' ? 1 : 0;
    }
    return line;
}

std::string episodes_to_jsonl(std::span<Episode const> episodes)
{
    std::string out;
    for (auto const & e : episodes) {
        out += json(e).dump();
        out += '\n';
    }
    return out;
}

std::vector<Episode> episodes_from_jsonl(std::string_view text)
{
    std::vector<Episode> out;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        try {
            out.push_back(json::parse(line).get<Episode>());
        } catch (json::exception const & ex) {
            throw LoadError("episodes line " + std::to_string(line_no) + ": " + ex.what());
        } catch (Error const & ex) {
            throw LoadError("episodes line " + std::to_string(line_no) + ": " + ex.what());
        }
    }
    return out;
}

std::vector<Episode> read_episodes(std::filesystem::path const & path)
{
    return episodes_from_jsonl(read_file(path));
}

void write_episodes(std::filesystem::path const & path, std::span<Episode const> episodes)
{
    write_file(path, episodes_to_jsonl(episodes));
}

std::string graph_to_json(WorkflowGraph const & graph)
{
    return json(graph).dump(2) + "\n";
}

WorkflowGraph graph_from_json(std::string_view text)
{
    try {
        return json::parse(text).get<WorkflowGraph>();
    } catch (json::parse_error const & ex) {
        throw LoadError("graph line " + std::to_string(line_of_offset(text, ex.byte)) + ": " + ex.what());
    } catch (json::exception const & ex) {
        throw LoadError(std::string("graph: ") + ex.what());
    } catch (InvalidArgument const & ex) {
        throw LoadError(std::string("graph: ") + ex.what());
    }
}

WorkflowGraph read_graph(std::filesystem::path const & path)
{
    return graph_from_json(read_file(path));
}

void write_graph(std::filesystem::path const & path, WorkflowGraph const & graph)
{
    write_file(path, graph_to_json(graph));
}

std::string read_file(std::filesystem::path const & path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw LoadError("cannot open '" + path.string() + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(std::filesystem::path const & path, std::string_view content)
{
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot write '" + path.string() + "'");
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) {
        throw Error("write failed for '" + path.string() + "'");
    }
}

} // namespace flowpilot
