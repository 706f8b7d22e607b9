// Copyright 2026 The flowpilot Authors
// SPDX-License-Identifier: Apache-2.0

#include "flowpilot/http.hpp"

#include "flowpilot/errors.hpp"
#include "flowpilot/serialize.hpp"

#include <httplib.h>

#include <cstdlib>
#include <optional>
#include <thread>

namespace flowpilot {

namespace {

std::optional<nlohmann::json> lookup(nlohmann::json const & cfg, std::string_view section, std::string_view key)
{
    std::string const s(section);
    std::string const k(key);
    if (cfg.contains(s) && cfg.at(s).is_object() && cfg.at(s).contains(k)) {
        return cfg.at(s).at(k);
    }
    auto flat = s + "." + k;
    if (cfg.contains(flat)) {
        return cfg.at(flat);
    }
    return std::nullopt;
}

struct SplitUrl
{
    std::string origin; // scheme://host[:port]
    std::string path;
};

SplitUrl split_url(std::string const & url)
{
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw InvalidArgument("endpoint url needs a scheme: '" + url + "'");
    }
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        return {url, "/"};
    }
    return {url.substr(0, path_start), url.substr(path_start)};
}

} // namespace

EndpointConfig endpoint_from_config(nlohmann::json const & config, std::string_view section)
{
    EndpointConfig cfg;
    auto url = lookup(config, section, "url");
    if (!url || !url->is_string()) {
        throw InvalidArgument("config is missing " + std::string(section) + ".url");
    }
    cfg.url = url->get<std::string>();
    if (auto v = lookup(config, section, "model")) {
        cfg.model = v->get<std::string>();
    }
    if (auto v = lookup(config, section, "key_env")) {
        cfg.key_env = v->get<std::string>();
    }
    if (auto v = lookup(config, section, "timeout_s")) {
        cfg.timeout_s = v->get<double>();
    }
    if (auto v = lookup(config, section, "temperature")) {
        cfg.temperature = v->get<double>();
    }
    return cfg;
}

nlohmann::json load_config(std::filesystem::path const & path)
{
    auto text = read_file(path);
    try {
        return nlohmann::json::parse(text);
    } catch (nlohmann::json::parse_error const & ex) {
        throw LoadError(
            "config " + path.string() + " line " + std::to_string(line_of_offset(text, ex.byte)) + ": " + ex.what());
    }
}

std::string post_json(EndpointConfig const & cfg, std::string const & body, SleepFn const & sleep)
{
    auto const [origin, path] = split_url(cfg.url);
    httplib::Client client(origin);
    auto const timeout = std::chrono::duration<double>(cfg.timeout_s);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));

    httplib::Headers headers;
    if (!cfg.key_env.empty()) {
        if (char const * key = std::getenv(cfg.key_env.c_str())) {
            headers.emplace("Authorization", std::string("Bearer ") + key);
        }
    }

    int const max_attempts = 1 + std::max(0, cfg.transport_retries);
    auto delay = cfg.backoff_initial;
    std::string last_failure;
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        auto res = client.Post(path, headers, body, "application/json");
        if (res) {
            int const status = res->status;
            if (status >= 200 && status < 300) {
                return res->body;
            }
            if (status != 429 && status < 500) {
                throw ProtocolError("HTTP " + std::to_string(status) + " from " + cfg.url);
            }
            last_failure = "HTTP " + std::to_string(status);
        } else {
            last_failure = httplib::to_string(res.error());
        }
        if (attempt < max_attempts) {
            if (sleep) {
                sleep(delay);
            } else {
                std::this_thread::sleep_for(delay);
            }
            delay *= 2;
        }
    }
    throw TransportError("POST " + cfg.url + " failed: " + last_failure, max_attempts);
}

} // namespace flowpilot
