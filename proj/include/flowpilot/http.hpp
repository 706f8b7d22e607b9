// Copyright 2026 The flowpilot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>

namespace flowpilot {

/// Where and how to reach an OpenAI-compatible HTTP service.
struct EndpointConfig
{
    std::string url;           // e.g. http://127.0.0.1:8080/v1/chat/completions
    std::string model;
    std::string key_env;       // name of the env var holding the bearer token
    double timeout_s = 30.0;
    double temperature = 0.0;
    int transport_retries = 2; // retries after the first attempt
    std::chrono::milliseconds backoff_initial{200};
};

/// Reads `<section>.url`, `<section>.model`, `<section>.key_env`,
/// `<section>.timeout_s`, `<section>.temperature` from a config document.
/// Both nested ({"backend":{"url":..}}) and flat ({"backend.url":..}) keys
/// are accepted. Throws InvalidArgument when the url is missing.
[[nodiscard]] EndpointConfig endpoint_from_config(nlohmann::json const & config, std::string_view section);

[[nodiscard]] nlohmann::json load_config(std::filesystem::path const & path);

/// Sleep hook so tests can observe backoff without waiting.
using SleepFn = std::function<void(std::chrono::milliseconds)>;

/// POSTs `body` as application/json and returns the 2xx response body.
/// Connection failures, timeouts, 429 and 5xx are retried
/// `cfg.transport_retries` times with exponential backoff (initial, 2x, ...),
/// then TransportError carries the total attempt count. Other non-2xx
/// statuses raise ProtocolError immediately.
[[nodiscard]] std::string post_json(EndpointConfig const & cfg, std::string const & body, SleepFn const & sleep = {});

} // namespace flowpilot
