// Copyright 2026 The flowpilot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <httplib.h>

#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace flowpilot::testing {

/// Loopback HTTP server on an ephemeral port. Records every request body
/// and answers with a scripted sequence of (status, body) replies; the
/// last reply repeats once the sequence is exhausted.
class StubServer
{
public:
    struct Reply
    {
        int status = 200;
        std::string body;
    };

    struct Request
    {
        std::string path;
        std::string body;
        std::string content_type;
        std::string authorization;
    };

    explicit StubServer(std::vector<Reply> replies)
    : replies_(std::move(replies))
    {
        server_.Post(".*", [this](httplib::Request const & req, httplib::Response & res) {
            std::lock_guard lock(mu_);
            requests_.push_back(
                {req.path, req.body, req.get_header_value("Content-Type"), req.get_header_value("Authorization")});
            auto const & r = replies_.at(std::min(served_, replies_.size() - 1));
            ++served_;
            res.status = r.status;
            res.set_content(r.body, "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~StubServer()
    {
        server_.stop();
        thread_.join();
    }

    StubServer(StubServer const &) = delete;
    StubServer & operator=(StubServer const &) = delete;

    [[nodiscard]] std::string url(std::string const & path) const
    {
        return "http://127.0.0.1:" + std::to_string(port_) + path;
    }

    [[nodiscard]] std::vector<Request> requests() const
    {
        std::lock_guard lock(mu_);
        return requests_;
    }

private:
    httplib::Server server_;
    std::vector<Reply> replies_;
    std::vector<Request> requests_;
    std::size_t served_ = 0;
    mutable std::mutex mu_;
    int port_ = 0;
    std::thread thread_;
};

/// A loopback port with nothing listening on it any more.
inline int dead_port()
{
    httplib::Server probe;
    int const port = probe.bind_to_any_port("127.0.0.1");
    std::thread t([&] { probe.listen_after_bind(); });
    probe.wait_until_ready();
    probe.stop();
    t.join();
    return port;
}

} // namespace flowpilot::testing
