// Copyright 2026 The flowpilot Authors
// SPDX-License-Identifier: Apache-2.0

#include "flowpilot/backend.hpp"
#include "flowpilot/errors.hpp"
#include "flowpilot/remote_embedder.hpp"

#include "support/stub_server.hpp"

#include <gtest/gtest.h>

#include <cstdlib>

namespace flowpilot {
namespace {

using testing::StubServer;

struct SleepLog
{
    std::vector<std::chrono::milliseconds> waits;
    SleepFn fn()
    {
        return [this](std::chrono::milliseconds d) { waits.push_back(d); };
    }
};

EndpointConfig endpoint(std::string url)
{
    EndpointConfig cfg;
    cfg.url = std::move(url);
    cfg.model = "m-1";
    cfg.timeout_s = 2.0;
    return cfg;
}

TEST(ChatWire, RequestBytesAndHeaders)
{
    ::setenv("FLOWPILOT_TEST_KEY", "sekret", 1);
    StubServer srv({{200, R"({"choices":[{"message":{"role":"assistant","content":"TAP ok"}}]})"}});
    auto cfg = endpoint(srv.url("/v1/chat/completions"));
    cfg.key_env = "FLOWPILOT_TEST_KEY";
    RemoteBackend b(cfg);
    EXPECT_EQ(b.complete("ROLE: decision", "ctx \"q\"\n"), "TAP ok");
    auto reqs = srv.requests();
    ASSERT_EQ(reqs.size(), 1u);
    EXPECT_EQ(reqs[0].path, "/v1/chat/completions");
    EXPECT_EQ(reqs[0].body, chat_request_body("m-1", "ROLE: decision", "ctx \"q\"\n", 0.0));
    EXPECT_EQ(reqs[0].body,
              R"({"model":"m-1","messages":[{"role":"system","content":"ROLE: decision"},)"
              R"({"role":"user","content":"ctx \"q\"\n"}],"temperature":0.0})");
    EXPECT_EQ(reqs[0].content_type, "application/json");
    EXPECT_EQ(reqs[0].authorization, "Bearer sekret");
}

TEST(ChatWire, MalformedPayloadsAreProtocolErrors)
{
    for (auto const * body : {"not json", "{}", R"({"choices":[]})", R"({"choices":[{"message":{"content":3}}]})",
                              R"({"choices":[{"message":{}}]})"}) {
        EXPECT_THROW((void)parse_chat_response(body), ProtocolError) << body;
    }
    StubServer srv({{200, "{\"choices\":"}});
    RemoteBackend b(endpoint(srv.url("/chat")));
    EXPECT_THROW((void)b.complete("ROLE: planner", "x"), ProtocolError);
    EXPECT_EQ(srv.requests().size(), 1u);
}

TEST(ChatWire, ServerErrorsRetriedTwiceWithBackoff)
{
    StubServer srv({{500, "oops"}});
    SleepLog sleeps;
    RemoteBackend b(endpoint(srv.url("/chat")), sleeps.fn());
    try {
        (void)b.complete("ROLE: planner", "x");
        FAIL() << "expected TransportError";
    } catch (TransportError const & ex) {
        EXPECT_EQ(ex.attempts(), 3);
    }
    EXPECT_EQ(srv.requests().size(), 3u);
    using std::chrono::milliseconds;
    EXPECT_EQ(sleeps.waits, (std::vector<milliseconds>{milliseconds(200), milliseconds(400)}));
}

TEST(ChatWire, RecoversAfterTransientFailure)
{
    StubServer srv({{503, ""}, {200, R"({"choices":[{"message":{"content":"BACK"}}]})"}});
    SleepLog sleeps;
    RemoteBackend b(endpoint(srv.url("/chat")), sleeps.fn());
    EXPECT_EQ(b.complete("ROLE: decision", "x"), "BACK");
    EXPECT_EQ(srv.requests().size(), 2u);
    EXPECT_EQ(sleeps.waits.size(), 1u);
}

TEST(ChatWire, ClientErrorsAreNotRetried)
{
    StubServer srv({{400, R"({"error":"bad"})"}});
    SleepLog sleeps;
    RemoteBackend b(endpoint(srv.url("/chat")), sleeps.fn());
    EXPECT_THROW((void)b.complete("ROLE: planner", "x"), ProtocolError);
    EXPECT_EQ(srv.requests().size(), 1u);
    EXPECT_TRUE(sleeps.waits.empty());
}

TEST(ChatWire, DeadPortExhaustsRetries)
{
    SleepLog sleeps;
    RemoteBackend b(endpoint("http://127.0.0.1:" + std::to_string(testing::dead_port()) + "/chat"), sleeps.fn());
    try {
        (void)b.complete("ROLE: planner", "x");
        FAIL() << "expected TransportError";
    } catch (TransportError const & ex) {
        EXPECT_EQ(ex.attempts(), 3);
    }
    EXPECT_EQ(sleeps.waits.size(), 2u);
}

TEST(EmbeddingsWire, RequestBytesAndOrdering)
{
    StubServer srv({{200, R"({"data":[{"index":1,"embedding":[0,2]},{"index":0,"embedding":[3,4]}]})"}});
    std::vector<std::string> texts = {"alpha", "béta"};
    auto out = remote_embed(endpoint(srv.url("/v1/embeddings")), texts);
    ASSERT_EQ(out.size(), 2u);
    EXPECT_DOUBLE_EQ(out[0][0], 0.6);
    EXPECT_DOUBLE_EQ(out[0][1], 0.8);
    EXPECT_DOUBLE_EQ(out[1][1], 1.0);
    auto reqs = srv.requests();
    ASSERT_EQ(reqs.size(), 1u);
    EXPECT_EQ(reqs[0].body, embeddings_request_body(texts, "m-1"));
    EXPECT_EQ(reqs[0].body, "{\"input\":[\"alpha\",\"béta\"],\"model\":\"m-1\"}");
}

TEST(EmbeddingsWire, EmptyBatchSkipsNetwork)
{
    EXPECT_TRUE(remote_embed(endpoint("http://127.0.0.1:1/none"), {}).empty());
}

TEST(EmbeddingsWire, MalformedPayloads)
{
    for (auto const * body : {
             "[]",
             R"({"data":[]})",
             R"({"data":[{"index":0,"embedding":[1,0]},{"index":0,"embedding":[0,1]}]})",
             R"({"data":[{"index":0,"embedding":[1,0]},{"index":5,"embedding":[0,1]}]})",
             R"({"data":[{"index":0,"embedding":[1,0]},{"index":1,"embedding":[0,1,0]}]})",
             R"({"data":[{"index":0,"embedding":["x",0]},{"index":1,"embedding":[0,1]}]})",
         }) {
        EXPECT_THROW((void)parse_embeddings_response(body, 2), ProtocolError) << body;
    }
}

TEST(EmbeddingsWire, DimensionMismatch)
{
    StubServer srv({{200, R"({"data":[{"index":0,"embedding":[1,0,0]}]})"}});
    RemoteEmbedder e(endpoint(srv.url("/emb")), 2);
    EXPECT_THROW((void)e.embed_one("x"), ProtocolError);
}

TEST(Config, NestedAndFlatKeys)
{
    auto nested = nlohmann::json::parse(R"({"backend":{"url":"http://h/x","model":"a","timeout_s":5}})");
    auto cfg = endpoint_from_config(nested, "backend");
    EXPECT_EQ(cfg.url, "http://h/x");
    EXPECT_EQ(cfg.model, "a");
    EXPECT_EQ(cfg.timeout_s, 5.0);
    auto flat = nlohmann::json::parse(R"({"embedding.url":"http://h/e","embedding.model":"b"})");
    EXPECT_EQ(endpoint_from_config(flat, "embedding").model, "b");
    EXPECT_THROW((void)endpoint_from_config(flat, "backend"), InvalidArgument);
}

} // namespace
} // namespace flowpilot
