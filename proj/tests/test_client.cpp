#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <map>
#include <random>

#include "support/fixture.hpp"
#include "tracerag/client.hpp"
#include "tracerag/http_client.hpp"
#include "tracerag/io.hpp"
#include "tracerag/mock_client.hpp"

using namespace tracerag;
using tracerag::testing::FakeChatClient;

namespace {

std::filesystem::path temp_dir() {
    auto dir = std::filesystem::temp_directory_path() /
               ("tracerag_client_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(dir);
    return dir;
}

double vector_norm(const std::vector<float>& v) {
    double s = 0.0;
    for (const float x : v) s += static_cast<double>(x) * static_cast<double>(x);
    return std::sqrt(s);
}

double dot(const std::vector<float>& a, const std::vector<float>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    return s;
}

ChatResponse ok_response(int n) {
    ChatResponse r;
    for (int i = 0; i < n; ++i) {
        r.samples.push_back("sample " + std::to_string(i));
        r.usage.completion_tokens.push_back(2);
    }
    r.usage.prompt_tokens = 5;
    return r;
}

}  // namespace

TEST_CASE("mock client is deterministic") {
    MockChatClient client;
    ChatRequest request;
    request.model = "mock";
    request.user = "What is 2 + 2?";
    request.n_samples = 3;
    const auto a = client.complete_once(request);
    const auto b = client.complete_once(request);
    REQUIRE(a.ok());
    REQUIRE(b.ok());
    CHECK(a.value->samples == b.value->samples);
    CHECK(a.value->usage.prompt_tokens == b.value->usage.prompt_tokens);
    // different sample indices give different texts
    CHECK(a.value->samples[0] != a.value->samples[1]);
}

TEST_CASE("n_samples=8 yields 8 samples") {
    MockChatClient client;
    ChatRequest request;
    request.model = "mock";
    request.user = "question";
    request.n_samples = 8;
    const auto r = client.complete_once(request);
    REQUIRE(r.ok());
    CHECK(r.value->samples.size() == 8);
    CHECK(r.value->usage.completion_tokens.size() == 8);
}

TEST_CASE("retryable failures are retried and logged per attempt") {
    const auto dir = temp_dir();
    RunLedger ledger(dir / "ledger.jsonl");
    int failures_left = 2;
    FakeChatClient flaky([&](const ChatRequest& request) {
        if (failures_left > 0) {
            --failures_left;
            return ClientResult<ChatResponse>::failure(
                ClientError::make(ErrorKind::rate_limited, "slow down"));
        }
        return ClientResult<ChatResponse>::success(ok_response(request.n_samples));
    });
    ChatRequest request;
    request.model = "m";
    request.user = "u";
    request.n_samples = 1;
    RetryPolicy policy;
    policy.max_attempts = 5;
    policy.base_delay_ms = 0;

    const auto result = complete(flaky, request, "rec1", policy, &ledger);
    REQUIRE(result.ok());
    CHECK(flaky.calls() == 3);

    const auto lines = read_lines(dir / "ledger.jsonl");
    REQUIRE(lines.size() == 3);
    CHECK(nlohmann::json::parse(lines[0])["outcome"] == "error:rate_limited");
    CHECK(nlohmann::json::parse(lines[1])["outcome"] == "error:rate_limited");
    CHECK(nlohmann::json::parse(lines[2])["outcome"] == "ok");
    CHECK(nlohmann::json::parse(lines[2])["attempt"] == 3);
    std::filesystem::remove_all(dir);
}

TEST_CASE("non-retryable errors fail immediately") {
    FakeChatClient broken([](const ChatRequest&) {
        return ClientResult<ChatResponse>::failure(
            ClientError::make(ErrorKind::malformed_response, "garbage"));
    });
    ChatRequest request;
    request.n_samples = 1;
    RetryPolicy policy;
    policy.base_delay_ms = 0;
    const auto result = complete(broken, request, "k", policy);
    CHECK_FALSE(result.ok());
    CHECK(result.error->kind == ErrorKind::malformed_response);
    CHECK_FALSE(result.error->retryable);
    CHECK(broken.calls() == 1);
}

TEST_CASE("sample count mismatch is malformed_response, never silent truncation") {
    FakeChatClient short_reply(
        [](const ChatRequest&) { return ClientResult<ChatResponse>::success(ok_response(2)); });
    ChatRequest request;
    request.n_samples = 4;
    RetryPolicy policy;
    policy.base_delay_ms = 0;
    const auto result = complete(short_reply, request, "k", policy);
    CHECK_FALSE(result.ok());
    CHECK(result.error->kind == ErrorKind::malformed_response);
}

TEST_CASE("budget cap aborts with budget_exceeded") {
    TokenBudget budget(10);
    FakeChatClient client(
        [](const ChatRequest& r) { return ClientResult<ChatResponse>::success(ok_response(r.n_samples)); });
    ChatRequest request;
    request.n_samples = 1;
    RetryPolicy policy;
    policy.base_delay_ms = 0;
    const auto first = complete(client, request, "a", policy, nullptr, &budget);
    CHECK(first.ok());  // 7 tokens used
    const auto second = complete(client, request, "b", policy, nullptr, &budget);
    CHECK_FALSE(second.ok());
    CHECK(second.error->kind == ErrorKind::budget_exceeded);
}

TEST_CASE("ledger totals equal the sum of usages and finalize is canonical") {
    const auto dir = temp_dir();
    const auto path = dir / "ledger.jsonl";
    {
        RunLedger ledger(path);
        MockChatClient client;
        RetryPolicy policy;
        policy.base_delay_ms = 0;
        long expected = 0;
        for (const char* key : {"z-last", "a-first", "m-mid"}) {
            ChatRequest request;
            request.model = "mock";
            request.user = std::string("prompt for ") + key;
            request.n_samples = 2;
            const auto r = complete(client, request, key, policy, &ledger);
            REQUIRE(r.ok());
            expected += r.value->usage.total();
        }
        CHECK(ledger.total_tokens() == expected);
        ledger.finalize();
    }
    const auto lines = read_lines(path);
    REQUIRE(lines.size() == 3);
    CHECK(nlohmann::json::parse(lines[0])["key"] == "a-first");
    CHECK(nlohmann::json::parse(lines[1])["key"] == "m-mid");
    CHECK(nlohmann::json::parse(lines[2])["key"] == "z-last");
    std::filesystem::remove_all(dir);
}

TEST_CASE("normalize_unit produces unit vectors and canonicalizes zero") {
    std::vector<float> v{3.0f, 4.0f};
    normalize_unit(v);
    CHECK(vector_norm(v) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(v[0] == doctest::Approx(0.6f));

    std::vector<float> zero(5, 0.0f);
    normalize_unit(zero);
    CHECK(zero[0] == 1.0f);
    CHECK(vector_norm(zero) == doctest::Approx(1.0));
}

TEST_CASE("hash embedder degenerate and identity cases") {
    HashEmbedder embedder;
    const auto empty = embedder.embed_one("");
    CHECK(vector_norm(empty) == doctest::Approx(1.0));
    CHECK(empty[0] == 1.0f);
    // texts shorter than one trigram also map to the canonical vector
    CHECK(embedder.embed_one("ab") == empty);

    const auto a = embedder.embed_one("the cat sat");
    const auto b = embedder.embed_one("the cat sat");
    CHECK(a == b);
    CHECK(dot(a, b) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("hash embedder cosine reproduces hand-computed trigram overlap") {
    // trigrams of "aaab" = {aaa, aab}; of "aaac" = {aaa, aac}; one of two shared
    HashEmbedder embedder;
    const auto u = embedder.embed_one("aaab");
    const auto v = embedder.embed_one("aaac");
    CHECK(dot(u, v) == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("embeddings are unit-norm for random inputs and role is ignored") {
    HashEmbedder embedder;
    std::mt19937_64 rng(404);
    std::vector<std::string> texts;
    for (int i = 0; i < 50; ++i) {
        std::string t;
        const size_t len = rng() % 200;
        for (size_t j = 0; j < len; ++j) t.push_back(static_cast<char>('a' + rng() % 26));
        texts.push_back(std::move(t));
    }
    const auto as_query = embedder.embed(texts, EmbedRole::query);
    const auto as_passage = embedder.embed(texts, EmbedRole::passage);
    REQUIRE(as_query.ok());
    REQUIRE(as_passage.ok());
    for (size_t i = 0; i < texts.size(); ++i) {
        CHECK(vector_norm((*as_query.value)[i]) == doctest::Approx(1.0).epsilon(1e-6));
        CHECK((*as_query.value)[i] == (*as_passage.value)[i]);
    }
    const auto empty_batch = embedder.embed({}, EmbedRole::query);
    CHECK_FALSE(empty_batch.ok());
}

TEST_CASE("openai-compatible chat body mapping") {
    ChatRequest request;
    request.model = "some/model";
    request.system = "be brief";
    request.user = "hi";
    request.temperature = 0.6;
    request.max_tokens = 16384;
    request.n_samples = 8;
    const auto body = nlohmann::json::parse(build_chat_body(request));
    CHECK(body["model"] == "some/model");
    CHECK(body["messages"][0]["role"] == "system");
    CHECK(body["messages"][1]["role"] == "user");
    CHECK(body["temperature"] == 0.6);
    CHECK(body["max_tokens"] == 16384);
    CHECK(body["n"] == 8);

    const std::string reply = R"({
        "choices": [{"message": {"content": "first"}}, {"message": {"content": "second"}}],
        "usage": {"prompt_tokens": 10, "completion_tokens": 20}
    })";
    const auto parsed = parse_chat_body(reply, 2);
    REQUIRE(parsed.ok());
    CHECK(parsed.value->samples == std::vector<std::string>{"first", "second"});
    CHECK(parsed.value->usage.prompt_tokens == 10);
    CHECK(parsed.value->usage.completion_total() == 20);

    CHECK_FALSE(parse_chat_body(reply, 3).ok());
    CHECK_FALSE(parse_chat_body("not json", 1).ok());
}

TEST_CASE("openai-compatible embeddings body mapping") {
    const std::string reply = R"({
        "data": [{"embedding": [3.0, 4.0]}, {"embedding": [0.0, 2.0]}]
    })";
    const auto parsed = parse_embed_body(reply, 2);
    REQUIRE(parsed.ok());
    CHECK((*parsed.value)[0][0] == doctest::Approx(0.6f));  // re-normalized locally
    CHECK((*parsed.value)[1][1] == doctest::Approx(1.0f));

    const std::string drift = R"({"data": [{"embedding": [1.0]}, {"embedding": [1.0, 2.0]}]})";
    const auto bad = parse_embed_body(drift, 2);
    CHECK_FALSE(bad.ok());
    CHECK(bad.error->kind == ErrorKind::malformed_response);
}

TEST_CASE("error kinds carry the documented retryability") {
    CHECK(ClientError::make(ErrorKind::rate_limited, "").retryable);
    CHECK(ClientError::make(ErrorKind::timeout, "").retryable);
    CHECK(ClientError::make(ErrorKind::server, "").retryable);
    CHECK_FALSE(ClientError::make(ErrorKind::malformed_response, "").retryable);
    CHECK_FALSE(ClientError::make(ErrorKind::budget_exceeded, "").retryable);
}
