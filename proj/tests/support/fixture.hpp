#pragma once

#include <filesystem>
#include <functional>
#include <vector>

#include "tracerag/client.hpp"
#include "tracerag/record.hpp"

namespace tracerag::testing {

// Deterministic 50-record synthetic corpus with known answers. Two records
// duplicate query questions (so default decontamination removes them), a few
// carry an "alternative approach" marker (so the mock structural transform
// splits them), and every fifth trace is long enough to chunk at 512 tokens.
std::vector<TraceRecord> fixture_traces();
std::vector<EvalQuery> fixture_queries();

std::string fixture_prices_text();

struct FixturePaths {
    std::filesystem::path traces;
    std::filesystem::path queries;
    std::filesystem::path prices;
};

FixturePaths write_fixture(const std::filesystem::path& dir);

/// Chat double driven by a handler; use for fault injection and scripted replies.
class FakeChatClient : public ChatClient {
public:
    using Handler = std::function<ClientResult<ChatResponse>(const ChatRequest&)>;

    explicit FakeChatClient(Handler handler) : handler_(std::move(handler)) {}
    std::string id() const override { return "fake"; }
    ClientResult<ChatResponse> complete_once(const ChatRequest& request) override {
        ++calls_;
        return handler_(request);
    }
    int calls() const { return calls_; }

private:
    Handler handler_;
    int calls_ = 0;
};

}  // namespace tracerag::testing
