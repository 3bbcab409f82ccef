#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace tracerag {

struct ChatRequest {
    std::string model;
    std::optional<std::string> system;
    std::string user;
    double temperature = 0.6;
    int max_tokens = 16384;
    int n_samples = 1;
};

struct Usage {
    long prompt_tokens = 0;
    std::vector<long> completion_tokens;  // one entry per sample

    long completion_total() const;
    long total() const { return prompt_tokens + completion_total(); }
};

struct ChatResponse {
    std::vector<std::string> samples;  // exactly n_samples entries
    Usage usage;
};

enum class ErrorKind { timeout, rate_limited, server, malformed_response, budget_exceeded };

const char* to_string(ErrorKind k);

struct ClientError {
    ErrorKind kind = ErrorKind::server;
    bool retryable = false;
    std::string detail;

    static ClientError make(ErrorKind kind, std::string detail);
};

template <typename T>
struct ClientResult {
    std::optional<T> value;
    std::optional<ClientError> error;

    bool ok() const { return value.has_value(); }
    static ClientResult success(T v) { return {std::move(v), std::nullopt}; }
    static ClientResult failure(ClientError e) { return {std::nullopt, std::move(e)}; }
};

class ChatClient {
public:
    virtual ~ChatClient() = default;
    virtual std::string id() const = 0;
    /// Single attempt, no retries; retry policy lives in complete().
    virtual ClientResult<ChatResponse> complete_once(const ChatRequest& request) = 0;
};

enum class EmbedRole { query, passage };

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::string id() const = 0;
    virtual size_t dimension() const = 0;
    virtual ClientResult<std::vector<std::vector<float>>> embed(const std::vector<std::string>& texts,
                                                                EmbedRole role) = 0;
};

/// L2-normalizes in place; an all-zero vector becomes the canonical e0 unit vector.
void normalize_unit(std::vector<float>& v);

/// Hard cap on cumulative token spend across a run.
class TokenBudget {
public:
    explicit TokenBudget(long cap_tokens) : cap_(cap_tokens) {}
    bool try_charge(long tokens);
    long used() const { return used_.load(); }
    long cap() const { return cap_; }

private:
    long cap_;
    std::atomic<long> used_{0};
};

// Append-only JSONL record of every chat/embedding call. Entries carry no
// wall-clock fields; finalize() rewrites the file in canonical (stage, key,
// attempt) order so completed run directories are byte-reproducible.
class RunLedger {
public:
    explicit RunLedger(std::filesystem::path path);

    void record_chat(const std::string& key, const std::string& model, int attempt,
                     const std::string& outcome, const Usage& usage);
    void record_embed(const std::string& key, const std::string& embedder_id, size_t batch,
                      const std::string& outcome);
    void finalize();

    long total_tokens() const { return total_tokens_.load(); }
    const std::filesystem::path& path() const { return path_; }

private:
    void append(const std::string& line);

    std::filesystem::path path_;
    std::mutex mu_;
    std::atomic<long> total_tokens_{0};
};

struct RetryPolicy {
    int max_attempts = 5;
    int base_delay_ms = 250;
    int max_delay_ms = 8000;

    int delay_for_attempt(int attempt, uint64_t jitter_seed) const;
};

// Retrying wrapper around ChatClient::complete_once: retryable errors are
// retried with exponential backoff and deterministic jitter up to the attempt
// cap; every attempt is recorded to the ledger; the budget is charged on
// success and aborts the call chain once exhausted.
ClientResult<ChatResponse> complete(ChatClient& client, const ChatRequest& request,
                                    const std::string& ledger_key, const RetryPolicy& policy = {},
                                    RunLedger* ledger = nullptr, TokenBudget* budget = nullptr);

}  // namespace tracerag
