#include "tracerag/client.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <thread>

#include "tracerag/io.hpp"

namespace tracerag {

long Usage::completion_total() const {
    return std::accumulate(completion_tokens.begin(), completion_tokens.end(), 0L);
}

const char* to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::timeout: return "timeout";
        case ErrorKind::rate_limited: return "rate_limited";
        case ErrorKind::server: return "server";
        case ErrorKind::malformed_response: return "malformed_response";
        case ErrorKind::budget_exceeded: return "budget_exceeded";
    }
    return "server";
}

ClientError ClientError::make(ErrorKind kind, std::string detail) {
    const bool retryable = kind == ErrorKind::timeout || kind == ErrorKind::rate_limited ||
                           kind == ErrorKind::server;
    return {kind, retryable, std::move(detail)};
}

void normalize_unit(std::vector<float>& v) {
    double norm_sq = 0.0;
    for (const float x : v) norm_sq += static_cast<double>(x) * static_cast<double>(x);
    if (norm_sq <= 0.0) {
        std::fill(v.begin(), v.end(), 0.0f);
        if (!v.empty()) v[0] = 1.0f;
        return;
    }
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (float& x : v) x = static_cast<float>(static_cast<double>(x) * inv);
}

bool TokenBudget::try_charge(long tokens) {
    const long after = used_.fetch_add(tokens) + tokens;
    return after <= cap_;
}

RunLedger::RunLedger(std::filesystem::path path) : path_(std::move(path)) {}

void RunLedger::append(const std::string& line) {
    std::lock_guard<std::mutex> lock(mu_);
    append_line(path_, line);
}

void RunLedger::record_chat(const std::string& key, const std::string& model, int attempt,
                            const std::string& outcome, const Usage& usage) {
    nlohmann::json j;
    j["stage"] = "chat";
    j["key"] = key;
    j["model"] = model;
    j["attempt"] = attempt;
    j["outcome"] = outcome;
    j["prompt_tokens"] = usage.prompt_tokens;
    j["completion_tokens"] = usage.completion_tokens;
    total_tokens_ += usage.total();
    append(j.dump());
}

void RunLedger::record_embed(const std::string& key, const std::string& embedder_id, size_t batch,
                             const std::string& outcome) {
    nlohmann::json j;
    j["stage"] = "embed";
    j["key"] = key;
    j["model"] = embedder_id;
    j["attempt"] = 1;
    j["outcome"] = outcome;
    append(j.dump());
}

void RunLedger::finalize() {
    std::lock_guard<std::mutex> lock(mu_);
    if (!std::filesystem::exists(path_)) return;
    auto lines = read_lines(path_);
    std::sort(lines.begin(), lines.end(), [](const std::string& a, const std::string& b) {
        const auto ja = nlohmann::json::parse(a);
        const auto jb = nlohmann::json::parse(b);
        const auto key = [](const nlohmann::json& j) {
            return std::make_tuple(j.value("stage", ""), j.value("key", ""), j.value("attempt", 0));
        };
        return key(ja) < key(jb);
    });
    std::string buf;
    for (const auto& l : lines) {
        buf += l;
        buf += '\n';
    }
    write_file_atomic(path_, buf);
}

int RetryPolicy::delay_for_attempt(int attempt, uint64_t jitter_seed) const {
    double delay = base_delay_ms * std::pow(2.0, attempt - 1);
    delay = std::min(delay, static_cast<double>(max_delay_ms));
    // splitmix64 step for deterministic jitter in [0.5, 1.0)
    uint64_t z = jitter_seed + 0x9e3779b97f4a7c15ull * static_cast<uint64_t>(attempt);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    z ^= z >> 31;
    const double frac = 0.5 + 0.5 * (static_cast<double>(z % 1024) / 1024.0);
    return static_cast<int>(delay * frac);
}

ClientResult<ChatResponse> complete(ChatClient& client, const ChatRequest& request,
                                    const std::string& ledger_key, const RetryPolicy& policy,
                                    RunLedger* ledger, TokenBudget* budget) {
    std::hash<std::string> hasher;
    const uint64_t seed = hasher(ledger_key + request.user);
    ClientError last = ClientError::make(ErrorKind::server, "no attempts made");
    for (int attempt = 1; attempt <= policy.max_attempts; ++attempt) {
        auto result = client.complete_once(request);
        if (result.ok()) {
            auto& response = *result.value;
            if (static_cast<int>(response.samples.size()) != request.n_samples) {
                ClientError err = ClientError::make(
                    ErrorKind::malformed_response,
                    "expected " + std::to_string(request.n_samples) + " samples, got " +
                        std::to_string(response.samples.size()));
                if (ledger) {
                    ledger->record_chat(ledger_key, request.model, attempt,
                                        std::string("error:") + to_string(err.kind), {});
                }
                return ClientResult<ChatResponse>::failure(std::move(err));
            }
            if (ledger) {
                ledger->record_chat(ledger_key, request.model, attempt, "ok", response.usage);
            }
            if (budget && !budget->try_charge(response.usage.total())) {
                return ClientResult<ChatResponse>::failure(ClientError::make(
                    ErrorKind::budget_exceeded,
                    "token budget exhausted: used " + std::to_string(budget->used()) + " of " +
                        std::to_string(budget->cap())));
            }
            return result;
        }
        last = *result.error;
        if (ledger) {
            ledger->record_chat(ledger_key, request.model, attempt,
                                std::string("error:") + to_string(last.kind), {});
        }
        if (!last.retryable || attempt == policy.max_attempts) {
            break;
        }
        const int delay = policy.delay_for_attempt(attempt, seed);
        if (delay > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(delay));
        }
    }
    return ClientResult<ChatResponse>::failure(std::move(last));
}

}  // namespace tracerag
