#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tracerag/client.hpp"
#include "tracerag/record.hpp"
#include "tracerag/retrieval.hpp"

namespace tracerag {

struct SamplingConfig {
    double temperature = 0.6;
    int max_tokens = 16384;
    int n_samples = 8;
};

// Hint-augmented inference prompt: instruction line, "Example i:" blocks in
// rank order, then the main problem. With no hits the prompt is the bare
// question (the No-RAG form).
std::string assemble_prompt(std::string_view question, const std::vector<SearchHit>& hits);

struct RunRecord {
    std::string query_id;
    std::string benchmark;
    std::string corpus_mode;  // short unit-mode tag, or "none" for No RAG
    std::string model;
    std::vector<std::pair<std::string, double>> retrieved;  // (unit_id, score) in rank order
    std::string prompt;
    std::vector<std::string> samples;
    Usage usage;
    SamplingConfig config;
};

std::string run_record_jsonl(const RunRecord& r);
RunRecord run_record_from_jsonl(const std::string& line);
std::vector<RunRecord> load_run_records(const std::filesystem::path& path);

struct RunOptions {
    std::string model = "mock";
    SamplingConfig sampling;
    bool sampling_overridden = false;  // when false, n_samples follows query.samples_required
    size_t k = 3;
    std::filesystem::path checkpoint_path;
    RetryPolicy retry;
    RunLedger* ledger = nullptr;
    TokenBudget* budget = nullptr;
    int workers = 8;
};

struct RunFailure {
    std::string query_id;
    std::string reason;
};

struct RunResult {
    std::vector<RunRecord> records;  // sorted by query_id
    std::vector<RunFailure> failures;
    bool aborted_on_budget = false;
};

// Retrieve (when an index is given), assemble, sample, and persist one
// RunRecord per query. Each record is checkpointed as it completes, so an
// interrupted run resumes to the same final record set. Per-query client
// failures are recorded and skipped; only budget exhaustion aborts.
RunResult run_benchmark(const std::vector<EvalQuery>& queries, const Index* index,
                        Embedder* embedder, ChatClient& solver, const RunOptions& options);

}  // namespace tracerag
