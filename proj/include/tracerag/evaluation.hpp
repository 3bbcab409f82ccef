#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tracerag/client.hpp"
#include "tracerag/rag.hpp"

namespace tracerag {

// Answer candidate: last balanced \boxed{...} payload; otherwise the tail of
// the last line carrying a final-answer marker ("Answer:", "final answer is").
std::optional<std::string> extract_answer(std::string_view sample);

/// Canonical form used for exact matching: trim, collapse whitespace, strip
/// surrounding math delimiters, strip leading zeros on integer-valued strings.
std::string canonicalize_answer(std::string_view s);

struct GradeLogEntry {
    std::string query_id;
    int sample_index = 0;
    std::string candidate;
    std::string gold;
    bool verdict = false;
    bool via_normalizer = false;
};

struct NormalizerConfig {
    ChatClient* client = nullptr;
    std::string model;
    RetryPolicy retry;
    RunLedger* ledger = nullptr;
};

// Exact match after canonicalization. On a strict mismatch with a configured
// normalizer, one chat call decides equivalence; normalizer failures degrade
// to the strict verdict with a warning.
bool grade(const std::optional<std::string>& candidate, const std::string& gold,
           const NormalizerConfig* normalizer = nullptr, bool* used_normalizer = nullptr);

std::string normalizer_prompt(const std::string& candidate, const std::string& gold);

struct GradeOutcome {
    struct Sample {
        std::optional<std::string> extracted;
        bool correct = false;
    };
    std::string query_id;
    std::vector<Sample> per_sample;
    double average = 0.0;  // (# correct) / (# samples)
};

GradeOutcome grade_record(const RunRecord& record, const std::string& gold,
                          const NormalizerConfig* normalizer = nullptr,
                          std::vector<GradeLogEntry>* log = nullptr);

double average_at_k(const std::vector<bool>& per_sample_correct);

/// Mean per-query average, as a percentage in [0,100].
double aggregate_accuracy_pct(const std::vector<GradeOutcome>& outcomes);

class PriceTable {
public:
    struct Price {
        double input_per_million = 0.0;   // dollars per 1M prompt tokens
        double output_per_million = 0.0;  // dollars per 1M completion tokens
    };

    void set(const std::string& model, Price price) { prices_[model] = price; }
    Price lookup(const std::string& model) const;  // throws on unknown model

    /// Plain-text config: one `model input_price output_price` triple per line.
    static PriceTable load(const std::filesystem::path& path);

private:
    std::map<std::string, Price> prices_;
};

/// Total spend for one query in US cents: prompt tokens priced once, completion
/// tokens summed over every sample issued.
double cost_per_query_cents(const Usage& usage, const PriceTable& prices,
                            const std::string& model);

struct MetricsRow {
    std::string benchmark;
    std::string model;
    std::string mode;  // corpus mode tag, "none" for the No-RAG baseline
    double accuracy_pct = 0.0;
    std::optional<double> delta_pct;  // vs the No-RAG row of the same (benchmark, model)
    double cost_cents = 0.0;
};

/// Fills delta_vs_baseline for every row that has a matching mode="none" row.
void fill_deltas(std::vector<MetricsRow>& rows);

std::string metrics_csv(const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> parse_metrics_csv(const std::string& text);

struct FrontierPoint {
    std::string model;
    std::string mode;
    double accuracy_pct = 0.0;
    double cost_cents = 0.0;
};

/// One point per (model, mode), averaging accuracy and cost across benchmarks.
std::vector<FrontierPoint> frontier_points(const std::vector<MetricsRow>& rows);

std::string frontier_csv(const std::vector<FrontierPoint>& points);
std::vector<FrontierPoint> parse_frontier_csv(const std::string& text);

/// Self-contained SVG scatter of cost (x) vs accuracy (y) with labeled points.
std::string frontier_svg(const std::vector<FrontierPoint>& points);

}  // namespace tracerag
