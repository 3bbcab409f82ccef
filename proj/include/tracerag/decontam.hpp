#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tracerag/record.hpp"

namespace tracerag {

// Normalization for n-gram decontamination: ASCII lowercase, split on
// non-alphanumeric runs (multi-byte UTF-8 sequences count as letters).
std::vector<std::string> normalize_tokens(std::string_view text);

// N-grams are stored as 64-bit fingerprints of the joined token window,
// kept sorted and deduplicated.
using NgramSet = std::vector<uint64_t>;

uint64_t ngram_fingerprint(std::span<const std::string> window);

/// All contiguous n-token windows of the normalized text; empty when the text
/// has fewer than n tokens.
NgramSet ngram_set(std::string_view text, int n);

/// |a ∩ b| / |a ∪ b|; 0 when both sets are empty.
double jaccard(const NgramSet& a, const NgramSet& b);

struct DecontamEntry {
    std::string record_id;
    std::string query_id;  // the maximizing query
    double score = 0.0;
};

struct DecontamReport {
    std::vector<DecontamEntry> removed;
    size_t kept_count = 0;
    double removed_fraction = 0.0;

    std::string summary_line(size_t input_size) const;
};

constexpr int kDefaultDecontamNgram = 13;
constexpr double kDefaultDecontamThreshold = 0.8;

// Removes every record whose problem+trace text exceeds `threshold` 13-gram
// Jaccard similarity against any query question (strict inequality). The
// report lists the maximizing query per removed record, ties broken by query
// order. Throws on an empty query set.
std::pair<std::vector<TraceRecord>, DecontamReport> decontaminate(
    const std::vector<TraceRecord>& corpus, const std::vector<EvalQuery>& queries,
    int n = kDefaultDecontamNgram, double threshold = kDefaultDecontamThreshold);

/// The comparison text used for a record: problem ⧺ trace.
std::string decontam_text(const TraceRecord& r);

std::string decontam_report_jsonl(const DecontamReport& report);

}  // namespace tracerag
