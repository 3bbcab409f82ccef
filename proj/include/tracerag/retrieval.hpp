#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tracerag/client.hpp"
#include "tracerag/record.hpp"
#include "tracerag/tokenizer.hpp"

namespace tracerag {

struct Chunk {
    std::string source_id;
    int seq = 0;
    size_t token_begin = 0;  // token indices into the source token sequence
    size_t token_end = 0;
    std::string text;
};

// Splits text into consecutive windows of exactly `limit` tokens (the last one
// may be shorter). Chunk text is sliced at token-span boundaries, so the
// concatenation of the chunks' token sequences reproduces the source token
// sequence exactly.
std::vector<Chunk> chunk_text(std::string_view text, size_t limit, const Tokenizer& tokenizer,
                              const std::string& source_id = "");

struct BuildOptions {
    size_t chunk_limit = 512;
    bool include_problem = true;  // prepend the problem statement for full/chunked units
    const Tokenizer* tokenizer = nullptr;  // defaults to WordTokenizer
};

// Materializes retrieval units from trace records for full, chunked and
// final-output modes (transformed modes come from the transformation stage).
std::vector<CorpusUnit> build_units(const std::vector<TraceRecord>& records, UnitMode mode,
                                    const BuildOptions& options = {});

struct IndexEntry {
    std::string unit_id;
    std::vector<float> vector;
};

struct SearchHit {
    std::string unit_id;
    double score = 0.0;
    std::string text;
};

struct RetrievedContext {
    std::string query_id;
    std::vector<SearchHit> hits;  // score descending, ties by ascending unit_id
    size_t k = 0;
};

// Flat exact-scan index over unit-norm vectors, persisted as a little-endian
// binary file plus a JSONL sidecar holding the unit texts.
class Index {
public:
    static constexpr uint32_t kFormatVersion = 1;

    static Index build(const std::vector<CorpusUnit>& units, Embedder& embedder,
                       size_t batch_size = 64, int workers = 1, RunLedger* ledger = nullptr);

    void save(const std::filesystem::path& path) const;
    static Index load(const std::filesystem::path& path);

    static std::filesystem::path sidecar_path(const std::filesystem::path& index_path);

    RetrievedContext search(const std::string& query_text, size_t k, Embedder& embedder,
                            const std::string& query_id = "") const;

    size_t size() const { return entries_.size(); }
    size_t dimension() const { return dimension_; }
    const std::string& embedder_id() const { return embedder_id_; }
    UnitMode mode() const { return mode_; }
    const std::vector<IndexEntry>& entries() const { return entries_; }
    const std::string& unit_text(const std::string& unit_id) const;

private:
    size_t dimension_ = 0;
    std::string embedder_id_;
    UnitMode mode_ = UnitMode::full;
    std::vector<IndexEntry> entries_;
    std::vector<CorpusUnit> units_;  // sidecar content, parallel to entries_
};

}  // namespace tracerag
