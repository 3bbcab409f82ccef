#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tracerag {

enum class Domain { math, code, science, puzzle, other };

const char* to_string(Domain d);
Domain domain_from_string(const std::string& s);

enum class UnitMode {
    full,
    chunk,
    transformed_structural,
    transformed_semantic,
    transformed_reflect,
    final_output,
};

const char* to_string(UnitMode m);
UnitMode unit_mode_from_string(const std::string& s);

/// mode tag as used in unit ids and CLI flags (full|chunked|structural|semantic|reflect|output)
const char* short_tag(UnitMode m);
UnitMode unit_mode_from_short_tag(const std::string& s);

/// One auxiliary problem with its raw thinking trajectory and optional final output.
struct TraceRecord {
    std::string id;
    std::string problem;
    std::string trace;
    std::optional<std::string> final_output;
    Domain domain = Domain::other;
    std::string source_model;
    std::map<std::string, std::string> metadata;

    bool operator==(const TraceRecord&) const = default;
};

struct EvalQuery {
    std::string id;
    std::string question;
    std::string gold_answer;
    std::string benchmark;
    int samples_required = 1;

    bool operator==(const EvalQuery&) const = default;
};

/// One retrieval unit with provenance back to its source trace.
struct CorpusUnit {
    std::string unit_id;
    std::string source_id;
    UnitMode mode = UnitMode::full;
    int seq = 0;
    std::string text;

    bool operator==(const CorpusUnit&) const = default;
};

struct LoadError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string make_unit_id(const std::string& source_id, UnitMode mode, int seq);

// JSONL persistence. Serialization is canonical (sorted keys, one record per
// line), so write(load(x)) reproduces x byte for byte. Malformed lines are
// collected with their line numbers and reported together; a duplicate id
// aborts immediately naming the offending line.
std::vector<TraceRecord> load_traces(const std::filesystem::path& path);
std::vector<EvalQuery> load_queries(const std::filesystem::path& path);
std::vector<CorpusUnit> load_units(const std::filesystem::path& path);

std::string to_jsonl_line(const TraceRecord& r);
std::string to_jsonl_line(const EvalQuery& q);
std::string to_jsonl_line(const CorpusUnit& u);

size_t write_traces(const std::filesystem::path& path, const std::vector<TraceRecord>& records);
size_t write_queries(const std::filesystem::path& path, const std::vector<EvalQuery>& records);
size_t write_units(const std::filesystem::path& path, const std::vector<CorpusUnit>& records);

}  // namespace tracerag
