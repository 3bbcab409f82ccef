#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tracerag/client.hpp"
#include "tracerag/record.hpp"

namespace tracerag {

enum class TransformKind { structural, semantic, reflect };

const char* to_string(TransformKind k);
TransformKind transform_kind_from_string(const std::string& s);
UnitMode unit_mode_for(TransformKind k);

/// The byte-exact template for a kind, with the `{trace}` placeholder intact.
std::string_view prompt_template(TransformKind k);

/// The template with `{trace}` substituted; the rendered prompt ends with the trace.
std::string render_prompt(TransformKind k, std::string_view trace_text);

struct TransformParseError : std::runtime_error {
    enum class Code { empty_output, missing_section, malformed };

    TransformParseError(Code code, std::string section, const std::string& message)
        : std::runtime_error(message), code(code), section(std::move(section)) {}

    Code code;
    std::string section;  // the absent or offending header
};

struct StructuralApproach {
    std::string label;
    std::vector<std::string> steps;
    std::optional<std::string> answer;
};

struct ParsedTransform {
    TransformKind kind = TransformKind::structural;
    std::optional<std::string> problem;
    std::vector<std::pair<std::string, std::string>> sections;  // semantic/reflect, in order
    std::vector<StructuralApproach> approaches;                 // structural
    std::optional<std::string> boxed_answer;                    // last boxed occurrence
    int boxed_count = 0;
    std::vector<std::string> warnings;
};

// Parses a raw completion against the kind's output format. Semantic requires
// Pass 1..3; Reflect requires the four section headers; Structural requires at
// least one consecutively numbered step (the 7-step guideline is only warned
// about). Boxed answers use balanced-brace scanning; when several occur, the
// last one wins and the count is kept.
ParsedTransform parse_transform_output(TransformKind kind, std::string_view raw);

/// Last balanced \boxed{...} payload plus the total occurrence count.
std::pair<std::optional<std::string>, int> scan_boxed(std::string_view text);

struct TransformedUnit {
    std::string source_id;
    TransformKind kind = TransformKind::structural;
    int seq = 0;
    std::vector<std::pair<std::string, std::string>> sections;
    std::string text;
    std::optional<std::string> boxed_answer;
    int boxed_count = 0;
};

// One unit per Approach block (single unit when the output has no or one
// block), seq in document order, Problem header replicated into each.
std::vector<TransformedUnit> split_structural(const std::string& source_id,
                                              const ParsedTransform& parsed);

/// Semantic/Reflect: always exactly one unit.
TransformedUnit single_unit(const std::string& source_id, const ParsedTransform& parsed);

std::vector<TransformedUnit> units_from_parse(const std::string& source_id,
                                              const ParsedTransform& parsed);

CorpusUnit to_corpus_unit(const TransformedUnit& u);

std::string transformed_unit_jsonl(const TransformedUnit& u);
TransformedUnit transformed_unit_from_jsonl(const std::string& line);

struct TransformOptions {
    std::string model = "mock";
    double temperature = 0.3;
    int max_tokens = 2048;
    std::filesystem::path checkpoint_path;
    RetryPolicy retry;
    RunLedger* ledger = nullptr;
    TokenBudget* budget = nullptr;
    int workers = 8;
};

struct TransformFailure {
    std::string record_id;
    std::string reason;
};

struct TransformResult {
    std::vector<TransformedUnit> units;      // sorted by (source_id, seq)
    std::vector<TransformFailure> failures;  // sorted by record_id
    bool aborted_on_budget = false;
};

// Applies one transformation kind over a corpus through the chat client.
// Progress is checkpointed per record (JSONL of completed ids beside a partial
// unit file), so an interrupted run resumes without reprocessing and finishes
// with the same unit set as an uninterrupted one. Parse failures are retried
// once, then excluded and reported. Only budget exhaustion aborts the run.
TransformResult transform_corpus(ChatClient& client, TransformKind kind,
                                 const std::vector<TraceRecord>& corpus,
                                 const TransformOptions& options);

}  // namespace tracerag
