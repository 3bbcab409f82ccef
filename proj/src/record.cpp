#include "tracerag/record.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <unordered_set>

#include "tracerag/io.hpp"

namespace tracerag {

using nlohmann::json;

const char* to_string(Domain d) {
    switch (d) {
        case Domain::math: return "math";
        case Domain::code: return "code";
        case Domain::science: return "science";
        case Domain::puzzle: return "puzzle";
        case Domain::other: return "other";
    }
    return "other";
}

Domain domain_from_string(const std::string& s) {
    if (s == "math") return Domain::math;
    if (s == "code") return Domain::code;
    if (s == "science") return Domain::science;
    if (s == "puzzle") return Domain::puzzle;
    if (s == "other") return Domain::other;
    throw LoadError("unknown domain: " + s);
}

const char* to_string(UnitMode m) {
    switch (m) {
        case UnitMode::full: return "full";
        case UnitMode::chunk: return "chunk";
        case UnitMode::transformed_structural: return "transformed_structural";
        case UnitMode::transformed_semantic: return "transformed_semantic";
        case UnitMode::transformed_reflect: return "transformed_reflect";
        case UnitMode::final_output: return "final_output";
    }
    return "full";
}

UnitMode unit_mode_from_string(const std::string& s) {
    if (s == "full") return UnitMode::full;
    if (s == "chunk") return UnitMode::chunk;
    if (s == "transformed_structural") return UnitMode::transformed_structural;
    if (s == "transformed_semantic") return UnitMode::transformed_semantic;
    if (s == "transformed_reflect") return UnitMode::transformed_reflect;
    if (s == "final_output") return UnitMode::final_output;
    throw LoadError("unknown unit mode: " + s);
}

const char* short_tag(UnitMode m) {
    switch (m) {
        case UnitMode::full: return "full";
        case UnitMode::chunk: return "chunked";
        case UnitMode::transformed_structural: return "structural";
        case UnitMode::transformed_semantic: return "semantic";
        case UnitMode::transformed_reflect: return "reflect";
        case UnitMode::final_output: return "output";
    }
    return "full";
}

UnitMode unit_mode_from_short_tag(const std::string& s) {
    if (s == "full") return UnitMode::full;
    if (s == "chunked") return UnitMode::chunk;
    if (s == "structural") return UnitMode::transformed_structural;
    if (s == "semantic") return UnitMode::transformed_semantic;
    if (s == "reflect") return UnitMode::transformed_reflect;
    if (s == "output") return UnitMode::final_output;
    throw LoadError("unknown corpus mode: " + s + " (expected full|chunked|structural|semantic|reflect|output)");
}

std::string make_unit_id(const std::string& source_id, UnitMode mode, int seq) {
    return source_id + "#" + short_tag(mode) + "#" + std::to_string(seq);
}

namespace {

json to_json(const TraceRecord& r) {
    json j;
    j["id"] = r.id;
    j["problem"] = r.problem;
    j["trace"] = r.trace;
    if (r.final_output) j["final_output"] = *r.final_output;
    j["domain"] = to_string(r.domain);
    j["source_model"] = r.source_model;
    if (!r.metadata.empty()) j["metadata"] = r.metadata;
    return j;
}

json to_json(const EvalQuery& q) {
    json j;
    j["id"] = q.id;
    j["question"] = q.question;
    j["gold_answer"] = q.gold_answer;
    j["benchmark"] = q.benchmark;
    j["samples_required"] = q.samples_required;
    return j;
}

json to_json(const CorpusUnit& u) {
    json j;
    j["unit_id"] = u.unit_id;
    j["source_id"] = u.source_id;
    j["mode"] = to_string(u.mode);
    j["seq"] = u.seq;
    j["text"] = u.text;
    return j;
}

std::string require_string(const json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_string()) {
        throw LoadError(std::string("missing or non-string field '") + key + "'");
    }
    return j[key].get<std::string>();
}

TraceRecord trace_from_json(const json& j) {
    TraceRecord r;
    r.id = require_string(j, "id");
    r.problem = require_string(j, "problem");
    r.trace = require_string(j, "trace");
    if (r.trace.empty()) throw LoadError("trace must be non-empty");
    if (j.contains("final_output")) r.final_output = require_string(j, "final_output");
    r.domain = domain_from_string(require_string(j, "domain"));
    r.source_model = require_string(j, "source_model");
    if (j.contains("metadata")) {
        if (!j["metadata"].is_object()) throw LoadError("metadata must be an object");
        for (const auto& [k, v] : j["metadata"].items()) {
            if (!v.is_string()) throw LoadError("metadata values must be strings");
            r.metadata[k] = v.get<std::string>();
        }
    }
    return r;
}

EvalQuery query_from_json(const json& j) {
    EvalQuery q;
    q.id = require_string(j, "id");
    q.question = require_string(j, "question");
    q.gold_answer = require_string(j, "gold_answer");
    q.benchmark = require_string(j, "benchmark");
    if (!j.contains("samples_required") || !j["samples_required"].is_number_integer()) {
        throw LoadError("missing or non-integer field 'samples_required'");
    }
    q.samples_required = j["samples_required"].get<int>();
    if (q.samples_required < 1) throw LoadError("samples_required must be >= 1");
    return q;
}

CorpusUnit unit_from_json(const json& j) {
    CorpusUnit u;
    u.unit_id = require_string(j, "unit_id");
    u.source_id = require_string(j, "source_id");
    u.mode = unit_mode_from_string(require_string(j, "mode"));
    if (!j.contains("seq") || !j["seq"].is_number_integer()) {
        throw LoadError("missing or non-integer field 'seq'");
    }
    u.seq = j["seq"].get<int>();
    if (u.seq < 0) throw LoadError("seq must be non-negative");
    u.text = require_string(j, "text");
    if (u.text.empty()) throw LoadError("text must be non-empty");
    return u;
}

template <typename T, typename Parse, typename IdOf>
std::vector<T> load_records(const std::filesystem::path& path, Parse parse, IdOf id_of) {
    const auto lines = read_lines(path);
    std::vector<T> out;
    out.reserve(lines.size());
    std::unordered_set<std::string> seen;
    std::vector<std::string> problems;
    for (size_t i = 0; i < lines.size(); ++i) {
        const size_t lineno = i + 1;
        if (lines[i].empty()) continue;
        std::optional<T> rec;
        try {
            json j = json::parse(lines[i]);
            rec = parse(j);
        } catch (const LoadError& e) {
            problems.push_back(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
            continue;
        } catch (const json::exception& e) {
            problems.push_back(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
            continue;
        }
        if (!seen.insert(id_of(*rec)).second) {
            throw LoadError(path.string() + ":" + std::to_string(lineno) + ": duplicate id '" +
                            id_of(*rec) + "'");
        }
        out.push_back(std::move(*rec));
    }
    if (!problems.empty()) {
        std::ostringstream msg;
        msg << problems.size() << " malformed record(s):";
        for (const auto& p : problems) msg << "\n  " << p;
        throw LoadError(msg.str());
    }
    return out;
}

template <typename T>
size_t write_records(const std::filesystem::path& path, const std::vector<T>& records) {
    std::string buf;
    for (const auto& r : records) {
        buf += to_jsonl_line(r);
        buf += '\n';
    }
    write_file_atomic(path, buf);
    return records.size();
}

}  // namespace

std::vector<TraceRecord> load_traces(const std::filesystem::path& path) {
    return load_records<TraceRecord>(path, trace_from_json, [](const TraceRecord& r) { return r.id; });
}

std::vector<EvalQuery> load_queries(const std::filesystem::path& path) {
    return load_records<EvalQuery>(path, query_from_json, [](const EvalQuery& q) { return q.id; });
}

std::vector<CorpusUnit> load_units(const std::filesystem::path& path) {
    return load_records<CorpusUnit>(path, unit_from_json, [](const CorpusUnit& u) { return u.unit_id; });
}

std::string to_jsonl_line(const TraceRecord& r) { return to_json(r).dump(); }
std::string to_jsonl_line(const EvalQuery& q) { return to_json(q).dump(); }
std::string to_jsonl_line(const CorpusUnit& u) { return to_json(u).dump(); }

size_t write_traces(const std::filesystem::path& path, const std::vector<TraceRecord>& records) {
    return write_records(path, records);
}

size_t write_queries(const std::filesystem::path& path, const std::vector<EvalQuery>& records) {
    return write_records(path, records);
}

size_t write_units(const std::filesystem::path& path, const std::vector<CorpusUnit>& records) {
    return write_records(path, records);
}

}  // namespace tracerag
