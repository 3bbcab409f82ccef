#include "tracerag/transform.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <mutex>
#include <sstream>
#include <unordered_map>

#include "tracerag/io.hpp"
#include "tracerag/prompts.hpp"
#include "tracerag/worker_pool.hpp"

namespace tracerag {

using nlohmann::json;

const char* to_string(TransformKind k) {
    switch (k) {
        case TransformKind::structural: return "structural";
        case TransformKind::semantic: return "semantic";
        case TransformKind::reflect: return "reflect";
    }
    return "structural";
}

TransformKind transform_kind_from_string(const std::string& s) {
    if (s == "structural") return TransformKind::structural;
    if (s == "semantic") return TransformKind::semantic;
    if (s == "reflect") return TransformKind::reflect;
    throw std::invalid_argument("unknown transform kind: " + s +
                                " (expected structural|semantic|reflect)");
}

UnitMode unit_mode_for(TransformKind k) {
    switch (k) {
        case TransformKind::structural: return UnitMode::transformed_structural;
        case TransformKind::semantic: return UnitMode::transformed_semantic;
        case TransformKind::reflect: return UnitMode::transformed_reflect;
    }
    return UnitMode::transformed_structural;
}

std::string_view prompt_template(TransformKind k) {
    switch (k) {
        case TransformKind::structural: return prompts::kStructural;
        case TransformKind::semantic: return prompts::kSemantic;
        case TransformKind::reflect: return prompts::kReflect;
    }
    return prompts::kStructural;
}

std::string render_prompt(TransformKind k, std::string_view trace_text) {
    const std::string_view tpl = prompt_template(k);
    const size_t pos = tpl.find(prompts::kTracePlaceholder);
    std::string out;
    out.reserve(tpl.size() + trace_text.size());
    out.append(tpl.substr(0, pos));
    out.append(trace_text);
    out.append(tpl.substr(pos + prompts::kTracePlaceholder.size()));
    return out;
}

std::pair<std::optional<std::string>, int> scan_boxed(std::string_view text) {
    const std::string_view marker = "\\boxed{";
    std::optional<std::string> last;
    int count = 0;
    size_t pos = 0;
    while ((pos = text.find(marker, pos)) != std::string_view::npos) {
        size_t i = pos + marker.size();
        int depth = 1;
        std::string payload;
        while (i < text.size() && depth > 0) {
            const char c = text[i];
            if (c == '{') {
                ++depth;
            } else if (c == '}') {
                --depth;
                if (depth == 0) break;
            }
            payload.push_back(c);
            ++i;
        }
        if (depth == 0) {
            ++count;
            last = payload;
            pos = i + 1;
        } else {
            break;  // unbalanced tail; ignore
        }
    }
    return {last, count};
}

namespace {

std::string trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

/// Matches "<header>:" at line start; returns content after the colon.
std::optional<std::string> match_header(const std::string& line, std::string_view header) {
    if (line.size() < header.size() + 1) return std::nullopt;
    if (line.compare(0, header.size(), header) != 0) return std::nullopt;
    if (line[header.size()] != ':') return std::nullopt;
    return trim(std::string_view(line).substr(header.size() + 1));
}

/// Matches "<word> <number>:" (Step 3: / Pass 2:); returns (number, content).
std::optional<std::pair<int, std::string>> match_numbered(const std::string& line,
                                                          std::string_view word) {
    if (line.compare(0, word.size(), word) != 0) return std::nullopt;
    size_t i = word.size();
    if (i >= line.size() || line[i] != ' ') return std::nullopt;
    ++i;
    size_t digits = 0;
    int num = 0;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) {
        num = num * 10 + (line[i] - '0');
        ++i;
        ++digits;
    }
    if (digits == 0 || i >= line.size() || line[i] != ':') return std::nullopt;
    return std::make_pair(num, trim(std::string_view(line).substr(i + 1)));
}

std::vector<std::string> split_lines(std::string_view raw) {
    std::vector<std::string> lines;
    size_t start = 0;
    while (start <= raw.size()) {
        size_t end = raw.find('\n', start);
        if (end == std::string_view::npos) end = raw.size();
        lines.push_back(trim(raw.substr(start, end - start)));
        if (end == raw.size()) break;
        start = end + 1;
    }
    return lines;
}

void append_content(std::string& target, const std::string& more) {
    if (more.empty()) return;
    if (!target.empty()) target += '\n';
    target += more;
}

struct NumberedStep {
    int number;
    std::string text;
};

void validate_steps(const std::vector<NumberedStep>& steps, std::vector<std::string>* warnings,
                    size_t approach_index) {
    for (size_t i = 0; i < steps.size(); ++i) {
        const int expected = static_cast<int>(i) + 1;
        if (steps[i].number < expected) {
            throw TransformParseError(TransformParseError::Code::malformed,
                                      "Step " + std::to_string(steps[i].number),
                                      "step numbering repeats or decreases at Step " +
                                          std::to_string(steps[i].number));
        }
        if (steps[i].number > expected) {
            throw TransformParseError(TransformParseError::Code::missing_section,
                                      "Step " + std::to_string(expected),
                                      "missing section: Step " + std::to_string(expected));
        }
    }
    if (steps.size() > 7 && warnings) {
        warnings->push_back("approach " + std::to_string(approach_index) + " has " +
                            std::to_string(steps.size()) + " steps (template asks for at most 7)");
    }
}

ParsedTransform parse_structural(std::string_view raw) {
    ParsedTransform parsed;
    parsed.kind = TransformKind::structural;

    struct RawApproach {
        std::string label;
        std::vector<NumberedStep> steps;
        std::optional<std::string> answer;
    };
    std::vector<RawApproach> approaches;

    // continuation target, tracked by role + index (the vectors grow while parsing)
    enum class Open { none, problem, label, step, answer };
    Open open = Open::none;
    size_t open_step = 0;

    auto append_open = [&](const std::string& line) {
        switch (open) {
            case Open::none: break;  // noise before any recognized header
            case Open::problem: append_content(*parsed.problem, line); break;
            case Open::label: append_content(approaches.back().label, line); break;
            case Open::step: append_content(approaches.back().steps[open_step].text, line); break;
            case Open::answer: append_content(*approaches.back().answer, line); break;
        }
    };

    for (const auto& line : split_lines(raw)) {
        if (line.empty()) continue;
        if (auto p = match_header(line, "Problem")) {
            if (!parsed.problem) parsed.problem = std::string();
            append_content(*parsed.problem, *p);
            open = Open::problem;
        } else if (auto a = match_header(line, "Approach")) {
            approaches.push_back({*a, {}, std::nullopt});
            open = Open::label;
        } else if (auto s = match_numbered(line, "Step")) {
            if (approaches.empty()) approaches.push_back({"", {}, std::nullopt});
            approaches.back().steps.push_back({s->first, s->second});
            open = Open::step;
            open_step = approaches.back().steps.size() - 1;
        } else if (auto ans = match_header(line, "Answer")) {
            if (approaches.empty()) approaches.push_back({"", {}, std::nullopt});
            if (!approaches.back().answer) approaches.back().answer = std::string();
            append_content(*approaches.back().answer, *ans);
            open = Open::answer;
        } else {
            append_open(line);
        }
    }

    size_t total_steps = 0;
    for (size_t i = 0; i < approaches.size(); ++i) {
        validate_steps(approaches[i].steps, &parsed.warnings, i);
        total_steps += approaches[i].steps.size();
    }
    if (total_steps == 0) {
        throw TransformParseError(TransformParseError::Code::missing_section, "Step 1",
                                  "missing section: Step 1");
    }
    for (auto& a : approaches) {
        StructuralApproach out;
        out.label = a.label;
        out.answer = a.answer;
        for (auto& s : a.steps) out.steps.push_back(std::move(s.text));
        parsed.approaches.push_back(std::move(out));
    }
    return parsed;
}

ParsedTransform parse_sectioned(TransformKind kind, std::string_view raw,
                                const std::vector<std::string>& required) {
    ParsedTransform parsed;
    parsed.kind = kind;

    std::vector<std::pair<std::string, std::string>> found;
    std::optional<std::string> answer;

    enum class Open { none, problem, section, answer };
    Open open = Open::none;
    size_t open_section = 0;

    auto canonical_header =
        [&](const std::string& line) -> std::optional<std::pair<std::string, std::string>> {
        for (const auto& name : required) {
            if (auto content = match_header(line, name)) return std::make_pair(name, *content);
        }
        // template renders the last reflect header as "Correct Approach (brief):"
        if (kind == TransformKind::reflect) {
            if (auto content = match_header(line, "Correct Approach (brief)")) {
                return std::make_pair(std::string("Correct Approach"), *content);
            }
        }
        return std::nullopt;
    };

    for (const auto& line : split_lines(raw)) {
        if (line.empty()) continue;
        if (auto p = match_header(line, "Problem")) {
            if (!parsed.problem) parsed.problem = std::string();
            append_content(*parsed.problem, *p);
            open = Open::problem;
        } else if (auto header = canonical_header(line)) {
            const auto& [name, content] = *header;
            for (const auto& [existing, _] : found) {
                if (existing == name) {
                    throw TransformParseError(TransformParseError::Code::malformed, name,
                                              "duplicate section: " + name);
                }
            }
            found.emplace_back(name, content);
            open = Open::section;
            open_section = found.size() - 1;
        } else if (auto ans = match_header(line, "Answer")) {
            if (!answer) answer = std::string();
            append_content(*answer, *ans);
            open = Open::answer;
        } else {
            switch (open) {
                case Open::none: break;
                case Open::problem: append_content(*parsed.problem, line); break;
                case Open::section: append_content(found[open_section].second, line); break;
                case Open::answer: append_content(*answer, line); break;
            }
        }
    }

    for (const auto& name : required) {
        const bool present = std::any_of(found.begin(), found.end(),
                                         [&](const auto& kv) { return kv.first == name; });
        if (!present) {
            throw TransformParseError(TransformParseError::Code::missing_section, name,
                                      "missing section: " + name);
        }
    }
    // keep required order regardless of the order they appeared in
    for (const auto& name : required) {
        auto it = std::find_if(found.begin(), found.end(),
                               [&](const auto& kv) { return kv.first == name; });
        parsed.sections.emplace_back(it->first, it->second);
    }
    if (answer) parsed.sections.emplace_back("Answer", *answer);
    return parsed;
}

}  // namespace

ParsedTransform parse_transform_output(TransformKind kind, std::string_view raw) {
    if (trim(raw).empty()) {
        throw TransformParseError(TransformParseError::Code::empty_output, "",
                                  "empty transformation output");
    }
    ParsedTransform parsed;
    switch (kind) {
        case TransformKind::structural:
            parsed = parse_structural(raw);
            break;
        case TransformKind::semantic:
            parsed = parse_sectioned(kind, raw, {"Pass 1", "Pass 2", "Pass 3"});
            break;
        case TransformKind::reflect:
            parsed = parse_sectioned(
                kind, raw,
                {"Common Mistakes", "Misleading Intuitions", "Critical Checks", "Correct Approach"});
            break;
    }
    auto [last, count] = scan_boxed(raw);
    parsed.boxed_answer = last;
    parsed.boxed_count = count;
    return parsed;
}

std::vector<TransformedUnit> split_structural(const std::string& source_id,
                                              const ParsedTransform& parsed) {
    std::vector<TransformedUnit> units;
    for (size_t i = 0; i < parsed.approaches.size(); ++i) {
        const auto& a = parsed.approaches[i];
        TransformedUnit u;
        u.source_id = source_id;
        u.kind = TransformKind::structural;
        u.seq = static_cast<int>(i);

        std::ostringstream text;
        if (parsed.problem) {
            u.sections.emplace_back("Problem", *parsed.problem);
            text << "Problem: " << *parsed.problem << "\n";
        }
        if (!a.label.empty()) {
            u.sections.emplace_back("Approach", a.label);
            text << "Approach: " << a.label << "\n";
        }
        for (size_t s = 0; s < a.steps.size(); ++s) {
            const std::string name = "Step " + std::to_string(s + 1);
            u.sections.emplace_back(name, a.steps[s]);
            text << name << ": " << a.steps[s] << "\n";
        }
        if (a.answer) {
            u.sections.emplace_back("Answer", *a.answer);
            text << "Answer: " << *a.answer << "\n";
            auto [boxed, count] = scan_boxed(*a.answer);
            u.boxed_answer = boxed;
            u.boxed_count = count;
        } else {
            u.boxed_answer = parsed.boxed_answer;
            u.boxed_count = parsed.boxed_count;
        }
        u.text = text.str();
        units.push_back(std::move(u));
    }
    return units;
}

TransformedUnit single_unit(const std::string& source_id, const ParsedTransform& parsed) {
    TransformedUnit u;
    u.source_id = source_id;
    u.kind = parsed.kind;
    u.seq = 0;
    std::ostringstream text;
    if (parsed.problem) {
        u.sections.emplace_back("Problem", *parsed.problem);
        text << "Problem: " << *parsed.problem << "\n";
    }
    for (const auto& [name, content] : parsed.sections) {
        u.sections.emplace_back(name, content);
        text << name << ": " << content << "\n";
    }
    u.text = text.str();
    u.boxed_answer = parsed.boxed_answer;
    u.boxed_count = parsed.boxed_count;
    return u;
}

std::vector<TransformedUnit> units_from_parse(const std::string& source_id,
                                              const ParsedTransform& parsed) {
    if (parsed.kind == TransformKind::structural) {
        return split_structural(source_id, parsed);
    }
    return {single_unit(source_id, parsed)};
}

CorpusUnit to_corpus_unit(const TransformedUnit& u) {
    CorpusUnit out;
    out.source_id = u.source_id;
    out.mode = unit_mode_for(u.kind);
    out.seq = u.seq;
    out.unit_id = make_unit_id(u.source_id, out.mode, u.seq);
    out.text = u.text;
    return out;
}

std::string transformed_unit_jsonl(const TransformedUnit& u) {
    json j;
    j["source_id"] = u.source_id;
    j["kind"] = to_string(u.kind);
    j["seq"] = u.seq;
    j["sections"] = u.sections;
    j["text"] = u.text;
    if (u.boxed_answer) j["boxed_answer"] = *u.boxed_answer;
    j["boxed_count"] = u.boxed_count;
    return j.dump();
}

TransformedUnit transformed_unit_from_jsonl(const std::string& line) {
    const json j = json::parse(line);
    TransformedUnit u;
    u.source_id = j.at("source_id").get<std::string>();
    u.kind = transform_kind_from_string(j.at("kind").get<std::string>());
    u.seq = j.at("seq").get<int>();
    u.sections = j.at("sections").get<std::vector<std::pair<std::string, std::string>>>();
    u.text = j.at("text").get<std::string>();
    if (j.contains("boxed_answer")) u.boxed_answer = j["boxed_answer"].get<std::string>();
    u.boxed_count = j.value("boxed_count", 0);
    return u;
}

namespace {

std::filesystem::path partial_path_for(const std::filesystem::path& checkpoint) {
    std::filesystem::path p = checkpoint;
    p += ".partial";
    return p;
}

}  // namespace

TransformResult transform_corpus(ChatClient& client, TransformKind kind,
                                 const std::vector<TraceRecord>& corpus,
                                 const TransformOptions& options) {
    const bool checkpointing = !options.checkpoint_path.empty();
    const auto partial_path = checkpointing ? partial_path_for(options.checkpoint_path)
                                            : std::filesystem::path();

    // resume state: record id -> failure reason ("" means ok)
    std::unordered_map<std::string, std::string> done;
    std::vector<TransformedUnit> resumed_units;
    if (checkpointing && std::filesystem::exists(options.checkpoint_path)) {
        for (const auto& line : read_lines(options.checkpoint_path)) {
            if (line.empty()) continue;
            const json j = json::parse(line);
            const std::string id = j.at("id").get<std::string>();
            done[id] = j.value("status", "ok") == "ok" ? "" : j.value("reason", "failed");
        }
        if (std::filesystem::exists(partial_path)) {
            for (const auto& line : read_lines(partial_path)) {
                if (line.empty()) continue;
                auto unit = transformed_unit_from_jsonl(line);
                auto it = done.find(unit.source_id);
                if (it != done.end() && it->second.empty()) {
                    resumed_units.push_back(std::move(unit));
                }
            }
        }
    }

    std::vector<const TraceRecord*> pending;
    for (const auto& rec : corpus) {
        if (!done.count(rec.id)) pending.push_back(&rec);
    }

    std::mutex io_mu;
    std::atomic<bool> aborted{false};
    std::vector<std::vector<TransformedUnit>> fresh_units(pending.size());
    std::vector<std::optional<TransformFailure>> fresh_failures(pending.size());

    parallel_for(pending.size(), options.workers, [&](size_t i) {
        if (aborted.load()) return;
        const TraceRecord& rec = *pending[i];
        ChatRequest request;
        request.model = options.model;
        request.user = render_prompt(kind, rec.trace);
        request.temperature = options.temperature;
        request.max_tokens = options.max_tokens;
        request.n_samples = 1;

        std::string failure_reason;
        std::vector<TransformedUnit> units;
        for (int parse_try = 0; parse_try < 2; ++parse_try) {
            const std::string key = parse_try == 0 ? rec.id : rec.id + "/retry";
            auto result = complete(client, request, key, options.retry, options.ledger,
                                   options.budget);
            if (!result.ok()) {
                if (result.error->kind == ErrorKind::budget_exceeded) {
                    aborted.store(true);
                    return;  // not checkpointed; the record stays pending for a resume
                }
                failure_reason = std::string(to_string(result.error->kind)) + ": " +
                                 result.error->detail;
                break;
            }
            try {
                units = units_from_parse(rec.id, parse_transform_output(kind,
                                                                        result.value->samples[0]));
                failure_reason.clear();
                break;
            } catch (const TransformParseError& e) {
                failure_reason = e.what();
            }
        }

        std::lock_guard<std::mutex> lock(io_mu);
        if (failure_reason.empty()) {
            if (checkpointing) {
                for (const auto& u : units) append_line(partial_path, transformed_unit_jsonl(u));
                json j{{"id", rec.id}, {"status", "ok"}};
                append_line(options.checkpoint_path, j.dump());
            }
            fresh_units[i] = std::move(units);
        } else {
            if (checkpointing) {
                json j{{"id", rec.id}, {"status", "failed"}, {"reason", failure_reason}};
                append_line(options.checkpoint_path, j.dump());
            }
            fresh_failures[i] = TransformFailure{rec.id, failure_reason};
        }
    });

    TransformResult result;
    result.aborted_on_budget = aborted.load();
    result.units = std::move(resumed_units);
    for (auto& batch : fresh_units) {
        for (auto& u : batch) result.units.push_back(std::move(u));
    }
    for (const auto& [id, reason] : done) {
        if (!reason.empty()) result.failures.push_back({id, reason});
    }
    for (auto& f : fresh_failures) {
        if (f) result.failures.push_back(std::move(*f));
    }

    std::sort(result.units.begin(), result.units.end(), [](const auto& a, const auto& b) {
        return std::tie(a.source_id, a.seq) < std::tie(b.source_id, b.seq);
    });
    std::sort(result.failures.begin(), result.failures.end(),
              [](const auto& a, const auto& b) { return a.record_id < b.record_id; });

    if (checkpointing && !result.aborted_on_budget && std::filesystem::exists(options.checkpoint_path)) {
        // canonicalize resume files so completed run directories are reproducible
        auto ckpt_lines = read_lines(options.checkpoint_path);
        std::sort(ckpt_lines.begin(), ckpt_lines.end(), [](const std::string& a, const std::string& b) {
            return json::parse(a).at("id").get<std::string>() <
                   json::parse(b).at("id").get<std::string>();
        });
        std::string buf;
        for (const auto& l : ckpt_lines) {
            buf += l;
            buf += '\n';
        }
        write_file_atomic(options.checkpoint_path, buf);

        std::string partial_buf;
        for (const auto& u : result.units) {
            partial_buf += transformed_unit_jsonl(u);
            partial_buf += '\n';
        }
        write_file_atomic(partial_path, partial_buf);
    }
    return result;
}

}  // namespace tracerag
