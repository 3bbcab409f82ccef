#include "tracerag/rag.hpp"

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

std::string assemble_prompt(std::string_view question, const std::vector<SearchHit>& hits) {
    if (hits.empty()) {
        return std::string(question);
    }
    std::ostringstream out;
    out << prompts::kRagInstruction << "\n";
    for (size_t i = 0; i < hits.size(); ++i) {
        out << "\nExample " << (i + 1) << ": " << hits[i].text << "\n";
    }
    out << "\nMain problem: " << question;
    return out.str();
}

std::string run_record_jsonl(const RunRecord& r) {
    json j;
    j["query_id"] = r.query_id;
    j["benchmark"] = r.benchmark;
    j["corpus_mode"] = r.corpus_mode;
    j["model"] = r.model;
    json retrieved = json::array();
    for (const auto& [unit_id, score] : r.retrieved) {
        retrieved.push_back({{"unit_id", unit_id}, {"score", score}});
    }
    j["retrieved"] = std::move(retrieved);
    j["prompt"] = r.prompt;
    j["samples"] = r.samples;
    j["usage"] = {{"prompt_tokens", r.usage.prompt_tokens},
                  {"completion_tokens", r.usage.completion_tokens}};
    j["config"] = {{"temperature", r.config.temperature},
                   {"max_tokens", r.config.max_tokens},
                   {"n_samples", r.config.n_samples}};
    return j.dump();
}

RunRecord run_record_from_jsonl(const std::string& line) {
    const json j = json::parse(line);
    RunRecord r;
    r.query_id = j.at("query_id").get<std::string>();
    r.benchmark = j.value("benchmark", "");
    r.corpus_mode = j.at("corpus_mode").get<std::string>();
    r.model = j.at("model").get<std::string>();
    for (const auto& hit : j.at("retrieved")) {
        r.retrieved.emplace_back(hit.at("unit_id").get<std::string>(),
                                 hit.at("score").get<double>());
    }
    r.prompt = j.at("prompt").get<std::string>();
    r.samples = j.at("samples").get<std::vector<std::string>>();
    r.usage.prompt_tokens = j.at("usage").at("prompt_tokens").get<long>();
    r.usage.completion_tokens = j.at("usage").at("completion_tokens").get<std::vector<long>>();
    r.config.temperature = j.at("config").at("temperature").get<double>();
    r.config.max_tokens = j.at("config").at("max_tokens").get<int>();
    r.config.n_samples = j.at("config").at("n_samples").get<int>();
    return r;
}

std::vector<RunRecord> load_run_records(const std::filesystem::path& path) {
    std::vector<RunRecord> records;
    for (const auto& line : read_lines(path)) {
        if (line.empty()) continue;
        records.push_back(run_record_from_jsonl(line));
    }
    return records;
}

RunResult run_benchmark(const std::vector<EvalQuery>& queries, const Index* index,
                        Embedder* embedder, ChatClient& solver, const RunOptions& options) {
    if (index && !embedder) {
        throw std::invalid_argument("run_benchmark: retrieval enabled but no embedder given");
    }

    const bool checkpointing = !options.checkpoint_path.empty();
    std::filesystem::path partial_path = options.checkpoint_path;
    partial_path += ".partial";

    std::unordered_map<std::string, std::string> done;  // query_id -> "" | failure reason
    std::vector<RunRecord> resumed;
    if (checkpointing && std::filesystem::exists(options.checkpoint_path)) {
        for (const auto& line : read_lines(options.checkpoint_path)) {
            if (line.empty()) continue;
            const json j = json::parse(line);
            done[j.at("id").get<std::string>()] =
                j.value("status", "ok") == "ok" ? "" : j.value("reason", "failed");
        }
        if (std::filesystem::exists(partial_path)) {
            for (const auto& line : read_lines(partial_path)) {
                if (line.empty()) continue;
                auto rec = run_record_from_jsonl(line);
                auto it = done.find(rec.query_id);
                if (it != done.end() && it->second.empty()) resumed.push_back(std::move(rec));
            }
        }
    }

    std::vector<const EvalQuery*> pending;
    for (const auto& q : queries) {
        if (!done.count(q.id)) pending.push_back(&q);
    }

    std::mutex io_mu;
    std::atomic<bool> aborted{false};
    std::vector<std::optional<RunRecord>> fresh(pending.size());
    std::vector<std::optional<RunFailure>> failures(pending.size());

    parallel_for(pending.size(), options.workers, [&](size_t i) {
        if (aborted.load()) return;
        const EvalQuery& query = *pending[i];

        RunRecord record;
        record.query_id = query.id;
        record.benchmark = query.benchmark;
        record.model = options.model;
        record.config = options.sampling;
        if (!options.sampling_overridden) {
            record.config.n_samples = query.samples_required;
        }
        record.corpus_mode = index ? short_tag(index->mode()) : "none";

        std::vector<SearchHit> hits;
        if (index) {
            auto ctx = index->search(query.question, options.k, *embedder, query.id);
            hits = std::move(ctx.hits);
            for (const auto& h : hits) record.retrieved.emplace_back(h.unit_id, h.score);
        }
        record.prompt = assemble_prompt(query.question, hits);

        ChatRequest request;
        request.model = options.model;
        request.user = record.prompt;
        request.temperature = record.config.temperature;
        request.max_tokens = record.config.max_tokens;
        request.n_samples = record.config.n_samples;

        auto result = complete(solver, request, query.id, options.retry, options.ledger,
                               options.budget);
        std::lock_guard<std::mutex> lock(io_mu);
        if (!result.ok()) {
            if (result.error->kind == ErrorKind::budget_exceeded) {
                aborted.store(true);
                return;
            }
            const std::string reason =
                std::string(to_string(result.error->kind)) + ": " + result.error->detail;
            if (checkpointing) {
                json j{{"id", query.id}, {"status", "failed"}, {"reason", reason}};
                append_line(options.checkpoint_path, j.dump());
            }
            failures[i] = RunFailure{query.id, reason};
            return;
        }
        record.samples = std::move(result.value->samples);
        record.usage = std::move(result.value->usage);
        if (checkpointing) {
            append_line(partial_path, run_record_jsonl(record));
            json j{{"id", query.id}, {"status", "ok"}};
            append_line(options.checkpoint_path, j.dump());
        }
        fresh[i] = std::move(record);
    });

    RunResult result;
    result.aborted_on_budget = aborted.load();
    result.records = std::move(resumed);
    for (auto& r : fresh) {
        if (r) result.records.push_back(std::move(*r));
    }
    for (const auto& [id, reason] : done) {
        if (!reason.empty()) result.failures.push_back({id, reason});
    }
    for (auto& f : failures) {
        if (f) result.failures.push_back(std::move(*f));
    }
    std::sort(result.records.begin(), result.records.end(),
              [](const auto& a, const auto& b) { return a.query_id < b.query_id; });
    std::sort(result.failures.begin(), result.failures.end(),
              [](const auto& a, const auto& b) { return a.query_id < b.query_id; });

    if (checkpointing && !result.aborted_on_budget &&
        std::filesystem::exists(options.checkpoint_path)) {
        auto ckpt_lines = read_lines(options.checkpoint_path);
        std::sort(ckpt_lines.begin(), ckpt_lines.end(),
                  [](const std::string& a, const std::string& b) {
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
        for (const auto& r : result.records) {
            partial_buf += run_record_jsonl(r);
            partial_buf += '\n';
        }
        write_file_atomic(partial_path, partial_buf);
    }
    return result;
}

}  // namespace tracerag
