#include <CLI11.hpp>
#include <json.hpp>

#include <iostream>
#include <map>
#include <memory>
#include <set>

#include "tracerag/config.hpp"
#include "tracerag/decontam.hpp"
#include "tracerag/evaluation.hpp"
#include "tracerag/http_client.hpp"
#include "tracerag/io.hpp"
#include "tracerag/mock_client.hpp"
#include "tracerag/rag.hpp"
#include "tracerag/record.hpp"
#include "tracerag/retrieval.hpp"
#include "tracerag/stats.hpp"
#include "tracerag/transform.hpp"

namespace {

using namespace tracerag;

constexpr int kExitOk = 0;
constexpr int kExitFatal = 1;
constexpr int kExitPartial = 3;  // some records failed but the run completed

std::unique_ptr<ChatClient> make_chat_client(const std::string& model) {
    if (model == "mock") return std::make_unique<MockChatClient>();
    return std::make_unique<HttpChatClient>(HttpEndpoint::from_env());
}

std::unique_ptr<Embedder> make_embedder(const RunConfig& config) {
    if (config.retrieval.embedder == "hash") return std::make_unique<HashEmbedder>();
    return std::make_unique<HttpEmbedder>(HttpEndpoint::from_env(), config.retrieval.embed_model);
}

RetryPolicy retry_policy(const RunConfig& config) {
    RetryPolicy policy;
    policy.max_attempts = config.limits.max_attempts;
    return policy;
}

void write_snapshot(const RunConfig& config, const std::filesystem::path& out) {
    std::filesystem::path snapshot = out;
    snapshot += ".config.toml";
    write_file_atomic(snapshot, config.render());
}

struct ConfigFlag {
    std::string path;
    RunConfig load() const {
        if (path.empty()) return RunConfig{};
        return RunConfig::from_file(path);
    }
};

int cmd_decontam(const RunConfig& config, const std::string& corpus_path,
                 const std::string& queries_path, const std::string& out_path,
                 const std::string& report_path) {
    const auto corpus = load_traces(corpus_path);
    const auto queries = load_queries(queries_path);
    auto [kept, report] = decontaminate(corpus, queries, config.decontam.n,
                                        config.decontam.threshold);
    write_traces(out_path, kept);
    write_file_atomic(report_path, decontam_report_jsonl(report));
    write_snapshot(config, out_path);
    std::cout << report.summary_line(corpus.size()) << "\n";
    return kExitOk;
}

int cmd_transform(const RunConfig& config, const std::string& kind_name,
                  const std::string& corpus_path, const std::string& out_path,
                  const std::string& checkpoint_path) {
    const auto kind = transform_kind_from_string(kind_name);
    const auto corpus = load_traces(corpus_path);
    auto client = make_chat_client(config.models.transformer);

    std::filesystem::path ledger_path = out_path;
    ledger_path += ".ledger.jsonl";
    RunLedger ledger(ledger_path);
    TokenBudget budget(config.limits.budget_tokens);

    TransformOptions options;
    options.model = config.models.transformer;
    options.temperature = config.models.transform_temperature;
    options.max_tokens = config.models.transform_max_tokens;
    options.checkpoint_path = checkpoint_path;
    options.retry = retry_policy(config);
    options.ledger = &ledger;
    options.budget = &budget;
    options.workers = config.limits.concurrency;

    const auto result = transform_corpus(*client, kind, corpus, options);

    std::vector<CorpusUnit> units;
    units.reserve(result.units.size());
    for (const auto& u : result.units) units.push_back(to_corpus_unit(u));
    write_units(out_path, units);

    std::string failures;
    for (const auto& f : result.failures) {
        failures += nlohmann::json{{"record_id", f.record_id}, {"reason", f.reason}}.dump();
        failures += '\n';
    }
    std::filesystem::path failures_path = out_path;
    failures_path += ".failures.jsonl";
    write_file_atomic(failures_path, failures);
    ledger.finalize();
    write_snapshot(config, out_path);

    std::cout << "transformed " << units.size() << " unit(s) from " << corpus.size()
              << " record(s), " << result.failures.size() << " failure(s)\n";
    if (result.aborted_on_budget) {
        std::cerr << "error: aborted on budget_exceeded; resume with the same checkpoint\n";
        return kExitFatal;
    }
    return result.failures.empty() ? kExitOk : kExitPartial;
}

int cmd_index_build(const RunConfig& config, const std::string& mode_name,
                    const std::string& corpus_path, const std::string& units_path,
                    const std::string& out_path) {
    const UnitMode mode = unit_mode_from_short_tag(mode_name);
    std::vector<CorpusUnit> units;
    if (mode == UnitMode::full || mode == UnitMode::chunk || mode == UnitMode::final_output) {
        if (corpus_path.empty()) {
            throw std::runtime_error("mode " + mode_name + " requires --corpus (trace records)");
        }
        BuildOptions build;
        build.chunk_limit = config.chunk.limit;
        build.include_problem = config.retrieval.include_problem;
        units = build_units(load_traces(corpus_path), mode, build);
    } else {
        if (units_path.empty()) {
            throw std::runtime_error("mode " + mode_name + " requires --units (transformed units)");
        }
        units = load_units(units_path);
        for (const auto& u : units) {
            if (u.mode != mode) {
                throw std::runtime_error("unit '" + u.unit_id + "' has mode " +
                                         to_string(u.mode) + ", expected " + to_string(mode));
            }
        }
    }
    auto embedder = make_embedder(config);
    const auto index = Index::build(units, *embedder, 64, config.limits.concurrency);
    index.save(out_path);
    write_snapshot(config, out_path);
    std::cout << "indexed " << index.size() << " unit(s), dimension " << index.dimension()
              << ", embedder " << index.embedder_id() << "\n";
    return kExitOk;
}

int cmd_index_query(const RunConfig& config, const std::string& index_path,
                    const std::string& text, size_t k) {
    const auto index = Index::load(index_path);
    auto embedder = make_embedder(config);
    const auto ctx = index.search(text, k, *embedder);
    for (const auto& hit : ctx.hits) {
        nlohmann::json j{{"unit_id", hit.unit_id}, {"score", hit.score}};
        std::cout << j.dump() << "\n";
    }
    return kExitOk;
}

int cmd_run(const RunConfig& config, const std::string& queries_path,
            const std::string& index_path, const std::string& out_path,
            const std::string& checkpoint_path, bool samples_overridden) {
    const auto queries = load_queries(queries_path);

    std::unique_ptr<Index> index;
    std::unique_ptr<Embedder> embedder;
    if (index_path != "none") {
        index = std::make_unique<Index>(Index::load(index_path));
        embedder = make_embedder(config);
    }
    auto solver = make_chat_client(config.models.solver);

    std::filesystem::path ledger_path = out_path;
    ledger_path += ".ledger.jsonl";
    RunLedger ledger(ledger_path);
    TokenBudget budget(config.limits.budget_tokens);

    RunOptions options;
    options.model = config.models.solver;
    options.sampling.temperature = config.sampling.temperature;
    options.sampling.max_tokens = config.sampling.max_tokens;
    options.sampling.n_samples = config.sampling.n_samples;
    options.sampling_overridden = samples_overridden;
    options.k = config.retrieval.k;
    options.checkpoint_path = checkpoint_path;
    options.retry = retry_policy(config);
    options.ledger = &ledger;
    options.budget = &budget;
    options.workers = config.limits.concurrency;

    const auto result = run_benchmark(queries, index.get(), embedder.get(), *solver, options);

    std::string lines;
    for (const auto& r : result.records) {
        lines += run_record_jsonl(r);
        lines += '\n';
    }
    write_file_atomic(out_path, lines);

    std::string failures;
    for (const auto& f : result.failures) {
        failures += nlohmann::json{{"query_id", f.query_id}, {"reason", f.reason}}.dump();
        failures += '\n';
    }
    std::filesystem::path failures_path = out_path;
    failures_path += ".failures.jsonl";
    write_file_atomic(failures_path, failures);
    ledger.finalize();
    write_snapshot(config, out_path);

    std::cout << "ran " << result.records.size() << " quer(ies), " << result.failures.size()
              << " failure(s)\n";
    if (result.aborted_on_budget) {
        std::cerr << "error: aborted on budget_exceeded; resume with the same checkpoint\n";
        return kExitFatal;
    }
    return result.failures.empty() ? kExitOk : kExitPartial;
}

int cmd_score(const RunConfig& config, const std::string& records_path,
              const std::string& queries_path, const std::string& prices_path,
              const std::string& out_path) {
    const auto records = load_run_records(records_path);
    const auto queries = load_queries(queries_path);
    const auto prices = PriceTable::load(prices_path);

    std::map<std::string, const EvalQuery*> by_id;
    for (const auto& q : queries) by_id[q.id] = &q;

    std::unique_ptr<ChatClient> normalizer_client;
    NormalizerConfig normalizer;
    const NormalizerConfig* normalizer_ptr = nullptr;
    if (!config.models.normalizer.empty()) {
        normalizer_client = make_chat_client(config.models.normalizer);
        normalizer.client = normalizer_client.get();
        normalizer.model = config.models.normalizer;
        normalizer.retry = retry_policy(config);
        normalizer_ptr = &normalizer;
    }

    // benchmark -> (outcomes, costs)
    std::map<std::string, std::vector<GradeOutcome>> outcomes_by_benchmark;
    std::map<std::string, std::vector<double>> costs_by_benchmark;
    std::vector<GradeLogEntry> log;
    std::string outcome_lines;
    std::string model, mode;
    for (const auto& record : records) {
        auto it = by_id.find(record.query_id);
        if (it == by_id.end()) {
            throw std::runtime_error("run record for unknown query '" + record.query_id + "'");
        }
        model = record.model;
        mode = record.corpus_mode;
        auto outcome = grade_record(record, it->second->gold_answer, normalizer_ptr, &log);
        const double cost = cost_per_query_cents(record.usage, prices, record.model);

        nlohmann::json j;
        j["query_id"] = outcome.query_id;
        j["average"] = outcome.average;
        j["cost_cents"] = cost;
        nlohmann::json per = nlohmann::json::array();
        for (const auto& s : outcome.per_sample) {
            per.push_back({{"extracted", s.extracted.value_or("")}, {"correct", s.correct}});
        }
        j["per_sample"] = std::move(per);
        outcome_lines += j.dump();
        outcome_lines += '\n';

        outcomes_by_benchmark[record.benchmark].push_back(std::move(outcome));
        costs_by_benchmark[record.benchmark].push_back(cost);
    }

    std::vector<MetricsRow> rows;
    for (const auto& [benchmark, outcomes] : outcomes_by_benchmark) {
        MetricsRow row;
        row.benchmark = benchmark;
        row.model = model;
        row.mode = mode;
        row.accuracy_pct = aggregate_accuracy_pct(outcomes);
        const auto& costs = costs_by_benchmark[benchmark];
        double total = 0.0;
        for (const double c : costs) total += c;
        row.cost_cents = costs.empty() ? 0.0 : total / static_cast<double>(costs.size());
        rows.push_back(std::move(row));
    }
    fill_deltas(rows);
    write_file_atomic(out_path, metrics_csv(rows));

    std::filesystem::path outcomes_path = out_path;
    outcomes_path += ".outcomes.jsonl";
    write_file_atomic(outcomes_path, outcome_lines);

    std::string log_lines;
    size_t normalizer_verdicts = 0;
    for (const auto& e : log) {
        nlohmann::json j{{"query_id", e.query_id},   {"sample_index", e.sample_index},
                         {"candidate", e.candidate}, {"gold", e.gold},
                         {"verdict", e.verdict},     {"via_normalizer", e.via_normalizer}};
        log_lines += j.dump();
        log_lines += '\n';
        if (e.via_normalizer) ++normalizer_verdicts;
    }
    std::filesystem::path log_path = out_path;
    log_path += ".gradelog.jsonl";
    write_file_atomic(log_path, log_lines);
    write_snapshot(config, out_path);

    for (const auto& row : rows) {
        std::cout << row.benchmark << " " << row.model << " " << row.mode << ": accuracy "
                  << row.accuracy_pct << "%, mean cost " << row.cost_cents << " cents\n";
    }
    std::cout << "graded " << log.size() << " sample(s), " << normalizer_verdicts
              << " via normalizer\n";
    return kExitOk;
}

int cmd_report(const std::vector<std::string>& metrics_paths, const std::string& out_csv,
               const std::string& out_svg, const RunConfig& config) {
    std::vector<MetricsRow> rows;
    for (const auto& path : metrics_paths) {
        const auto parsed = parse_metrics_csv(read_file(path));
        rows.insert(rows.end(), parsed.begin(), parsed.end());
    }
    if (rows.empty()) throw std::runtime_error("no metrics rows in inputs");
    fill_deltas(rows);
    const auto points = frontier_points(rows);
    write_file_atomic(out_csv, frontier_csv(points));
    write_file_atomic(out_svg, frontier_svg(points));
    write_snapshot(config, out_csv);
    std::cout << "frontier: " << points.size() << " point(s) over " << rows.size() << " row(s)\n";
    return kExitOk;
}

int cmd_stats(const std::string& units_path, const std::string& traces_path,
              const std::string& out_csv) {
    const auto units = load_units(units_path);
    std::map<std::string, Domain> domains;
    if (!traces_path.empty()) {
        for (const auto& r : load_traces(traces_path)) domains[r.id] = r.domain;
    }
    WordTokenizer tokenizer;
    const auto stats = compute_stats(units, tokenizer, traces_path.empty() ? nullptr : &domains);
    if (!out_csv.empty()) write_file_atomic(out_csv, stats_csv(stats));
    std::cout << stats_summary(stats);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"build retrieval corpora from thinking traces and run retrieve-then-generate"};
    app.require_subcommand(1);

    ConfigFlag config_flag;
    app.add_option("--config", config_flag.path, "config file (TOML-style sections)");

    // decontam
    auto* decontam = app.add_subcommand("decontam", "remove corpus records similar to queries");
    std::string d_corpus, d_queries, d_out, d_report;
    int d_n = 13;
    double d_threshold = 0.8;
    decontam->add_option("--corpus", d_corpus)->required();
    decontam->add_option("--queries", d_queries)->required();
    decontam->add_option("--n", d_n, "n-gram size");
    decontam->add_option("--threshold", d_threshold, "Jaccard cutoff (strict inequality)");
    decontam->add_option("--out", d_out)->required();
    decontam->add_option("--report", d_report)->required();

    // transform
    auto* transform = app.add_subcommand("transform", "apply a trace transformation offline");
    std::string t_kind, t_corpus, t_out, t_checkpoint, t_model;
    int t_workers = 0;
    transform->add_option("--kind", t_kind, "structural|semantic|reflect")->required();
    transform->add_option("--corpus", t_corpus)->required();
    transform->add_option("--out", t_out)->required();
    transform->add_option("--checkpoint", t_checkpoint)->required();
    transform->add_option("--model", t_model, "transformation model id (mock = offline)");
    transform->add_option("--workers", t_workers);

    // index
    auto* index = app.add_subcommand("index", "build or query a retrieval index");
    index->require_subcommand(1);
    auto* index_build = index->add_subcommand("build");
    std::string ib_mode, ib_corpus, ib_units, ib_out;
    size_t ib_limit = 0;
    index_build->add_option("--mode", ib_mode, "full|chunked|structural|semantic|reflect|output")
        ->required();
    index_build->add_option("--corpus", ib_corpus, "trace records (full/chunked/output modes)");
    index_build->add_option("--units", ib_units, "corpus units (transformed modes)");
    index_build->add_option("--chunk-limit", ib_limit);
    index_build->add_option("--out", ib_out)->required();
    auto* index_query = index->add_subcommand("query");
    std::string iq_index, iq_text;
    size_t iq_k = 0;
    index_query->add_option("--index", iq_index)->required();
    index_query->add_option("--text", iq_text)->required();
    index_query->add_option("--k", iq_k);

    // run
    auto* run = app.add_subcommand("run", "retrieve-then-generate over evaluation queries");
    std::string r_queries, r_index = "none", r_out, r_checkpoint, r_model;
    size_t r_k = 0;
    int r_samples = 0, r_max_tokens = 0;
    double r_temperature = -1.0;
    run->add_option("--queries", r_queries)->required();
    run->add_option("--index", r_index, "index path, or 'none' for the No-RAG baseline");
    run->add_option("--model", r_model, "solver model id (mock = offline)");
    run->add_option("--k", r_k);
    run->add_option("--samples", r_samples, "overrides per-query samples_required");
    run->add_option("--temperature", r_temperature);
    run->add_option("--max-tokens", r_max_tokens);
    run->add_option("--out", r_out)->required();
    run->add_option("--checkpoint", r_checkpoint)->required();

    // score
    auto* score = app.add_subcommand("score", "grade run records and emit metrics");
    std::string s_records, s_queries, s_prices, s_out, s_normalizer;
    score->add_option("--records", s_records)->required();
    score->add_option("--queries", s_queries)->required();
    score->add_option("--prices", s_prices)->required();
    score->add_option("--out", s_out)->required();
    score->add_option("--normalizer", s_normalizer, "model id for answer normalization");

    // report
    auto* report = app.add_subcommand("report", "cost-accuracy frontier CSV + SVG");
    std::vector<std::string> rep_metrics;
    std::string rep_csv, rep_svg;
    report->add_option("--metrics", rep_metrics, "metrics CSVs (repeatable)")->required();
    report->add_option("--out-csv", rep_csv)->required();
    report->add_option("--out-svg", rep_svg)->required();

    // stats
    auto* stats = app.add_subcommand("stats", "corpus statistics");
    std::string st_units, st_traces, st_csv;
    stats->add_option("--units", st_units)->required();
    stats->add_option("--traces", st_traces, "trace records (for the domain histogram)");
    stats->add_option("--out-csv", st_csv);

    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig config = config_flag.load();

        if (decontam->parsed()) {
            if (decontam->count("--n")) config.decontam.n = d_n;
            if (decontam->count("--threshold")) config.decontam.threshold = d_threshold;
            return cmd_decontam(config, d_corpus, d_queries, d_out, d_report);
        }
        if (transform->parsed()) {
            if (transform->count("--model")) config.models.transformer = t_model;
            if (transform->count("--workers")) config.limits.concurrency = t_workers;
            return cmd_transform(config, t_kind, t_corpus, t_out, t_checkpoint);
        }
        if (index_build->parsed()) {
            if (index_build->count("--chunk-limit")) config.chunk.limit = ib_limit;
            return cmd_index_build(config, ib_mode, ib_corpus, ib_units, ib_out);
        }
        if (index_query->parsed()) {
            if (!index_query->count("--k")) iq_k = config.retrieval.k;
            return cmd_index_query(config, iq_index, iq_text, iq_k);
        }
        if (run->parsed()) {
            if (run->count("--model")) config.models.solver = r_model;
            if (run->count("--k")) config.retrieval.k = r_k;
            if (run->count("--samples")) config.sampling.n_samples = r_samples;
            if (run->count("--temperature")) config.sampling.temperature = r_temperature;
            if (run->count("--max-tokens")) config.sampling.max_tokens = r_max_tokens;
            return cmd_run(config, r_queries, r_index, r_out, r_checkpoint,
                           run->count("--samples") > 0);
        }
        if (score->parsed()) {
            if (score->count("--normalizer")) config.models.normalizer = s_normalizer;
            return cmd_score(config, s_records, s_queries, s_prices, s_out);
        }
        if (report->parsed()) {
            return cmd_report(rep_metrics, rep_csv, rep_svg, config);
        }
        if (stats->parsed()) {
            return cmd_stats(st_units, st_traces, st_csv);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFatal;
    }
    return kExitFatal;
}
