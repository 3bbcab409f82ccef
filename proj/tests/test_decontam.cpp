#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>
#include <string>

#include "tracerag/decontam.hpp"

using namespace tracerag;

namespace {

// Independent oracle: n-grams as joined token strings, no hashing.
std::set<std::string> string_ngrams(const std::string& text, int n) {
    const auto tokens = normalize_tokens(text);
    std::set<std::string> grams;
    if (tokens.size() < static_cast<size_t>(n)) return grams;
    for (size_t i = 0; i + n <= tokens.size(); ++i) {
        std::string g;
        for (int j = 0; j < n; ++j) {
            g += tokens[i + j];
            g += '\x1f';
        }
        grams.insert(g);
    }
    return grams;
}

double oracle_jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
    if (a.empty() && b.empty()) return 0.0;
    size_t inter = 0;
    for (const auto& g : a) inter += b.count(g);
    return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

std::string random_words(std::mt19937_64& rng, size_t count, size_t vocab) {
    std::string out;
    for (size_t i = 0; i < count; ++i) {
        if (!out.empty()) out += ' ';
        out += "w" + std::to_string(rng() % vocab);
    }
    return out;
}

TraceRecord record_of(const std::string& id, const std::string& problem, const std::string& trace) {
    TraceRecord r;
    r.id = id;
    r.problem = problem;
    r.trace = trace;
    r.source_model = "m";
    return r;
}

EvalQuery query_of(const std::string& id, const std::string& question) {
    EvalQuery q;
    q.id = id;
    q.question = question;
    q.gold_answer = "0";
    q.benchmark = "b";
    q.samples_required = 1;
    return q;
}

}  // namespace

TEST_CASE("normalizer lowercases and splits on non-alphanumeric runs") {
    CHECK(normalize_tokens("A b,C--d") == std::vector<std::string>{"a", "b", "c", "d"});
    CHECK(normalize_tokens("  x1   Y2 ") == std::vector<std::string>{"x1", "y2"});
    CHECK(normalize_tokens("") == std::vector<std::string>{});
    // multi-byte UTF-8 sequences stay inside one token
    CHECK(normalize_tokens("caf\xc3\xa9 au lait") ==
          std::vector<std::string>{"caf\xc3\xa9", "au", "lait"});
}

TEST_CASE("ngram_set matches the definitional examples") {
    const auto grams = ngram_set("a b c d", 2);
    CHECK(grams.size() == 3);
    const std::vector<std::string> ab{"a", "b"}, bc{"b", "c"}, cd{"c", "d"};
    NgramSet expected{ngram_fingerprint(ab), ngram_fingerprint(bc), ngram_fingerprint(cd)};
    std::sort(expected.begin(), expected.end());
    CHECK(grams == expected);

    CHECK(ngram_set("a b", 3).empty());
    CHECK(ngram_set("", 13).empty());
    CHECK_THROWS_AS(ngram_set("a", 0), std::invalid_argument);
}

TEST_CASE("a 50-token text yields 38 distinct 13-grams") {
    std::mt19937_64 rng(7);
    // all-distinct tokens make every window distinct
    std::string text;
    for (int i = 0; i < 50; ++i) text += "tok" + std::to_string(i) + " ";
    const auto grams = ngram_set(text, 13);
    CHECK(grams.size() == 38);
    CHECK(string_ngrams(text, 13).size() == 38);
}

TEST_CASE("jaccard basics") {
    const auto a = ngram_set("p q r s", 2);
    const auto b = ngram_set("z y x w", 2);
    CHECK(jaccard(a, a) == 1.0);
    CHECK(jaccard(a, b) == 0.0);
    CHECK(jaccard({}, {}) == 0.0);

    const auto left = ngram_set("a b c d", 2);
    const auto right = ngram_set("b c d e", 2);
    CHECK(jaccard(left, right) == 0.5);  // intersection {(b,c),(c,d)}, union of 4
}

TEST_CASE("jaccard is symmetric, bounded, and 1 iff equal (non-empty)") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 200; ++trial) {
        const auto a = ngram_set(random_words(rng, 5 + rng() % 30, 12), 3);
        const auto b = ngram_set(random_words(rng, 5 + rng() % 30, 12), 3);
        const double ab = jaccard(a, b);
        CHECK(jaccard(b, a) == ab);
        CHECK(ab >= 0.0);
        CHECK(ab <= 1.0);
        if (!a.empty() || !b.empty()) {
            CHECK((ab == 1.0) == (a == b));
        }
    }
}

TEST_CASE("hashed n-gram jaccard agrees with the string-set oracle") {
    std::mt19937_64 rng(123);
    for (int trial = 0; trial < 100; ++trial) {
        const auto ta = random_words(rng, 10 + rng() % 40, 8);
        const auto tb = random_words(rng, 10 + rng() % 40, 8);
        const double impl = jaccard(ngram_set(ta, 3), ngram_set(tb, 3));
        const double oracle = oracle_jaccard(string_ngrams(ta, 3), string_ngrams(tb, 3));
        CHECK(impl == doctest::Approx(oracle).epsilon(1e-12));
    }
}

TEST_CASE("verbatim copy of a query is removed with score 1.0") {
    const std::string question = "find the integer n such that n squared equals four";
    // problem+trace text must equal the question token-for-token
    const auto corpus = std::vector<TraceRecord>{
        record_of("dup", "find the integer n such that", "n squared equals four"),
        record_of("clean", "a completely different problem about graphs",
                  "with a long unrelated derivation about coloring")};
    const auto queries = std::vector<EvalQuery>{query_of("q1", question)};
    auto [kept, report] = decontaminate(corpus, queries, 3, 0.5);
    REQUIRE(report.removed.size() == 1);
    CHECK(report.removed[0].record_id == "dup");
    CHECK(report.removed[0].query_id == "q1");
    CHECK(report.removed[0].score == 1.0);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].id == "clean");
    CHECK(report.kept_count == 1);
    CHECK(report.removed_fraction == doctest::Approx(0.5));
}

TEST_CASE("threshold 1.0 removes nothing (strict inequality)") {
    const std::string question = "alpha beta gamma delta epsilon";
    const auto corpus = std::vector<TraceRecord>{
        record_of("exact", "alpha beta gamma", "delta epsilon"),
        record_of("near", "alpha beta gamma", "delta zeta")};
    const auto queries = std::vector<EvalQuery>{query_of("q1", question)};
    auto [kept, report] = decontaminate(corpus, queries, 2, 1.0);
    CHECK(report.removed.empty());
    CHECK(kept.size() == 2);
}

TEST_CASE("empty query set is a misconfiguration") {
    const auto corpus = std::vector<TraceRecord>{record_of("a", "p", "t")};
    CHECK_THROWS_AS(decontaminate(corpus, {}, 13, 0.8), std::invalid_argument);
}

TEST_CASE("decontaminate equals the brute-force all-pairs oracle") {
    std::mt19937_64 rng(2026);
    std::vector<TraceRecord> corpus;
    for (int i = 0; i < 20; ++i) {
        corpus.push_back(record_of("r" + std::to_string(i), random_words(rng, 6, 5),
                                   random_words(rng, 10, 5)));
    }
    std::vector<EvalQuery> queries;
    for (int i = 0; i < 5; ++i) {
        queries.push_back(query_of("q" + std::to_string(i), random_words(rng, 12, 5)));
    }
    const int n = 3;
    const double threshold = 0.2;

    auto [kept, report] = decontaminate(corpus, queries, n, threshold);

    std::set<std::string> expected_removed;
    for (const auto& rec : corpus) {
        const auto rec_grams = string_ngrams(rec.problem + "\n" + rec.trace, n);
        for (const auto& q : queries) {
            if (oracle_jaccard(rec_grams, string_ngrams(q.question, n)) > threshold) {
                expected_removed.insert(rec.id);
                break;
            }
        }
    }
    std::set<std::string> actual_removed;
    for (const auto& e : report.removed) actual_removed.insert(e.record_id);
    CHECK(actual_removed == expected_removed);
    CHECK(kept.size() + actual_removed.size() == corpus.size());
    for (const auto& e : report.removed) CHECK(e.score > threshold);
}

TEST_CASE("lowering the threshold never shrinks the removed set") {
    std::mt19937_64 rng(31337);
    std::vector<TraceRecord> corpus;
    for (int i = 0; i < 40; ++i) {
        corpus.push_back(record_of("r" + std::to_string(i), random_words(rng, 8, 4),
                                   random_words(rng, 8, 4)));
    }
    std::vector<EvalQuery> queries;
    for (int i = 0; i < 6; ++i) {
        queries.push_back(query_of("q" + std::to_string(i), random_words(rng, 14, 4)));
    }
    std::set<std::string> previous;
    for (const double threshold : {0.9, 0.6, 0.4, 0.2, 0.05}) {
        auto [kept, report] = decontaminate(corpus, queries, 3, threshold);
        std::set<std::string> removed;
        for (const auto& e : report.removed) removed.insert(e.record_id);
        CHECK(std::includes(removed.begin(), removed.end(), previous.begin(), previous.end()));
        previous = std::move(removed);
    }
}

TEST_CASE("report summary line formats counts") {
    const auto corpus = std::vector<TraceRecord>{record_of("a", "x y z w", "v u t s")};
    const auto queries = std::vector<EvalQuery>{query_of("q", "totally unrelated words here")};
    auto [kept, report] = decontaminate(corpus, queries, 2, 0.5);
    CHECK(report.summary_line(corpus.size()) == "removed 0 of 1 (0%)");
}
