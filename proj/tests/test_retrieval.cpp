#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <random>

#include "tracerag/io.hpp"
#include "tracerag/mock_client.hpp"
#include "tracerag/retrieval.hpp"

using namespace tracerag;

namespace {

std::filesystem::path temp_dir() {
    auto dir = std::filesystem::temp_directory_path() /
               ("tracerag_retrieval_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(dir);
    return dir;
}

std::string words(size_t n, const std::string& stem = "w") {
    std::string out;
    for (size_t i = 0; i < n; ++i) {
        if (!out.empty()) out += ' ';
        out += stem + std::to_string(i);
    }
    return out;
}

std::string random_sentencey_text(std::mt19937_64& rng, size_t approx_tokens) {
    static const char* vocab[] = {"sum", "graph", "prime", "angle", "series",
                                  "bound", "proof", "digit", "modulo", "lattice"};
    std::string out;
    size_t produced = 0;
    while (produced < approx_tokens) {
        out += vocab[rng() % 10];
        ++produced;
        if (rng() % 7 == 0) {
            out += ',';  // punctuation tokens too
            ++produced;
        }
        out += rng() % 11 == 0 ? '\n' : ' ';
    }
    return out;
}

// independent full-scan oracle with its own scoring loop and ordering rule
std::vector<std::string> oracle_topk(const Index& index, const std::vector<float>& query,
                                     size_t k) {
    struct Scored {
        std::string id;
        double score;
    };
    std::vector<Scored> all;
    for (const auto& entry : index.entries()) {
        double s = 0.0;
        size_t d = 0;
        for (const float x : entry.vector) {
            s += static_cast<double>(x) * static_cast<double>(query[d++]);
        }
        all.push_back({entry.unit_id, s});
    }
    std::stable_sort(all.begin(), all.end(), [](const Scored& a, const Scored& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.id < b.id;
    });
    std::vector<std::string> ids;
    for (size_t i = 0; i < std::min(k, all.size()); ++i) ids.push_back(all[i].id);
    return ids;
}

std::vector<TraceRecord> trace_corpus(int n, size_t trace_tokens) {
    std::vector<TraceRecord> corpus;
    for (int i = 0; i < n; ++i) {
        TraceRecord r;
        r.id = "t" + std::to_string(i);
        r.problem = "problem " + std::to_string(i);
        r.trace = words(trace_tokens, "tok");
        r.source_model = "m";
        r.final_output = "output " + std::to_string(i);
        corpus.push_back(r);
    }
    return corpus;
}

}  // namespace

TEST_CASE("word tokenizer spans slice the source losslessly") {
    WordTokenizer tokenizer;
    const std::string text = "ab, cd-ef  gh";
    const auto tokens = tokenizer.tokenize(text);
    REQUIRE(tokens.size() == 6);  // ab , cd - ef gh
    CHECK(text.substr(tokens[0].begin, tokens[0].end - tokens[0].begin) == "ab");
    CHECK(text.substr(tokens[1].begin, tokens[1].end - tokens[1].begin) == ",");
    CHECK(text.substr(tokens[3].begin, tokens[3].end - tokens[3].begin) == "-");
    CHECK(tokenizer.count("") == 0);
    CHECK_THROWS_AS(make_tokenizer("nope"), std::runtime_error);
    CHECK(make_tokenizer("word")->count("a b") == 2);
}

TEST_CASE("1037 tokens chunk into 512, 512, 13") {
    WordTokenizer tokenizer;
    const std::string text = words(1037);
    REQUIRE(tokenizer.count(text) == 1037);
    const auto chunks = chunk_text(text, 512, tokenizer, "src");
    REQUIRE(chunks.size() == 3);
    CHECK(tokenizer.count(chunks[0].text) == 512);
    CHECK(tokenizer.count(chunks[1].text) == 512);
    CHECK(tokenizer.count(chunks[2].text) == 13);
    CHECK(chunks[0].token_begin == 0);
    CHECK(chunks[1].token_begin == 512);
    CHECK(chunks[2].token_end == 1037);
    CHECK(chunks[2].seq == 2);
}

TEST_CASE("a 512-token text is exactly one chunk; empty text none") {
    WordTokenizer tokenizer;
    const auto one = chunk_text(words(512), 512, tokenizer);
    REQUIRE(one.size() == 1);
    CHECK(tokenizer.count(one[0].text) == 512);
    CHECK(chunk_text("", 512, tokenizer).empty());
    CHECK_THROWS_AS(chunk_text("a", 0, tokenizer), std::invalid_argument);
}

TEST_CASE("chunk partition: token concatenation reproduces the source tokens") {
    WordTokenizer tokenizer;
    std::mt19937_64 rng(808);
    for (int trial = 0; trial < 200; ++trial) {
        const auto text = random_sentencey_text(rng, 1 + rng() % 1400);
        const size_t limit = 512;
        const auto source_tokens = tokenizer.tokenize(text);
        const auto chunks = chunk_text(text, limit, tokenizer);

        std::vector<std::string> from_chunks;
        for (size_t c = 0; c < chunks.size(); ++c) {
            const auto chunk_tokens = tokenizer.tokenize(chunks[c].text);
            if (c + 1 < chunks.size()) CHECK(chunk_tokens.size() == limit);
            for (const auto& t : chunk_tokens) {
                from_chunks.push_back(std::string(
                    std::string_view(chunks[c].text).substr(t.begin, t.end - t.begin)));
            }
        }
        std::vector<std::string> from_source;
        for (const auto& t : source_tokens) {
            from_source.push_back(std::string(std::string_view(text).substr(t.begin, t.end - t.begin)));
        }
        REQUIRE(from_chunks == from_source);
    }
}

TEST_CASE("build_units per mode") {
    const auto corpus = trace_corpus(10, 1037 - 3);  // +problem tokens = 1037 total
    BuildOptions options;

    SUBCASE("full: one unit per trace") {
        const auto units = build_units(corpus, UnitMode::full, options);
        REQUIRE(units.size() == 10);
        CHECK(units[0].unit_id == "t0#full#0");
        CHECK(units[0].text.find("problem 0") == 0);  // include_problem default
    }
    SUBCASE("full without problem text") {
        options.include_problem = false;
        const auto units = build_units(corpus, UnitMode::full, options);
        CHECK(units[0].text == corpus[0].trace);
    }
    SUBCASE("chunked: 1037-token sources give 3 chunks each") {
        WordTokenizer tokenizer;
        REQUIRE(tokenizer.count(corpus[0].problem + "\n" + corpus[0].trace) == 1036);
        const auto units = build_units(corpus, UnitMode::chunk, options);
        CHECK(units.size() == 30);
        CHECK(units[2].unit_id == "t0#chunked#2");
    }
    SUBCASE("final_output: one unit per output") {
        const auto units = build_units(corpus, UnitMode::final_output, options);
        REQUIRE(units.size() == 10);
        CHECK(units[3].text == "output 3");
    }
    SUBCASE("final_output without outputs is an error") {
        auto broken = corpus;
        broken[4].final_output.reset();
        CHECK_THROWS_AS(build_units(broken, UnitMode::final_output, options),
                        std::invalid_argument);
    }
    SUBCASE("mixed lengths match a per-record oracle") {
        std::mt19937_64 rng(11);
        std::vector<TraceRecord> mixed;
        size_t expected = 0;
        WordTokenizer tokenizer;
        for (int i = 0; i < 30; ++i) {
            TraceRecord r;
            r.id = "m" + std::to_string(i);
            r.problem = "p";
            r.trace = random_sentencey_text(rng, 1 + rng() % 1200);
            r.source_model = "x";
            const size_t total = tokenizer.count(r.problem + "\n" + r.trace);
            expected += (total + 511) / 512;
            mixed.push_back(std::move(r));
        }
        CHECK(build_units(mixed, UnitMode::chunk, options).size() == expected);
    }
}

TEST_CASE("index: identity query ranks first with score 1.0; k caps at size") {
    HashEmbedder embedder;
    std::vector<CorpusUnit> units;
    for (int i = 0; i < 4; ++i) {
        CorpusUnit u;
        u.unit_id = "u" + std::to_string(i);
        u.source_id = u.unit_id;
        u.mode = UnitMode::full;
        u.text = "document body number " + std::to_string(i * 97);
        units.push_back(u);
    }
    const auto index = Index::build(units, embedder);
    const auto hit = index.search(units[2].text, 1, embedder);
    REQUIRE(hit.hits.size() == 1);
    CHECK(hit.hits[0].unit_id == "u2");
    CHECK(hit.hits[0].score == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(hit.hits[0].text == units[2].text);

    const auto capped = index.search("anything at all", 10, embedder);
    CHECK(capped.hits.size() == 4);  // min(k, index size)
}

TEST_CASE("duplicate unit ids are fatal at build") {
    HashEmbedder embedder;
    std::vector<CorpusUnit> units(2);
    units[0] = {"dup", "s", UnitMode::full, 0, "text a"};
    units[1] = {"dup", "s", UnitMode::full, 1, "text b"};
    CHECK_THROWS_WITH_AS(Index::build(units, embedder), doctest::Contains("dup"),
                         std::runtime_error);
}

TEST_CASE("search equals the full-scan oracle, including ties, and survives persistence") {
    HashEmbedder embedder;
    std::mt19937_64 rng(31415);
    std::vector<CorpusUnit> units;
    for (int i = 0; i < 200; ++i) {
        CorpusUnit u;
        u.unit_id = "unit" + std::to_string(1000 + i);
        u.source_id = u.unit_id;
        u.mode = UnitMode::chunk;
        // duplicate every fifth text so exact score ties exist
        u.text = i % 5 == 0 ? "tied document body" : random_sentencey_text(rng, 30 + rng() % 60);
        u.seq = i;
        units.push_back(u);
    }
    const auto index = Index::build(units, embedder, 16, 4);

    const auto dir = temp_dir();
    index.save(dir / "idx.bin");
    const auto reloaded = Index::load(dir / "idx.bin");
    CHECK(reloaded.size() == index.size());
    CHECK(reloaded.embedder_id() == index.embedder_id());
    CHECK(reloaded.mode() == UnitMode::chunk);

    for (int qi = 0; qi < 50; ++qi) {
        const std::string query =
            qi % 10 == 0 ? "tied document body" : random_sentencey_text(rng, 10 + rng() % 30);
        const auto qvec = embedder.embed_one(query);
        for (const size_t k : {size_t(1), size_t(3), size_t(5)}) {
            const auto expected = oracle_topk(index, qvec, k);
            const auto got = index.search(query, k, embedder);
            REQUIRE(got.hits.size() == expected.size());
            for (size_t i = 0; i < expected.size(); ++i) {
                CHECK(got.hits[i].unit_id == expected[i]);
            }
            const auto reloaded_hits = reloaded.search(query, k, embedder);
            for (size_t i = 0; i < expected.size(); ++i) {
                CHECK(reloaded_hits.hits[i].unit_id == expected[i]);
                CHECK(reloaded_hits.hits[i].score == got.hits[i].score);
            }
        }
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("ranking is invariant under uniform positive rescaling before normalization") {
    // embedder that scales raw trigram counts by a constant before normalizing
    class ScaledHashEmbedder : public Embedder {
    public:
        explicit ScaledHashEmbedder(float scale) : scale_(scale) {}
        std::string id() const override { return "hash-trigram-256"; }  // interchangeable
        size_t dimension() const override { return 256; }
        ClientResult<std::vector<std::vector<float>>> embed(const std::vector<std::string>& texts,
                                                            EmbedRole role) override {
            HashEmbedder base;
            auto result = base.embed(texts, role);
            // scaling then re-normalizing is the identity on unit vectors
            for (auto& v : *result.value) {
                for (auto& x : v) x *= scale_;
                normalize_unit(v);
            }
            return result;
        }

    private:
        float scale_;
    };

    std::mt19937_64 rng(99);
    std::vector<CorpusUnit> units;
    for (int i = 0; i < 50; ++i) {
        units.push_back({"u" + std::to_string(i), "s", UnitMode::full, i,
                         random_sentencey_text(rng, 20 + rng() % 40)});
    }
    HashEmbedder plain;
    ScaledHashEmbedder scaled(7.5f);
    const auto index_plain = Index::build(units, plain);
    const auto index_scaled = Index::build(units, scaled);
    for (int qi = 0; qi < 10; ++qi) {
        const auto query = random_sentencey_text(rng, 15);
        const auto a = index_plain.search(query, 5, plain);
        const auto b = index_scaled.search(query, 5, scaled);
        REQUIRE(a.hits.size() == b.hits.size());
        for (size_t i = 0; i < a.hits.size(); ++i) {
            CHECK(a.hits[i].unit_id == b.hits[i].unit_id);
        }
    }
}

TEST_CASE("embedder mismatch and empty index are refused") {
    HashEmbedder small(64);
    HashEmbedder big(256);
    std::vector<CorpusUnit> units{{"u0", "s", UnitMode::full, 0, "text"}};
    const auto index = Index::build(units, big);
    CHECK_THROWS_WITH_AS(index.search("q", 3, small), doctest::Contains("mismatch"),
                         std::runtime_error);
    CHECK_THROWS_AS(Index::build({}, big), std::invalid_argument);
}

TEST_CASE("index build is deterministic across worker counts") {
    HashEmbedder embedder;
    std::mt19937_64 rng(2024);
    std::vector<CorpusUnit> units;
    for (int i = 0; i < 97; ++i) {
        units.push_back({"u" + std::to_string(i), "s", UnitMode::full, i,
                         random_sentencey_text(rng, 10 + rng() % 30)});
    }
    const auto dir = temp_dir();
    Index::build(units, embedder, 8, 1).save(dir / "one.bin");
    Index::build(units, embedder, 8, 8).save(dir / "eight.bin");
    CHECK(read_file(dir / "one.bin") == read_file(dir / "eight.bin"));
    CHECK(read_file(Index::sidecar_path(dir / "one.bin")) ==
          read_file(Index::sidecar_path(dir / "eight.bin")));
    std::filesystem::remove_all(dir);
}
