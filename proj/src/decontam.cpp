#include "tracerag/decontam.hpp"

#include <json.hpp>

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace tracerag {

namespace {

constexpr uint64_t kFnvOffset = 1469598103934665603ull;
constexpr uint64_t kFnvPrime = 1099511628211ull;

uint64_t fnv1a(uint64_t h, std::string_view bytes) {
    for (const char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= kFnvPrime;
    }
    return h;
}

}  // namespace

std::vector<std::string> normalize_tokens(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) {
            tokens.push_back(cur);
            cur.clear();
        }
    };
    for (const char raw : text) {
        const unsigned char c = static_cast<unsigned char>(raw);
        if ((c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || c >= 0x80) {
            cur.push_back(raw);
        } else if (c >= 'A' && c <= 'Z') {
            cur.push_back(static_cast<char>(c - 'A' + 'a'));
        } else {
            flush();
        }
    }
    flush();
    return tokens;
}

uint64_t ngram_fingerprint(std::span<const std::string> window) {
    uint64_t h = kFnvOffset;
    for (const auto& tok : window) {
        h = fnv1a(h, tok);
        h ^= 0x1f;  // token separator
        h *= kFnvPrime;
    }
    return h;
}

NgramSet ngram_set(std::string_view text, int n) {
    if (n < 1) throw std::invalid_argument("ngram_set: n must be >= 1");
    const auto tokens = normalize_tokens(text);
    NgramSet grams;
    if (tokens.size() < static_cast<size_t>(n)) return grams;
    grams.reserve(tokens.size() - n + 1);
    for (size_t i = 0; i + n <= tokens.size(); ++i) {
        grams.push_back(ngram_fingerprint(std::span(tokens).subspan(i, n)));
    }
    std::sort(grams.begin(), grams.end());
    grams.erase(std::unique(grams.begin(), grams.end()), grams.end());
    return grams;
}

double jaccard(const NgramSet& a, const NgramSet& b) {
    if (a.empty() && b.empty()) return 0.0;
    size_t inter = 0;
    size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] == b[j]) {
            ++inter;
            ++i;
            ++j;
        } else if (a[i] < b[j]) {
            ++i;
        } else {
            ++j;
        }
    }
    const size_t uni = a.size() + b.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

std::string decontam_text(const TraceRecord& r) {
    return r.problem + "\n" + r.trace;
}

std::pair<std::vector<TraceRecord>, DecontamReport> decontaminate(
    const std::vector<TraceRecord>& corpus, const std::vector<EvalQuery>& queries, int n,
    double threshold) {
    if (queries.empty()) {
        throw std::invalid_argument("decontaminate: empty query set");
    }
    if (threshold < 0.0 || threshold > 1.0) {
        throw std::invalid_argument("decontaminate: threshold must be in [0,1]");
    }

    std::vector<NgramSet> query_grams;
    query_grams.reserve(queries.size());
    for (const auto& q : queries) {
        query_grams.push_back(ngram_set(q.question, n));
    }

    std::vector<TraceRecord> kept;
    DecontamReport report;
    for (const auto& rec : corpus) {
        const NgramSet grams = ngram_set(decontam_text(rec), n);
        double best = -1.0;
        size_t best_q = 0;
        for (size_t qi = 0; qi < queries.size(); ++qi) {
            const double score = jaccard(grams, query_grams[qi]);
            if (score > best) {
                best = score;
                best_q = qi;
            }
        }
        if (best > threshold) {
            report.removed.push_back({rec.id, queries[best_q].id, best});
        } else {
            kept.push_back(rec);
        }
    }
    report.kept_count = kept.size();
    report.removed_fraction =
        corpus.empty() ? 0.0
                       : static_cast<double>(report.removed.size()) / static_cast<double>(corpus.size());
    return {std::move(kept), std::move(report)};
}

std::string DecontamReport::summary_line(size_t input_size) const {
    std::ostringstream out;
    out << "removed " << removed.size() << " of " << input_size << " ("
        << removed_fraction * 100.0 << "%)";
    return out.str();
}

std::string decontam_report_jsonl(const DecontamReport& report) {
    std::string out;
    for (const auto& e : report.removed) {
        nlohmann::json j;
        j["record_id"] = e.record_id;
        j["query_id"] = e.query_id;
        j["score"] = e.score;
        out += j.dump();
        out += '\n';
    }
    return out;
}

}  // namespace tracerag
