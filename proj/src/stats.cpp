#include "tracerag/stats.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace tracerag {

namespace {

size_t nearest_rank(const std::vector<size_t>& sorted, double percentile) {
    const size_t n = sorted.size();
    size_t rank = static_cast<size_t>(std::ceil(percentile / 100.0 * static_cast<double>(n)));
    if (rank < 1) rank = 1;
    if (rank > n) rank = n;
    return sorted[rank - 1];
}

}  // namespace

CorpusStats compute_stats(const std::vector<CorpusUnit>& units, const Tokenizer& tokenizer,
                          const std::map<std::string, Domain>* source_domains) {
    if (units.empty()) {
        throw std::invalid_argument("compute_stats: empty unit sequence");
    }
    CorpusStats s;
    s.unit_count = units.size();

    std::vector<size_t> lengths;
    lengths.reserve(units.size());
    std::set<std::string> sources;
    double total = 0.0;
    for (const auto& u : units) {
        const size_t len = tokenizer.count(u.text);
        lengths.push_back(len);
        total += static_cast<double>(len);
        sources.insert(u.source_id);
        Domain d = Domain::other;
        if (source_domains) {
            auto it = source_domains->find(u.source_id);
            if (it != source_domains->end()) d = it->second;
        }
        s.domain_histogram[d]++;
    }
    std::sort(lengths.begin(), lengths.end());
    s.mean_length = total / static_cast<double>(units.size());
    s.p50 = nearest_rank(lengths, 50.0);
    s.p90 = nearest_rank(lengths, 90.0);
    s.p99 = nearest_rank(lengths, 99.0);
    s.passage_inflation = static_cast<double>(units.size()) / static_cast<double>(sources.size());
    return s;
}

std::string stats_csv(const CorpusStats& s) {
    std::ostringstream out;
    out << "metric,value\n";
    out << "unit_count," << s.unit_count << "\n";
    out << "mean_length," << s.mean_length << "\n";
    out << "p50," << s.p50 << "\n";
    out << "p90," << s.p90 << "\n";
    out << "p99," << s.p99 << "\n";
    out << "passage_inflation," << s.passage_inflation << "\n";
    for (const auto& [d, count] : s.domain_histogram) {
        out << "domain_" << to_string(d) << "," << count << "\n";
    }
    return out.str();
}

std::string stats_summary(const CorpusStats& s) {
    std::ostringstream out;
    out << s.unit_count << " units, mean length " << s.mean_length << " tokens (p50 " << s.p50
        << ", p90 " << s.p90 << ", p99 " << s.p99 << "), inflation " << s.passage_inflation
        << "\ndomains:";
    for (const auto& [d, count] : s.domain_histogram) {
        out << " " << to_string(d) << "=" << count;
    }
    out << "\n";
    return out.str();
}

}  // namespace tracerag
