#pragma once

#include <map>
#include <string>
#include <vector>

#include "tracerag/record.hpp"
#include "tracerag/tokenizer.hpp"

namespace tracerag {

struct CorpusStats {
    size_t unit_count = 0;
    double mean_length = 0.0;
    size_t p50 = 0;
    size_t p90 = 0;
    size_t p99 = 0;
    std::map<Domain, size_t> domain_histogram;
    double passage_inflation = 0.0;  // units per distinct source trace
};

// Lengths are measured with the supplied tokenizer; percentiles use the
// nearest-rank convention. Units whose source is absent from source_domains
// (or when no map is given) are counted under Domain::other.
CorpusStats compute_stats(const std::vector<CorpusUnit>& units, const Tokenizer& tokenizer,
                          const std::map<std::string, Domain>* source_domains = nullptr);

std::string stats_csv(const CorpusStats& s);
std::string stats_summary(const CorpusStats& s);

}  // namespace tracerag
