#include "fixture.hpp"

#include <sstream>

#include "tracerag/io.hpp"

namespace tracerag::testing {

namespace {

const char* kFillerTemplates[] = {
    "We examine the remainder when the running total is reduced modulo the divisor.",
    "Next we compare the partial sum against the bound established earlier.",
    "The recurrence simplifies once the common factor is pulled out of both terms.",
    "Substituting the candidate value keeps every constraint satisfied.",
    "A short induction confirms the pattern continues for larger indices.",
    "Careful bookkeeping of signs avoids the usual cancellation mistake.",
    "The symmetry of the construction halves the number of cases to check.",
    "Rewriting the expression as a telescoping sum collapses the middle terms.",
    "We verify the boundary case separately before trusting the general formula.",
    "The parity argument rules out every odd candidate at once.",
    "Grouping terms in pairs exposes the arithmetic progression underneath.",
    "An exchange argument shows no better ordering can exist.",
    "The estimate stays tight because both inequalities bind simultaneously.",
    "Checking small cases first suggests the closed form to prove.",
    "The invariant is preserved by every allowed move, which settles the claim.",
};
constexpr size_t kFillerCount = sizeof(kFillerTemplates) / sizeof(kFillerTemplates[0]);

// Long question shared between a query and a planted corpus duplicate; needs
// enough tokens that a near-copy exceeds the default 0.8 Jaccard cutoff.
std::string long_question(int a, int b, const char* flavor) {
    std::ostringstream q;
    q << "A sequence starts at " << a << " and each later term grows by exactly " << b
      << " compared with the previous one; after considering the " << flavor
      << " arrangement of the first twelve terms, determine the exact total obtained when the "
         "first term is added to the common difference, reporting a single integer.";
    return q.str();
}

std::string short_question(int a, int b, int variant) {
    std::ostringstream q;
    switch (variant % 4) {
        case 0:
            q << "Compute the sum of " << a << " and " << b << " after checking the parity of both terms.";
            break;
        case 1:
            q << "A jar holds " << a << " red tokens and " << b << " blue tokens; how many tokens are there in total?";
            break;
        case 2:
            q << "Two registers hold " << a << " and " << b << "; what value does their sum leave in the accumulator?";
            break;
        default:
            q << "A reaction yields " << a << " grams in the first phase and " << b
              << " grams in the second; find the combined mass in grams.";
            break;
    }
    return q.str();
}

Domain domain_for(int i) {
    switch (i % 10) {
        case 6:
        case 7: return Domain::code;
        case 8: return Domain::science;
        case 9: return Domain::puzzle;
        default: return Domain::math;
    }
}

std::string make_trace(int i, int a, int b, size_t filler_sentences, bool alt_marker) {
    std::ostringstream t;
    t << "We need the total of the two quantities named in problem " << i << ". ";
    t << "First set x = " << a << " and y = " << b << " and plan the additions. ";
    for (size_t s = 0; s < filler_sentences; ++s) {
        t << kFillerTemplates[(static_cast<size_t>(i) * 7 + s) % kFillerCount] << " ";
        if (alt_marker && s == filler_sentences / 2) {
            t << "An alternative approach through direct enumeration reaches the same value. ";
        }
    }
    t << "Thus the computed value is " << (a + b) << ".\n";
    t << "Answer: $\\boxed{" << (a + b) << "}$";
    return t.str();
}

}  // namespace

std::vector<EvalQuery> fixture_queries() {
    std::vector<EvalQuery> queries;
    for (int i = 0; i < 10; ++i) {
        EvalQuery q;
        std::ostringstream id;
        id << "q" << (i < 10 ? "00" : "0") << i;
        q.id = id.str();
        const int a = 20 + i * 7;
        const int b = 11 + i * 3;
        if (i == 3) {
            q.question = long_question(a, b, "staircase");
        } else if (i == 7) {
            q.question = long_question(a, b, "zigzag");
        } else {
            q.question = short_question(a, b, i);
        }
        q.gold_answer = std::to_string(a + b);
        q.benchmark = i < 8 ? "fixture-math" : "fixture-sci";
        q.samples_required = i < 8 ? 8 : 4;
        queries.push_back(std::move(q));
    }
    return queries;
}

std::vector<TraceRecord> fixture_traces() {
    const auto queries = fixture_queries();
    std::vector<TraceRecord> records;
    for (int i = 0; i < 50; ++i) {
        TraceRecord r;
        std::ostringstream id;
        id << "trace" << (i < 10 ? "00" : "0") << i;
        r.id = id.str();
        const int a = 12 + i * 3;
        const int b = 7 + i * 5;
        r.domain = domain_for(i);
        r.source_model = i % 2 == 0 ? "thinker-alpha" : "thinker-beta";
        if (i == 13 || i == 37) {
            // contamination plants: near-verbatim copies of query questions
            r.problem = queries[i == 13 ? 3 : 7].question;
            r.trace = "Echo of the benchmark question.";
        } else {
            r.problem = short_question(a, b, i);
            const size_t filler = i % 5 == 0 ? 90 : 10 + static_cast<size_t>(i % 7) * 3;
            r.trace = make_trace(i, a, b, filler, i % 7 == 3);
            r.final_output = "The requested total equals " + std::to_string(a + b) +
                             ". Answer: $\\boxed{" + std::to_string(a + b) + "}$";
        }
        if (i % 11 == 0) r.metadata["origin"] = "fixture";
        records.push_back(std::move(r));
    }
    return records;
}

std::string fixture_prices_text() {
    return "# model input_per_1M output_per_1M (dollars)\n"
           "mock 1.0 2.0\n"
           "gpt-5 1.25 10.0\n";
}

FixturePaths write_fixture(const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    FixturePaths paths;
    paths.traces = dir / "traces.jsonl";
    paths.queries = dir / "queries.jsonl";
    paths.prices = dir / "prices.txt";
    write_traces(paths.traces, fixture_traces());
    write_queries(paths.queries, fixture_queries());
    write_file_atomic(paths.prices, fixture_prices_text());
    return paths;
}

}  // namespace tracerag::testing
