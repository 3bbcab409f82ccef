#include "tracerag/evaluation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "tracerag/transform.hpp"

namespace tracerag {

namespace {

std::string trim_copy(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string lower_copy(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

/// Finds the last line containing a final-answer marker; returns the text after it.
std::optional<std::string> final_answer_line(std::string_view sample) {
    std::vector<std::string> lines;
    size_t start = 0;
    while (start <= sample.size()) {
        size_t end = sample.find('\n', start);
        if (end == std::string_view::npos) end = sample.size();
        lines.emplace_back(sample.substr(start, end - start));
        if (end == sample.size()) break;
        start = end + 1;
    }
    for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
        const std::string lowered = lower_copy(*it);
        const size_t phrase = lowered.rfind("final answer is");
        if (phrase != std::string::npos) {
            return trim_copy(std::string_view(*it).substr(phrase + 15));
        }
        const size_t marker = lowered.rfind("answer:");
        if (marker != std::string::npos) {
            return trim_copy(std::string_view(*it).substr(marker + 7));
        }
    }
    return std::nullopt;
}

}  // namespace

std::optional<std::string> extract_answer(std::string_view sample) {
    auto [boxed, count] = scan_boxed(sample);
    if (boxed) return trim_copy(*boxed);
    auto line = final_answer_line(sample);
    if (line && !line->empty()) return line;
    return std::nullopt;
}

std::string canonicalize_answer(std::string_view s) {
    std::string t = trim_copy(s);
    bool changed = true;
    while (changed && !t.empty()) {
        changed = false;
        auto wrapped = [&](std::string_view open, std::string_view close) {
            return t.size() >= open.size() + close.size() && t.starts_with(open) &&
                   t.ends_with(close);
        };
        if (wrapped("$", "$")) {
            t = trim_copy(std::string_view(t).substr(1, t.size() - 2));
            changed = true;
        } else if (wrapped("\\(", "\\)") || wrapped("\\[", "\\]")) {
            t = trim_copy(std::string_view(t).substr(2, t.size() - 4));
            changed = true;
        } else if (t.starts_with("\\boxed{") && t.back() == '}') {
            auto [payload, count] = scan_boxed(t);
            if (payload && count == 1) {
                t = trim_copy(*payload);
                changed = true;
            }
        } else if (t.back() == '.') {
            t.pop_back();
            t = trim_copy(t);
            changed = true;
        }
    }
    // collapse internal whitespace runs
    std::string collapsed;
    bool in_space = false;
    for (const char c : t) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            in_space = true;
        } else {
            if (in_space && !collapsed.empty()) collapsed.push_back(' ');
            in_space = false;
            collapsed.push_back(c);
        }
    }
    // strip leading zeros on plain integers: 005 -> 5, -007 -> -7, 000 -> 0
    size_t digits_start = 0;
    if (!collapsed.empty() && (collapsed[0] == '+' || collapsed[0] == '-')) digits_start = 1;
    const bool all_digits =
        collapsed.size() > digits_start &&
        std::all_of(collapsed.begin() + static_cast<long>(digits_start), collapsed.end(),
                    [](unsigned char c) { return std::isdigit(c); });
    if (all_digits) {
        size_t first = digits_start;
        while (first + 1 < collapsed.size() && collapsed[first] == '0') ++first;
        collapsed = collapsed.substr(0, digits_start) + collapsed.substr(first);
    }
    return collapsed;
}

std::string normalizer_prompt(const std::string& candidate, const std::string& gold) {
    return "Decide whether the candidate denotes the same final answer as the gold answer.\n"
           "Candidate: " +
           candidate + "\nGold: " + gold + "\nReply with exactly YES or NO.";
}

namespace {

/// Returns the normalizer verdict, or nullopt when the call failed or was unparseable.
std::optional<bool> ask_normalizer(const NormalizerConfig& normalizer,
                                   const std::string& candidate, const std::string& gold) {
    ChatRequest request;
    request.model = normalizer.model;
    request.user = normalizer_prompt(candidate, gold);
    request.temperature = 0.0;
    request.max_tokens = 8;
    request.n_samples = 1;
    auto result = complete(*normalizer.client, request, "normalize:" + gold, normalizer.retry,
                           normalizer.ledger, nullptr);
    if (!result.ok()) {
        std::cerr << "warning: normalizer call failed (" << result.error->detail
                  << "); keeping strict verdict\n";
        return std::nullopt;
    }
    const std::string reply = lower_copy(trim_copy(result.value->samples[0]));
    if (reply.rfind("yes", 0) == 0) return true;
    if (reply.rfind("no", 0) == 0) return false;
    std::cerr << "warning: normalizer reply not YES/NO; keeping strict verdict\n";
    return std::nullopt;
}

}  // namespace

bool grade(const std::optional<std::string>& candidate, const std::string& gold,
           const NormalizerConfig* normalizer, bool* used_normalizer) {
    if (used_normalizer) *used_normalizer = false;
    if (gold.empty()) throw std::invalid_argument("grade: empty gold answer");

    bool strict = false;
    if (candidate) {
        strict = canonicalize_answer(*candidate) == canonicalize_answer(gold);
    }
    if (strict || !normalizer || !normalizer->client) {
        return strict;
    }
    const std::string cand_text = candidate ? *candidate : std::string("(no answer extracted)");
    auto verdict = ask_normalizer(*normalizer, cand_text, gold);
    if (!verdict) return strict;
    if (used_normalizer) *used_normalizer = true;
    return *verdict;
}

GradeOutcome grade_record(const RunRecord& record, const std::string& gold,
                          const NormalizerConfig* normalizer, std::vector<GradeLogEntry>* log) {
    GradeOutcome outcome;
    outcome.query_id = record.query_id;
    int correct = 0;
    for (size_t i = 0; i < record.samples.size(); ++i) {
        GradeOutcome::Sample s;
        s.extracted = extract_answer(record.samples[i]);
        bool used_normalizer = false;
        s.correct = grade(s.extracted, gold, normalizer, &used_normalizer);
        if (s.correct) ++correct;
        if (log) {
            log->push_back({record.query_id, static_cast<int>(i), s.extracted.value_or(""), gold,
                            s.correct, used_normalizer});
        }
        outcome.per_sample.push_back(std::move(s));
    }
    outcome.average = record.samples.empty()
                          ? 0.0
                          : static_cast<double>(correct) / static_cast<double>(record.samples.size());
    return outcome;
}

double average_at_k(const std::vector<bool>& per_sample_correct) {
    if (per_sample_correct.empty()) return 0.0;
    const auto correct = std::count(per_sample_correct.begin(), per_sample_correct.end(), true);
    return static_cast<double>(correct) / static_cast<double>(per_sample_correct.size());
}

double aggregate_accuracy_pct(const std::vector<GradeOutcome>& outcomes) {
    if (outcomes.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& o : outcomes) sum += o.average;
    return sum / static_cast<double>(outcomes.size()) * 100.0;
}

PriceTable::Price PriceTable::lookup(const std::string& model) const {
    auto it = prices_.find(model);
    if (it == prices_.end()) {
        throw std::runtime_error("no price entry for model '" + model + "'");
    }
    return it->second;
}

PriceTable PriceTable::load(const std::filesystem::path& path) {
    PriceTable table;
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open price table: " + path.string());
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string trimmed = trim_copy(line);
        if (trimmed.empty() || trimmed[0] == '#') continue;
        std::istringstream fields(trimmed);
        std::string model;
        double input = -1.0, output = -1.0;
        fields >> model >> input >> output;
        if (model.empty() || input < 0.0 || output < 0.0 || fields.fail()) {
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                                     ": expected 'model input_price output_price'");
        }
        table.set(model, {input, output});
    }
    return table;
}

double cost_per_query_cents(const Usage& usage, const PriceTable& prices,
                            const std::string& model) {
    const auto price = prices.lookup(model);
    const double dollars =
        static_cast<double>(usage.prompt_tokens) * price.input_per_million / 1e6 +
        static_cast<double>(usage.completion_total()) * price.output_per_million / 1e6;
    return dollars * 100.0;
}

namespace {

std::string format_number(double v) {
    std::ostringstream out;
    out.precision(12);
    out << v;
    return out.str();
}

std::string csv_field(const std::string& s) {
    if (s.find(',') != std::string::npos || s.find('\n') != std::string::npos) {
        throw std::runtime_error("CSV field may not contain commas or newlines: " + s);
    }
    return s;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (const char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

}  // namespace

void fill_deltas(std::vector<MetricsRow>& rows) {
    for (auto& row : rows) {
        if (row.mode == "none") {
            row.delta_pct = 0.0;
            continue;
        }
        const auto baseline = std::find_if(rows.begin(), rows.end(), [&](const MetricsRow& r) {
            return r.mode == "none" && r.benchmark == row.benchmark && r.model == row.model;
        });
        if (baseline == rows.end() || baseline->accuracy_pct == 0.0) {
            row.delta_pct = std::nullopt;
            continue;
        }
        row.delta_pct =
            (row.accuracy_pct - baseline->accuracy_pct) / baseline->accuracy_pct * 100.0;
    }
}

std::string metrics_csv(const std::vector<MetricsRow>& rows) {
    std::ostringstream out;
    out << "benchmark,model,mode,accuracy_pct,delta_pct,cost_cents\n";
    for (const auto& r : rows) {
        out << csv_field(r.benchmark) << ',' << csv_field(r.model) << ',' << csv_field(r.mode)
            << ',' << format_number(r.accuracy_pct) << ','
            << (r.delta_pct ? format_number(*r.delta_pct) : "") << ','
            << format_number(r.cost_cents) << '\n';
    }
    return out.str();
}

std::vector<MetricsRow> parse_metrics_csv(const std::string& text) {
    std::vector<MetricsRow> rows;
    std::istringstream in(text);
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (header) {
            header = false;
            continue;
        }
        if (trim_copy(line).empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 6) throw std::runtime_error("bad metrics CSV line: " + line);
        MetricsRow r;
        r.benchmark = fields[0];
        r.model = fields[1];
        r.mode = fields[2];
        r.accuracy_pct = std::stod(fields[3]);
        if (!fields[4].empty()) r.delta_pct = std::stod(fields[4]);
        r.cost_cents = std::stod(fields[5]);
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<FrontierPoint> frontier_points(const std::vector<MetricsRow>& rows) {
    if (rows.empty()) throw std::invalid_argument("frontier_points: no metrics rows");
    std::map<std::pair<std::string, std::string>, std::pair<double, double>> sums;
    std::map<std::pair<std::string, std::string>, size_t> counts;
    for (const auto& r : rows) {
        const auto key = std::make_pair(r.model, r.mode);
        sums[key].first += r.accuracy_pct;
        sums[key].second += r.cost_cents;
        counts[key]++;
    }
    std::vector<FrontierPoint> points;
    for (const auto& [key, sum] : sums) {
        const double n = static_cast<double>(counts[key]);
        points.push_back({key.first, key.second, sum.first / n, sum.second / n});
    }
    return points;
}

std::string frontier_csv(const std::vector<FrontierPoint>& points) {
    std::ostringstream out;
    out << "model,mode,accuracy_pct,cost_cents\n";
    for (const auto& p : points) {
        out << csv_field(p.model) << ',' << csv_field(p.mode) << ','
            << format_number(p.accuracy_pct) << ',' << format_number(p.cost_cents) << '\n';
    }
    return out.str();
}

std::vector<FrontierPoint> parse_frontier_csv(const std::string& text) {
    std::vector<FrontierPoint> points;
    std::istringstream in(text);
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (header) {
            header = false;
            continue;
        }
        if (trim_copy(line).empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 4) throw std::runtime_error("bad frontier CSV line: " + line);
        points.push_back({fields[0], fields[1], std::stod(fields[2]), std::stod(fields[3])});
    }
    return points;
}

std::string frontier_svg(const std::vector<FrontierPoint>& points) {
    if (points.empty()) throw std::invalid_argument("frontier_svg: no points");
    const double width = 640.0, height = 480.0;
    const double left = 70.0, right = 30.0, top = 30.0, bottom = 60.0;
    const double plot_w = width - left - right;
    const double plot_h = height - top - bottom;

    double min_cost = points[0].cost_cents, max_cost = points[0].cost_cents;
    double min_acc = points[0].accuracy_pct, max_acc = points[0].accuracy_pct;
    for (const auto& p : points) {
        min_cost = std::min(min_cost, p.cost_cents);
        max_cost = std::max(max_cost, p.cost_cents);
        min_acc = std::min(min_acc, p.accuracy_pct);
        max_acc = std::max(max_acc, p.accuracy_pct);
    }
    auto pad_range = [](double& lo, double& hi) {
        const double span = hi - lo;
        const double pad = span > 0.0 ? span * 0.15 : (hi == 0.0 ? 1.0 : std::abs(hi) * 0.15);
        lo -= pad;
        hi += pad;
    };
    pad_range(min_cost, max_cost);
    pad_range(min_acc, max_acc);

    auto x_of = [&](double cost) { return left + (cost - min_cost) / (max_cost - min_cost) * plot_w; };
    auto y_of = [&](double acc) { return top + (max_acc - acc) / (max_acc - min_acc) * plot_h; };

    static const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                     "#ff7f0e", "#8c564b", "#17becf"};
    std::map<std::string, size_t> model_color;
    for (const auto& p : points) {
        model_color.emplace(p.model, model_color.size());
    }

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    svg << "  <rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
    svg << "  <line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << left + plot_w
        << "\" y2=\"" << top + plot_h << "\" stroke=\"black\"/>\n";
    svg << "  <line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
        << top + plot_h << "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        const double cost = min_cost + (max_cost - min_cost) * t / 4.0;
        const double acc = min_acc + (max_acc - min_acc) * t / 4.0;
        svg << "  <text x=\"" << x_of(cost) << "\" y=\"" << top + plot_h + 20.0
            << "\" font-size=\"11\" text-anchor=\"middle\">" << format_number(cost) << "</text>\n";
        svg << "  <text x=\"" << left - 8.0 << "\" y=\"" << y_of(acc) + 4.0
            << "\" font-size=\"11\" text-anchor=\"end\">" << format_number(acc) << "</text>\n";
    }
    svg << "  <text x=\"" << left + plot_w / 2.0 << "\" y=\"" << height - 14.0
        << "\" font-size=\"13\" text-anchor=\"middle\">cost per query (cents)</text>\n";
    svg << "  <text x=\"16\" y=\"" << top + plot_h / 2.0 << "\" font-size=\"13\" "
        << "text-anchor=\"middle\" transform=\"rotate(-90 16 " << top + plot_h / 2.0
        << ")\">accuracy (%)</text>\n";
    for (const auto& p : points) {
        const char* color = kPalette[model_color[p.model] % 7];
        svg << "  <circle cx=\"" << x_of(p.cost_cents) << "\" cy=\"" << y_of(p.accuracy_pct)
            << "\" r=\"5\" fill=\"" << color << "\"/>\n";
        svg << "  <text x=\"" << x_of(p.cost_cents) + 8.0 << "\" y=\"" << y_of(p.accuracy_pct) - 6.0
            << "\" font-size=\"11\">" << p.model << " (" << p.mode << ")</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace tracerag
