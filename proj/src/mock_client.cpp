#include "tracerag/mock_client.hpp"

#include <algorithm>
#include <sstream>

#include "tracerag/prompts.hpp"

namespace tracerag {

uint64_t stable_hash(std::string_view bytes, uint64_t seed) {
    uint64_t h = 1469598103934665603ull ^ seed;
    for (const char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    return h;
}

namespace {

long word_count(std::string_view text) {
    long n = 0;
    bool in_word = false;
    for (const char c : text) {
        const bool space = c == ' ' || c == '\n' || c == '\t' || c == '\r';
        if (!space && !in_word) ++n;
        in_word = !space;
    }
    return n;
}

std::vector<std::string> split_words(std::string_view text) {
    std::vector<std::string> words;
    std::string cur;
    for (const char c : text) {
        if (c == ' ' || c == '\n' || c == '\t' || c == '\r') {
            if (!cur.empty()) {
                words.push_back(cur);
                cur.clear();
            }
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) words.push_back(cur);
    return words;
}

std::string join_slice(const std::vector<std::string>& words, size_t start, size_t count) {
    if (words.empty()) return "(empty trace)";
    start = std::min(start, words.size() - 1);
    std::string out;
    for (size_t i = start; i < std::min(start + count, words.size()); ++i) {
        if (!out.empty()) out += ' ';
        out += words[i];
    }
    return out;
}

std::string_view trace_portion(const std::string& user) {
    const std::string_view marker = "Given trace: ";
    const size_t pos = user.rfind(marker);
    if (pos == std::string::npos) return user;
    return std::string_view(user).substr(pos + marker.size());
}

bool contains_nocase(std::string_view hay, std::string_view needle) {
    auto lower = [](std::string_view s) {
        std::string out(s);
        std::transform(out.begin(), out.end(), out.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        return out;
    };
    return lower(hay).find(lower(needle)) != std::string::npos;
}

std::string boxed(uint64_t h) { return "$\\boxed{" + std::to_string(h % 1000) + "}$"; }

std::string structural_output(const std::vector<std::string>& words, uint64_t h, bool two_approaches) {
    std::ostringstream out;
    out << "Problem: " << join_slice(words, 0, 12) << "\n";
    const int approaches = two_approaches ? 2 : 1;
    const size_t len = std::max<size_t>(words.size(), 1);
    for (int a = 0; a < approaches; ++a) {
        out << "Approach: " << (a == 0 ? "Direct derivation" : "Alternative route") << "\n";
        for (int s = 1; s <= 3; ++s) {
            const size_t at = (len * static_cast<size_t>(a * 3 + s)) / 8;
            out << "Step " << s << ": " << join_slice(words, at, 8) << "\n";
        }
        out << "Answer: " << boxed(h + static_cast<uint64_t>(a)) << "\n";
    }
    return out.str();
}

std::string semantic_output(const std::vector<std::string>& words, uint64_t h) {
    std::ostringstream out;
    const size_t len = std::max<size_t>(words.size(), 1);
    out << "Problem: " << join_slice(words, 0, 12) << "\n";
    out << "Pass 1: " << join_slice(words, len / 4, 20) << "\n";
    out << "Pass 2: " << join_slice(words, len / 2, 10) << "\n";
    out << "Pass 3: " << join_slice(words, (3 * len) / 4, 6) << "\n";
    out << "Answer: " << boxed(h) << "\n";
    return out.str();
}

std::string reflect_output(const std::vector<std::string>& words, uint64_t h) {
    std::ostringstream out;
    const size_t len = std::max<size_t>(words.size(), 1);
    out << "Problem: " << join_slice(words, 0, 12) << "\n";
    out << "Common Mistakes: rushing past " << join_slice(words, len / 5, 8) << "\n";
    out << "Misleading Intuitions: assuming " << join_slice(words, (2 * len) / 5, 8) << "\n";
    out << "Critical Checks: verify " << join_slice(words, (3 * len) / 5, 8) << "\n";
    out << "Correct Approach (brief): " << join_slice(words, (4 * len) / 5, 10) << "\n";
    out << "Answer: " << boxed(h) << "\n";
    return out.str();
}

std::string solver_output(uint64_t h) {
    std::ostringstream out;
    out << "Following the hinted strategy, set up the quantities and simplify.\n";
    if (h % 3 == 0) out << "A quick consistency check confirms the intermediate value.\n";
    out << "Answer: " << boxed(h) << "\n";
    return out.str();
}

}  // namespace

std::string MockChatClient::sample_text(const std::string& model, const std::string& user,
                                        int index) {
    const uint64_t h = stable_hash(user, stable_hash(model, static_cast<uint64_t>(index) + 1));
    const std::string_view u = user;
    auto starts_with = [&](std::string_view prefix) { return u.substr(0, prefix.size()) == prefix; };

    const std::string_view struct_head = prompts::kStructural.substr(0, 40);
    const std::string_view semantic_head = prompts::kSemantic.substr(0, 40);
    const std::string_view reflect_head = prompts::kReflect.substr(0, 40);

    if (starts_with(struct_head) || starts_with(semantic_head) || starts_with(reflect_head)) {
        const auto words = split_words(trace_portion(user));
        if (starts_with(struct_head)) {
            const bool two = contains_nocase(trace_portion(user), "alternative approach");
            return structural_output(words, h, two);
        }
        if (starts_with(semantic_head)) return semantic_output(words, h);
        return reflect_output(words, h);
    }
    return solver_output(h);
}

ClientResult<ChatResponse> MockChatClient::complete_once(const ChatRequest& request) {
    ChatResponse response;
    response.usage.prompt_tokens = word_count(request.user);
    if (request.system) response.usage.prompt_tokens += word_count(*request.system);
    for (int i = 0; i < request.n_samples; ++i) {
        std::string sample = sample_text(request.model, request.user, i);
        response.usage.completion_tokens.push_back(word_count(sample));
        response.samples.push_back(std::move(sample));
    }
    return ClientResult<ChatResponse>::success(std::move(response));
}

ClientResult<std::vector<std::vector<float>>> HashEmbedder::embed(
    const std::vector<std::string>& texts, EmbedRole) {
    if (texts.empty()) {
        return ClientResult<std::vector<std::vector<float>>>::failure(
            ClientError::make(ErrorKind::malformed_response, "empty embedding batch"));
    }
    std::vector<std::vector<float>> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed_one(t));
    return ClientResult<std::vector<std::vector<float>>>::success(std::move(out));
}

std::vector<float> HashEmbedder::embed_one(const std::string& text) const {
    std::vector<float> v(dimension_, 0.0f);
    if (text.size() >= 3) {
        for (size_t i = 0; i + 3 <= text.size(); ++i) {
            const uint64_t h = stable_hash(std::string_view(text).substr(i, 3));
            v[h % dimension_] += 1.0f;
        }
    }
    normalize_unit(v);
    return v;
}

}  // namespace tracerag
