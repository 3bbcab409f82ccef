#include "tracerag/tokenizer.hpp"

#include <stdexcept>

namespace tracerag {

namespace {

bool is_word_byte(unsigned char c) {
    return (c >= '0' && c <= '9') || (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c >= 0x80;
}

bool is_space_byte(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

}  // namespace

std::vector<TokenSpan> WordTokenizer::tokenize(std::string_view text) const {
    std::vector<TokenSpan> out;
    size_t i = 0;
    const size_t n = text.size();
    while (i < n) {
        const unsigned char c = static_cast<unsigned char>(text[i]);
        if (is_space_byte(c)) {
            ++i;
            continue;
        }
        if (is_word_byte(c)) {
            size_t j = i + 1;
            while (j < n && is_word_byte(static_cast<unsigned char>(text[j]))) ++j;
            out.push_back({i, j});
            i = j;
        } else {
            out.push_back({i, i + 1});
            ++i;
        }
    }
    return out;
}

std::shared_ptr<Tokenizer> make_tokenizer(const std::string& id) {
    if (id == "word-v1" || id == "word") {
        return std::make_shared<WordTokenizer>();
    }
    throw std::runtime_error("unknown tokenizer: " + id);
}

}  // namespace tracerag
