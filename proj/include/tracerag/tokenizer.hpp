#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace tracerag {

/// Byte span of one token within its source text.
struct TokenSpan {
    size_t begin = 0;
    size_t end = 0;
};

// Tokenizers are the single measuring stick for lengths, chunk boundaries and
// corpus statistics. Implementations must be deterministic and locale-free.
class Tokenizer {
public:
    virtual ~Tokenizer() = default;
    virtual std::string id() const = 0;
    virtual std::vector<TokenSpan> tokenize(std::string_view text) const = 0;
    size_t count(std::string_view text) const { return tokenize(text).size(); }
};

// Default tokenizer: a token is either a maximal run of ASCII alphanumerics
// plus non-ASCII bytes, or a single non-space symbol. Spans slice the source
// text losslessly, so a substring cut at token boundaries re-tokenizes to
// exactly the enclosed tokens.
class WordTokenizer : public Tokenizer {
public:
    std::string id() const override { return "word-v1"; }
    std::vector<TokenSpan> tokenize(std::string_view text) const override;
};

std::shared_ptr<Tokenizer> make_tokenizer(const std::string& id);

}  // namespace tracerag
