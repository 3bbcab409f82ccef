#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tracerag/client.hpp"

namespace tracerag {

uint64_t stable_hash(std::string_view bytes, uint64_t seed = 0);

// Fully offline chat double. Every sample is a pure function of
// (model, user text, sample index): transformation prompts get a well-formed
// output in the requested format, anything else gets a short worked answer
// ending in a boxed value. Token usage is derived from word counts.
class MockChatClient : public ChatClient {
public:
    std::string id() const override { return "mock"; }
    ClientResult<ChatResponse> complete_once(const ChatRequest& request) override;

    static std::string sample_text(const std::string& model, const std::string& user, int index);
};

// Offline embedder: character-trigram counts bucketed by a stable 64-bit hash
// into a fixed-dimension vector, then L2-normalized. Texts with no trigrams map
// to the canonical e0 unit vector. Role prefixes are not applied; identical
// texts embed identically regardless of role.
class HashEmbedder : public Embedder {
public:
    explicit HashEmbedder(size_t dimension = 256) : dimension_(dimension) {}

    std::string id() const override { return "hash-trigram-" + std::to_string(dimension_); }
    size_t dimension() const override { return dimension_; }
    ClientResult<std::vector<std::vector<float>>> embed(const std::vector<std::string>& texts,
                                                        EmbedRole role) override;

    std::vector<float> embed_one(const std::string& text) const;

private:
    size_t dimension_;
};

}  // namespace tracerag
