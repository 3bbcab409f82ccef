#pragma once

#include <string>

#include "tracerag/client.hpp"

namespace tracerag {

struct HttpEndpoint {
    std::string base_url;  // e.g. https://openrouter.ai/api/v1
    std::string api_key;
    int timeout_seconds = 300;

    /// Reads TRACERAG_API_BASE and TRACERAG_API_KEY (fallback OPENAI_API_KEY).
    static HttpEndpoint from_env();
};

// Request/response mapping for the OpenAI-compatible schema, split out from the
// transport so it can be tested offline.
std::string build_chat_body(const ChatRequest& request);
ClientResult<ChatResponse> parse_chat_body(const std::string& body, int expected_samples);
std::string build_embed_body(const std::string& model, const std::vector<std::string>& inputs);
ClientResult<std::vector<std::vector<float>>> parse_embed_body(const std::string& body,
                                                               size_t expected_count);

class HttpChatClient : public ChatClient {
public:
    explicit HttpChatClient(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {}
    std::string id() const override { return "http:" + endpoint_.base_url; }
    ClientResult<ChatResponse> complete_once(const ChatRequest& request) override;

private:
    HttpEndpoint endpoint_;
};

// OpenAI-compatible embeddings endpoint. Applies the e5-style role prefixes
// ("query: " / "passage: ") when prefix_roles is set; vectors are re-normalized
// locally regardless of provider behavior.
class HttpEmbedder : public Embedder {
public:
    HttpEmbedder(HttpEndpoint endpoint, std::string model, bool prefix_roles = true)
        : endpoint_(std::move(endpoint)), model_(std::move(model)), prefix_roles_(prefix_roles) {}

    std::string id() const override { return "http:" + model_; }
    size_t dimension() const override { return dimension_; }
    ClientResult<std::vector<std::vector<float>>> embed(const std::vector<std::string>& texts,
                                                        EmbedRole role) override;

private:
    HttpEndpoint endpoint_;
    std::string model_;
    bool prefix_roles_;
    size_t dimension_ = 0;  // discovered from the first batch
};

}  // namespace tracerag
