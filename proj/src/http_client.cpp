#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "tracerag/http_client.hpp"

#include <httplib.h>
#include <json.hpp>

#include <cstdlib>

namespace tracerag {

using nlohmann::json;

HttpEndpoint HttpEndpoint::from_env() {
    HttpEndpoint ep;
    if (const char* base = std::getenv("TRACERAG_API_BASE")) ep.base_url = base;
    if (const char* key = std::getenv("TRACERAG_API_KEY")) {
        ep.api_key = key;
    } else if (const char* openai = std::getenv("OPENAI_API_KEY")) {
        ep.api_key = openai;
    }
    return ep;
}

std::string build_chat_body(const ChatRequest& request) {
    json body;
    body["model"] = request.model;
    json messages = json::array();
    if (request.system) {
        messages.push_back({{"role", "system"}, {"content", *request.system}});
    }
    messages.push_back({{"role", "user"}, {"content", request.user}});
    body["messages"] = std::move(messages);
    body["temperature"] = request.temperature;
    body["max_tokens"] = request.max_tokens;
    body["n"] = request.n_samples;
    return body.dump();
}

ClientResult<ChatResponse> parse_chat_body(const std::string& body, int expected_samples) {
    json j = json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.contains("choices") || !j["choices"].is_array()) {
        return ClientResult<ChatResponse>::failure(
            ClientError::make(ErrorKind::malformed_response, "invalid chat completion body"));
    }
    ChatResponse response;
    for (const auto& choice : j["choices"]) {
        if (!choice.contains("message") || !choice["message"].contains("content") ||
            !choice["message"]["content"].is_string()) {
            return ClientResult<ChatResponse>::failure(
                ClientError::make(ErrorKind::malformed_response, "choice without message content"));
        }
        response.samples.push_back(choice["message"]["content"].get<std::string>());
    }
    if (static_cast<int>(response.samples.size()) != expected_samples) {
        return ClientResult<ChatResponse>::failure(ClientError::make(
            ErrorKind::malformed_response, "expected " + std::to_string(expected_samples) +
                                               " choices, got " +
                                               std::to_string(response.samples.size())));
    }
    if (j.contains("usage")) {
        const auto& u = j["usage"];
        response.usage.prompt_tokens = u.value("prompt_tokens", 0L);
        // OpenAI-compatible providers report completion tokens in aggregate,
        // not per sample; store the aggregate as a single entry.
        response.usage.completion_tokens.push_back(u.value("completion_tokens", 0L));
    }
    return ClientResult<ChatResponse>::success(std::move(response));
}

std::string build_embed_body(const std::string& model, const std::vector<std::string>& inputs) {
    json body;
    body["model"] = model;
    body["input"] = inputs;
    return body.dump();
}

ClientResult<std::vector<std::vector<float>>> parse_embed_body(const std::string& body,
                                                               size_t expected_count) {
    using Result = ClientResult<std::vector<std::vector<float>>>;
    json j = json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.contains("data") || !j["data"].is_array()) {
        return Result::failure(
            ClientError::make(ErrorKind::malformed_response, "invalid embeddings body"));
    }
    std::vector<std::vector<float>> vectors;
    for (const auto& item : j["data"]) {
        if (!item.contains("embedding") || !item["embedding"].is_array()) {
            return Result::failure(
                ClientError::make(ErrorKind::malformed_response, "data item without embedding"));
        }
        vectors.push_back(item["embedding"].get<std::vector<float>>());
    }
    if (vectors.size() != expected_count) {
        return Result::failure(ClientError::make(
            ErrorKind::malformed_response, "expected " + std::to_string(expected_count) +
                                               " embeddings, got " + std::to_string(vectors.size())));
    }
    const size_t dim = vectors.empty() ? 0 : vectors.front().size();
    for (auto& v : vectors) {
        if (v.size() != dim) {
            return Result::failure(
                ClientError::make(ErrorKind::malformed_response, "dimension mismatch within batch"));
        }
        normalize_unit(v);
    }
    return Result::success(std::move(vectors));
}

namespace {

ClientError error_from_status(int status, const std::string& body) {
    if (status == 429) return ClientError::make(ErrorKind::rate_limited, body);
    if (status == 408) return ClientError::make(ErrorKind::timeout, body);
    if (status >= 500) return ClientError::make(ErrorKind::server, body);
    return ClientError::make(ErrorKind::malformed_response,
                             "status " + std::to_string(status) + ": " + body);
}

struct PostResult {
    int status = 0;
    std::string body;
    bool transport_error = false;
    std::string detail;
};

PostResult post_json(const HttpEndpoint& endpoint, const std::string& path,
                     const std::string& body) {
    httplib::Client client(endpoint.base_url);
    client.set_connection_timeout(endpoint.timeout_seconds);
    client.set_read_timeout(endpoint.timeout_seconds);
    httplib::Headers headers;
    if (!endpoint.api_key.empty()) {
        headers.emplace("Authorization", "Bearer " + endpoint.api_key);
    }
    auto res = client.Post(path, headers, body, "application/json");
    if (!res) {
        return {0, "", true, httplib::to_string(res.error())};
    }
    return {res->status, res->body, false, ""};
}

}  // namespace

ClientResult<ChatResponse> HttpChatClient::complete_once(const ChatRequest& request) {
    if (endpoint_.base_url.empty()) {
        return ClientResult<ChatResponse>::failure(ClientError::make(
            ErrorKind::server, "no chat endpoint configured (set TRACERAG_API_BASE)"));
    }
    const auto res = post_json(endpoint_, "/chat/completions", build_chat_body(request));
    if (res.transport_error) {
        return ClientResult<ChatResponse>::failure(
            ClientError::make(ErrorKind::timeout, "transport: " + res.detail));
    }
    if (res.status != 200) {
        return ClientResult<ChatResponse>::failure(error_from_status(res.status, res.body));
    }
    return parse_chat_body(res.body, request.n_samples);
}

ClientResult<std::vector<std::vector<float>>> HttpEmbedder::embed(
    const std::vector<std::string>& texts, EmbedRole role) {
    using Result = ClientResult<std::vector<std::vector<float>>>;
    if (texts.empty()) {
        return Result::failure(ClientError::make(ErrorKind::malformed_response, "empty batch"));
    }
    if (endpoint_.base_url.empty()) {
        return Result::failure(ClientError::make(
            ErrorKind::server, "no embeddings endpoint configured (set TRACERAG_API_BASE)"));
    }
    std::vector<std::string> inputs;
    inputs.reserve(texts.size());
    const char* prefix = role == EmbedRole::query ? "query: " : "passage: ";
    for (const auto& t : texts) {
        inputs.push_back(prefix_roles_ ? prefix + t : t);
    }
    const auto res = post_json(endpoint_, "/embeddings", build_embed_body(model_, inputs));
    if (res.transport_error) {
        return Result::failure(ClientError::make(ErrorKind::timeout, "transport: " + res.detail));
    }
    if (res.status != 200) {
        return Result::failure(error_from_status(res.status, res.body));
    }
    auto parsed = parse_embed_body(res.body, texts.size());
    if (parsed.ok()) {
        const size_t dim = parsed.value->front().size();
        if (dimension_ == 0) {
            dimension_ = dim;
        } else if (dimension_ != dim) {
            return Result::failure(ClientError::make(
                ErrorKind::malformed_response, "embedding dimension drift: expected " +
                                                   std::to_string(dimension_) + ", got " +
                                                   std::to_string(dim)));
        }
    }
    return parsed;
}

}  // namespace tracerag
