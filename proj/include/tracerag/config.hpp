#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>

namespace tracerag {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shared pipeline configuration. Built-in defaults mirror the reference
// settings (13-gram decontamination, 512-token chunks, top-3 retrieval,
// temperature 0.6, 16K generation tokens, 8 samples); a config file overrides
// defaults and CLI flags override the file.
struct RunConfig {
    struct {
        int n = 13;
        double threshold = 0.8;
    } decontam;
    struct {
        size_t limit = 512;
        size_t overlap = 0;  // reserved; only 0 is supported
    } chunk;
    struct {
        size_t k = 3;
        std::string embedder = "hash";  // "hash" or "http"
        std::string embed_model;        // model id for the http embedder
        bool include_problem = true;
    } retrieval;
    struct {
        double temperature = 0.6;
        int max_tokens = 16384;
        int n_samples = 8;
    } sampling;
    struct {
        std::string transformer = "mock";
        std::string solver = "mock";
        std::string normalizer;  // empty = strict grading only
        double transform_temperature = 0.3;
        int transform_max_tokens = 2048;
    } models;
    struct {
        long budget_tokens = 1000000000L;
        int concurrency = 8;
        int max_attempts = 5;
    } limits;

    static RunConfig from_file(const std::filesystem::path& path);
    void apply(const std::map<std::string, std::string>& keys);  // "section.key" -> value

    /// Deterministic snapshot of every resolved setting.
    std::string render() const;
    void write_snapshot(const std::filesystem::path& out_dir) const;
};

/// Minimal TOML-style parser: [section] headers, key = value pairs, "#" comments,
/// optionally quoted string values.
std::map<std::string, std::string> parse_config_text(const std::string& text,
                                                     const std::string& origin);

}  // namespace tracerag
