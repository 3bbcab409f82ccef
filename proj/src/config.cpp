#include "tracerag/config.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "tracerag/io.hpp"

namespace tracerag {

namespace {

std::string trim(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string unquote(const std::string& s) {
    if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                          (s.front() == '\'' && s.back() == '\''))) {
        return s.substr(1, s.size() - 2);
    }
    return s;
}

long parse_long(const std::string& key, const std::string& value) {
    try {
        size_t pos = 0;
        const long v = std::stol(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected integer, got '" + value + "'");
    }
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected number, got '" + value + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true") return true;
    if (value == "false") return false;
    throw ConfigError("config key '" + key + "': expected true/false, got '" + value + "'");
}

}  // namespace

std::map<std::string, std::string> parse_config_text(const std::string& text,
                                                     const std::string& origin) {
    std::map<std::string, std::string> keys;
    std::istringstream in(text);
    std::string line;
    std::string section;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t comment = line.find('#');
        if (comment != std::string::npos) line = line.substr(0, comment);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": unterminated section");
            }
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) {
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty section name");
            }
            continue;
        }
        const size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = unquote(trim(line.substr(eq + 1)));
        if (key.empty()) {
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
        }
        keys[section.empty() ? key : section + "." + key] = value;
    }
    return keys;
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
    RunConfig config;
    config.apply(parse_config_text(read_file(path), path.string()));
    return config;
}

void RunConfig::apply(const std::map<std::string, std::string>& keys) {
    for (const auto& [key, value] : keys) {
        if (key == "decontam.n") {
            decontam.n = static_cast<int>(parse_long(key, value));
            if (decontam.n < 1) throw ConfigError("config key 'decontam.n': must be >= 1");
        } else if (key == "decontam.threshold") {
            decontam.threshold = parse_double(key, value);
            if (decontam.threshold < 0.0 || decontam.threshold > 1.0) {
                throw ConfigError("config key 'decontam.threshold': must be in [0,1]");
            }
        } else if (key == "chunk.limit") {
            chunk.limit = static_cast<size_t>(parse_long(key, value));
            if (chunk.limit < 1) throw ConfigError("config key 'chunk.limit': must be >= 1");
        } else if (key == "chunk.overlap") {
            chunk.overlap = static_cast<size_t>(parse_long(key, value));
            if (chunk.overlap != 0) {
                throw ConfigError("config key 'chunk.overlap': only 0 is supported");
            }
        } else if (key == "retrieval.k") {
            retrieval.k = static_cast<size_t>(parse_long(key, value));
            if (retrieval.k < 1) throw ConfigError("config key 'retrieval.k': must be >= 1");
        } else if (key == "retrieval.embedder") {
            if (value != "hash" && value != "http") {
                throw ConfigError("config key 'retrieval.embedder': expected hash|http");
            }
            retrieval.embedder = value;
        } else if (key == "retrieval.embed_model") {
            retrieval.embed_model = value;
        } else if (key == "retrieval.include_problem") {
            retrieval.include_problem = parse_bool(key, value);
        } else if (key == "sampling.temperature") {
            sampling.temperature = parse_double(key, value);
            if (sampling.temperature < 0.0) {
                throw ConfigError("config key 'sampling.temperature': must be >= 0");
            }
        } else if (key == "sampling.max_tokens") {
            sampling.max_tokens = static_cast<int>(parse_long(key, value));
            if (sampling.max_tokens < 1) {
                throw ConfigError("config key 'sampling.max_tokens': must be >= 1");
            }
        } else if (key == "sampling.n_samples") {
            sampling.n_samples = static_cast<int>(parse_long(key, value));
            if (sampling.n_samples < 1) {
                throw ConfigError("config key 'sampling.n_samples': must be >= 1");
            }
        } else if (key == "models.transformer") {
            models.transformer = value;
        } else if (key == "models.solver") {
            models.solver = value;
        } else if (key == "models.normalizer") {
            models.normalizer = value;
        } else if (key == "models.transform_temperature") {
            models.transform_temperature = parse_double(key, value);
        } else if (key == "models.transform_max_tokens") {
            models.transform_max_tokens = static_cast<int>(parse_long(key, value));
        } else if (key == "limits.budget_tokens") {
            limits.budget_tokens = parse_long(key, value);
            if (limits.budget_tokens < 1) {
                throw ConfigError("config key 'limits.budget_tokens': must be >= 1");
            }
        } else if (key == "limits.concurrency") {
            limits.concurrency = static_cast<int>(parse_long(key, value));
            if (limits.concurrency < 1) {
                throw ConfigError("config key 'limits.concurrency': must be >= 1");
            }
        } else if (key == "limits.max_attempts") {
            limits.max_attempts = static_cast<int>(parse_long(key, value));
            if (limits.max_attempts < 1) {
                throw ConfigError("config key 'limits.max_attempts': must be >= 1");
            }
        } else {
            throw ConfigError("unknown config key '" + key + "'");
        }
    }
}

std::string RunConfig::render() const {
    std::ostringstream out;
    out << "[decontam]\n";
    out << "n = " << decontam.n << "\n";
    out << "threshold = " << decontam.threshold << "\n\n";
    out << "[chunk]\n";
    out << "limit = " << chunk.limit << "\n";
    out << "overlap = " << chunk.overlap << "\n\n";
    out << "[retrieval]\n";
    out << "k = " << retrieval.k << "\n";
    out << "embedder = \"" << retrieval.embedder << "\"\n";
    out << "embed_model = \"" << retrieval.embed_model << "\"\n";
    out << "include_problem = " << (retrieval.include_problem ? "true" : "false") << "\n\n";
    out << "[sampling]\n";
    out << "temperature = " << sampling.temperature << "\n";
    out << "max_tokens = " << sampling.max_tokens << "\n";
    out << "n_samples = " << sampling.n_samples << "\n\n";
    out << "[models]\n";
    out << "transformer = \"" << models.transformer << "\"\n";
    out << "solver = \"" << models.solver << "\"\n";
    out << "normalizer = \"" << models.normalizer << "\"\n";
    out << "transform_temperature = " << models.transform_temperature << "\n";
    out << "transform_max_tokens = " << models.transform_max_tokens << "\n\n";
    out << "[limits]\n";
    out << "budget_tokens = " << limits.budget_tokens << "\n";
    out << "concurrency = " << limits.concurrency << "\n";
    out << "max_attempts = " << limits.max_attempts << "\n";
    return out.str();
}

void RunConfig::write_snapshot(const std::filesystem::path& out_dir) const {
    write_file_atomic(out_dir / "config.snapshot.toml", render());
}

}  // namespace tracerag
