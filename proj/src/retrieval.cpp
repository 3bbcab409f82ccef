#include "tracerag/retrieval.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "tracerag/io.hpp"
#include "tracerag/worker_pool.hpp"

namespace tracerag {

std::vector<Chunk> chunk_text(std::string_view text, size_t limit, const Tokenizer& tokenizer,
                              const std::string& source_id) {
    if (limit < 1) throw std::invalid_argument("chunk_text: limit must be >= 1");
    const auto tokens = tokenizer.tokenize(text);
    std::vector<Chunk> chunks;
    for (size_t start = 0; start < tokens.size(); start += limit) {
        const size_t end = std::min(start + limit, tokens.size());
        Chunk c;
        c.source_id = source_id;
        c.seq = static_cast<int>(chunks.size());
        c.token_begin = start;
        c.token_end = end;
        c.text = std::string(text.substr(tokens[start].begin,
                                         tokens[end - 1].end - tokens[start].begin));
        chunks.push_back(std::move(c));
    }
    return chunks;
}

namespace {

std::string unit_source_text(const TraceRecord& r, bool include_problem) {
    if (include_problem) return r.problem + "\n" + r.trace;
    return r.trace;
}

}  // namespace

std::vector<CorpusUnit> build_units(const std::vector<TraceRecord>& records, UnitMode mode,
                                    const BuildOptions& options) {
    WordTokenizer default_tokenizer;
    const Tokenizer& tokenizer = options.tokenizer ? *options.tokenizer : default_tokenizer;

    std::vector<CorpusUnit> units;
    switch (mode) {
        case UnitMode::full:
            for (const auto& r : records) {
                CorpusUnit u;
                u.source_id = r.id;
                u.mode = mode;
                u.seq = 0;
                u.unit_id = make_unit_id(r.id, mode, 0);
                u.text = unit_source_text(r, options.include_problem);
                units.push_back(std::move(u));
            }
            break;
        case UnitMode::chunk:
            for (const auto& r : records) {
                const std::string source = unit_source_text(r, options.include_problem);
                for (auto& c : chunk_text(source, options.chunk_limit, tokenizer, r.id)) {
                    CorpusUnit u;
                    u.source_id = r.id;
                    u.mode = mode;
                    u.seq = c.seq;
                    u.unit_id = make_unit_id(r.id, mode, c.seq);
                    u.text = std::move(c.text);
                    units.push_back(std::move(u));
                }
            }
            break;
        case UnitMode::final_output:
            for (const auto& r : records) {
                if (!r.final_output || r.final_output->empty()) {
                    throw std::invalid_argument("build_units: record '" + r.id +
                                                "' has no final_output");
                }
                CorpusUnit u;
                u.source_id = r.id;
                u.mode = mode;
                u.seq = 0;
                u.unit_id = make_unit_id(r.id, mode, 0);
                u.text = *r.final_output;
                units.push_back(std::move(u));
            }
            break;
        default:
            throw std::invalid_argument(
                "build_units: transformed modes are produced by the transform stage");
    }
    return units;
}

Index Index::build(const std::vector<CorpusUnit>& units, Embedder& embedder, size_t batch_size,
                   int workers, RunLedger* ledger) {
    if (units.empty()) throw std::invalid_argument("Index::build: no units");
    if (batch_size < 1) batch_size = 1;

    std::unordered_set<std::string> ids;
    for (const auto& u : units) {
        if (!ids.insert(u.unit_id).second) {
            throw std::runtime_error("Index::build: duplicate unit_id '" + u.unit_id + "'");
        }
    }

    Index index;
    index.mode_ = units.front().mode;
    index.embedder_id_ = embedder.id();
    index.units_ = units;
    index.entries_.resize(units.size());

    const size_t n_batches = (units.size() + batch_size - 1) / batch_size;
    parallel_for(n_batches, workers, [&](size_t b) {
        const size_t begin = b * batch_size;
        const size_t end = std::min(begin + batch_size, units.size());
        std::vector<std::string> texts;
        texts.reserve(end - begin);
        for (size_t i = begin; i < end; ++i) texts.push_back(units[i].text);
        auto result = embedder.embed(texts, EmbedRole::passage);
        if (!result.ok()) {
            throw std::runtime_error("embedding failed: " + result.error->detail);
        }
        if (ledger) {
            ledger->record_embed("batch-" + std::to_string(b), embedder.id(), texts.size(), "ok");
        }
        for (size_t i = begin; i < end; ++i) {
            index.entries_[i] = {units[i].unit_id, std::move((*result.value)[i - begin])};
        }
    });

    index.dimension_ = index.entries_.front().vector.size();
    for (const auto& e : index.entries_) {
        if (e.vector.size() != index.dimension_) {
            throw std::runtime_error("Index::build: embedding dimension drift at unit '" +
                                     e.unit_id + "'");
        }
    }
    return index;
}

std::filesystem::path Index::sidecar_path(const std::filesystem::path& index_path) {
    std::filesystem::path p = index_path;
    p += ".units.jsonl";
    return p;
}

namespace {

template <typename T>
void write_pod(std::string& buf, T value) {
    // serialized little-endian; in-memory layout on all supported targets
    char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    buf.append(bytes, sizeof(T));
}

template <typename T>
T read_pod(const std::string& buf, size_t& pos) {
    if (pos + sizeof(T) > buf.size()) throw std::runtime_error("index file truncated");
    T value;
    std::memcpy(&value, buf.data() + pos, sizeof(T));
    pos += sizeof(T);
    return value;
}

void write_string(std::string& buf, const std::string& s) {
    write_pod<uint32_t>(buf, static_cast<uint32_t>(s.size()));
    buf.append(s);
}

std::string read_string(const std::string& buf, size_t& pos) {
    const uint32_t len = read_pod<uint32_t>(buf, pos);
    if (pos + len > buf.size()) throw std::runtime_error("index file truncated");
    std::string s = buf.substr(pos, len);
    pos += len;
    return s;
}

}  // namespace

void Index::save(const std::filesystem::path& path) const {
    std::string buf;
    buf.append("TRIX");
    write_pod<uint32_t>(buf, kFormatVersion);
    write_pod<uint32_t>(buf, static_cast<uint32_t>(dimension_));
    write_pod<uint64_t>(buf, static_cast<uint64_t>(entries_.size()));
    write_string(buf, embedder_id_);
    write_string(buf, to_string(mode_));
    for (const auto& e : entries_) {
        write_string(buf, e.unit_id);
        for (const float x : e.vector) write_pod<float>(buf, x);
    }
    write_file_atomic(path, buf);

    std::string sidecar;
    for (const auto& u : units_) {
        sidecar += to_jsonl_line(u);
        sidecar += '\n';
    }
    write_file_atomic(sidecar_path(path), sidecar);
}

Index Index::load(const std::filesystem::path& path) {
    const std::string buf = read_file(path);
    size_t pos = 0;
    if (buf.size() < 4 || buf.compare(0, 4, "TRIX") != 0) {
        throw std::runtime_error("not an index file: " + path.string());
    }
    pos = 4;
    const uint32_t version = read_pod<uint32_t>(buf, pos);
    if (version != kFormatVersion) {
        throw std::runtime_error("unsupported index version " + std::to_string(version));
    }
    Index index;
    index.dimension_ = read_pod<uint32_t>(buf, pos);
    const uint64_t count = read_pod<uint64_t>(buf, pos);
    index.embedder_id_ = read_string(buf, pos);
    index.mode_ = unit_mode_from_string(read_string(buf, pos));
    index.entries_.reserve(count);
    for (uint64_t i = 0; i < count; ++i) {
        IndexEntry e;
        e.unit_id = read_string(buf, pos);
        e.vector.resize(index.dimension_);
        for (size_t d = 0; d < index.dimension_; ++d) e.vector[d] = read_pod<float>(buf, pos);
        index.entries_.push_back(std::move(e));
    }
    index.units_ = load_units(sidecar_path(path));
    if (index.units_.size() != index.entries_.size()) {
        throw std::runtime_error("index sidecar out of sync with index file");
    }
    return index;
}

const std::string& Index::unit_text(const std::string& unit_id) const {
    for (size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].unit_id == unit_id) return units_[i].text;
    }
    throw std::runtime_error("unknown unit_id: " + unit_id);
}

RetrievedContext Index::search(const std::string& query_text, size_t k, Embedder& embedder,
                               const std::string& query_id) const {
    if (entries_.empty()) throw std::runtime_error("search over empty index");
    if (k < 1) throw std::invalid_argument("search: k must be >= 1");
    if (embedder.id() != embedder_id_) {
        throw std::runtime_error("embedder mismatch: index built with '" + embedder_id_ +
                                 "', queried with '" + embedder.id() + "'");
    }
    auto embedded = embedder.embed({query_text}, EmbedRole::query);
    if (!embedded.ok()) {
        throw std::runtime_error("query embedding failed: " + embedded.error->detail);
    }
    const std::vector<float>& q = embedded.value->front();
    if (q.size() != dimension_) {
        throw std::runtime_error("query embedding dimension mismatch");
    }

    std::vector<std::pair<double, size_t>> scored(entries_.size());
    for (size_t i = 0; i < entries_.size(); ++i) {
        double dot = 0.0;
        const auto& v = entries_[i].vector;
        for (size_t d = 0; d < dimension_; ++d) {
            dot += static_cast<double>(v[d]) * static_cast<double>(q[d]);
        }
        scored[i] = {dot, i};
    }
    const size_t take = std::min(k, scored.size());
    auto better = [&](const std::pair<double, size_t>& a, const std::pair<double, size_t>& b) {
        if (a.first != b.first) return a.first > b.first;
        return entries_[a.second].unit_id < entries_[b.second].unit_id;
    };
    std::partial_sort(scored.begin(), scored.begin() + take, scored.end(), better);

    RetrievedContext out;
    out.query_id = query_id;
    out.k = k;
    out.hits.reserve(take);
    for (size_t r = 0; r < take; ++r) {
        const size_t i = scored[r].second;
        out.hits.push_back({entries_[i].unit_id, scored[r].first, units_[i].text});
    }
    return out;
}

}  // namespace tracerag
