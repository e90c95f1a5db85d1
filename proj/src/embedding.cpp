#include "tds/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "httplib.h"
#include "nlohmann/json.hpp"

using nlohmann::json;

namespace tds::embed {

EmbeddingVector EmbeddingVector::of(std::vector<float> values) {
    EmbeddingVector v;
    v.values = std::move(values);
    double sum = 0.0;
    for (float x : v.values) sum += static_cast<double>(x) * static_cast<double>(x);
    v.norm = std::sqrt(sum);
    return v;
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.values.size() != b.values.size())
        throw DimensionMismatch("cosine: " + std::to_string(a.values.size()) + " vs " +
                                std::to_string(b.values.size()));
    constexpr double kEps = 1e-12;
    if (a.norm < kEps || b.norm < kEps) throw ZeroVector("cosine of zero-norm vector");
    double dot = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i)
        dot += static_cast<double>(a.values[i]) * static_cast<double>(b.values[i]);
    return dot / (a.norm * b.norm);
}

// ---- stub embedder ------------------------------------------------------------

std::vector<EmbeddingVector> StubEmbedder::embed(const std::vector<std::string>& texts) {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    const std::uint64_t basis = 1469598103934665603ULL ^ (seed_ * 0x9E3779B97F4A7C15ULL);
    for (const std::string& raw : texts) {
        std::string text = collapse_ws(ascii_lower(raw));
        if (text.empty()) throw EmptyInput("cannot embed empty text");

        std::vector<float> v(dim_, 0.0f);
        auto add_gram = [&](std::string_view gram) {
            std::uint64_t h = fnv1a64(gram, basis);
            std::size_t idx = static_cast<std::size_t>(h % dim_);
            v[idx] += (h >> 63) ? -1.0f : 1.0f;
        };
        if (text.size() < 3) {
            add_gram(text);
        } else {
            for (std::size_t i = 0; i + 3 <= text.size(); ++i)
                add_gram(std::string_view(text).substr(i, 3));
        }

        EmbeddingVector ev = EmbeddingVector::of(std::move(v));
        if (ev.norm < 1e-12) {
            // Pathological cancellation: fall back to a single whole-text bucket.
            std::vector<float> w(dim_, 0.0f);
            w[fnv1a64(text, basis) % dim_] = 1.0f;
            ev = EmbeddingVector::of(std::move(w));
        }
        for (float& x : ev.values) x = static_cast<float>(x / ev.norm);
        out.push_back(EmbeddingVector::of(std::move(ev.values)));
    }
    return out;
}

std::string StubEmbedder::identity() const {
    return "stub-embed:seed=" + std::to_string(seed_) + ":d=" + std::to_string(dim_);
}

// ---- http provider -------------------------------------------------------------

HttpEmbeddingProvider::HttpEmbeddingProvider(std::string endpoint, std::string model,
                                             std::string api_key, std::size_t dim,
                                             int timeout_seconds)
    : endpoint_(std::move(endpoint)),
      model_(std::move(model)),
      api_key_(std::move(api_key)),
      dim_(dim),
      timeout_seconds_(timeout_seconds) {}

std::vector<EmbeddingVector> HttpEmbeddingProvider::embed(const std::vector<std::string>& texts) {
    for (const std::string& t : texts)
        if (collapse_ws(t).empty()) throw EmptyInput("cannot embed empty text");

    netstat::note("embedding request");
    httplib::Client client(endpoint_);
    client.set_connection_timeout(timeout_seconds_, 0);
    client.set_read_timeout(timeout_seconds_, 0);

    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    json body{{"model", model_}, {"texts", texts}};
    auto res = client.Post("/v1/embed", headers, body.dump(), "application/json");
    if (!res) throw ProviderUnavailable("embedding endpoint unreachable: " + endpoint_);
    if (res->status != 200)
        throw ProviderUnavailable("embedding endpoint returned HTTP " +
                                  std::to_string(res->status));

    json reply = json::parse(res->body, nullptr, false);
    if (reply.is_discarded() || !reply.contains("vectors") || !reply["vectors"].is_array())
        throw ProviderUnavailable("malformed embedding envelope from " + endpoint_);
    const json& vectors = reply["vectors"];
    if (vectors.size() != texts.size())
        throw ProviderUnavailable("embedding count mismatch from " + endpoint_);

    std::vector<EmbeddingVector> out;
    out.reserve(vectors.size());
    for (const auto& row : vectors) {
        std::vector<float> values;
        values.reserve(row.size());
        for (const auto& x : row) values.push_back(x.get<float>());
        if (values.size() != dim_)
            throw DimensionMismatch("embedding dim " + std::to_string(values.size()) +
                                    ", expected " + std::to_string(dim_));
        out.push_back(EmbeddingVector::of(std::move(values)));
    }
    return out;
}

std::string HttpEmbeddingProvider::identity() const {
    return "http-embed:" + model_ + "@" + endpoint_ + ":d=" + std::to_string(dim_);
}

// ---- task / dataset text ---------------------------------------------------------

EmbeddingVector embed_task_text(const std::string& task_description,
                                EmbeddingProvider& provider) {
    std::string text = collapse_ws(task_description);
    if (text.empty()) throw EmptyInput("empty task description");
    return provider.embed({text})[0];
}

EmbeddingVector embed_dataset_text(const std::string& name, const std::string& description,
                                   EmbeddingProvider& provider) {
    std::string text = collapse_ws(name + " " + description);
    if (text.empty()) throw EmptyInput("empty dataset text");
    return provider.embed({text})[0];
}

// ---- index -------------------------------------------------------------------------

const char* index_kind_name(IndexKind kind) {
    return kind == IndexKind::task ? "task" : "dataset";
}

void VectorIndex::append(const std::string& id, const EmbeddingVector& v) {
    if (id.empty()) throw Error("index: empty id");
    if (pos_.count(id)) throw Error("index: duplicate id: " + id);
    if (v.values.empty()) throw DimensionMismatch("index: empty vector");
    if (dim_ == 0) dim_ = v.values.size();
    if (v.values.size() != dim_)
        throw DimensionMismatch("index: vector dim " + std::to_string(v.values.size()) +
                                ", index dim " + std::to_string(dim_));
    if (v.norm < 1e-12) throw ZeroVector("index: zero vector for " + id);
    pos_[id] = ids_.size();
    ids_.push_back(id);
    norms_.push_back(v.norm);
    data_.insert(data_.end(), v.values.begin(), v.values.end());
}

EmbeddingVector VectorIndex::vector_of(const std::string& id) const {
    auto it = pos_.find(id);
    if (it == pos_.end()) throw Error("index: unknown id: " + id);
    const float* row = data_.data() + it->second * dim_;
    return EmbeddingVector::of(std::vector<float>(row, row + dim_));
}

std::vector<SearchHit> VectorIndex::search(
    const EmbeddingVector& query, std::size_t k,
    const std::function<bool(const std::string&)>& accept) const {
    if (k == 0 || ids_.empty()) return {};
    if (query.values.size() != dim_)
        throw DimensionMismatch("search: query dim " + std::to_string(query.values.size()) +
                                ", index dim " + std::to_string(dim_));
    if (query.norm < 1e-12) throw ZeroVector("search: zero query vector");

    std::vector<SearchHit> hits;
    hits.reserve(ids_.size());
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        if (accept && !accept(ids_[i])) continue;
        const float* row = data_.data() + i * dim_;
        double dot = 0.0;
        for (std::size_t d = 0; d < dim_; ++d)
            dot += static_cast<double>(row[d]) * static_cast<double>(query.values[d]);
        hits.push_back(SearchHit{ids_[i], dot / (norms_[i] * query.norm)});
    }
    auto better = [](const SearchHit& a, const SearchHit& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.id < b.id;
    };
    if (hits.size() > k) {
        std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(k),
                          hits.end(), better);
        hits.resize(k);
    } else {
        std::sort(hits.begin(), hits.end(), better);
    }
    return hits;
}

namespace {
constexpr char kVecMagic[8] = {'T', 'D', 'S', 'V', 'E', 'C', '0', '1'};

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
std::uint32_t get_u32(const std::string& s, std::size_t off) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s[off + i])) << (8 * i);
    return v;
}
std::uint64_t get_u64(const std::string& s, std::size_t off) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s[off + i])) << (8 * i);
    return v;
}
}  // namespace

void VectorIndex::save(const std::filesystem::path& dir) const {
    std::string base = std::string("index.") + index_kind_name(kind_);

    std::string vec;
    vec.reserve(24 + data_.size() * 4);
    vec.append(kVecMagic, sizeof kVecMagic);
    put_u32(vec, static_cast<std::uint32_t>(dim_));
    put_u64(vec, static_cast<std::uint64_t>(ids_.size()));
    for (float x : data_) {
        std::uint32_t bits;
        std::memcpy(&bits, &x, 4);
        put_u32(vec, bits);
    }
    write_file_atomic((dir / (base + ".vec")).string(), vec);

    std::string ids;
    for (const std::string& id : ids_) {
        ids += id;
        ids += '\n';
    }
    write_file_atomic((dir / (base + ".ids")).string(), ids);
}

VectorIndex VectorIndex::load(const std::filesystem::path& dir, IndexKind kind) {
    std::string base = std::string("index.") + index_kind_name(kind);
    std::string vec = read_file((dir / (base + ".vec")).string());
    if (vec.size() < 20 || std::memcmp(vec.data(), kVecMagic, sizeof kVecMagic) != 0)
        throw Error("bad vector file header: " + (dir / (base + ".vec")).string());
    std::size_t dim = get_u32(vec, 8);
    std::size_t count = get_u64(vec, 12);
    if (dim == 0 || vec.size() != 20 + dim * count * 4)
        throw Error("vector file length mismatch: " + (dir / (base + ".vec")).string());

    std::vector<std::string> ids = split_lines(read_file((dir / (base + ".ids")).string()));
    if (ids.size() != count)
        throw Error("id count mismatch between .vec and .ids for " + base);

    VectorIndex index(kind);
    std::size_t off = 20;
    for (std::size_t i = 0; i < count; ++i) {
        std::vector<float> row(dim);
        for (std::size_t d = 0; d < dim; ++d, off += 4) {
            std::uint32_t bits = get_u32(vec, off);
            std::memcpy(&row[d], &bits, 4);
        }
        index.append(ids[i], EmbeddingVector::of(std::move(row)));
    }
    return index;
}

}  // namespace tds::embed
