#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "tds/common.hpp"

namespace tds::embed {

struct DimensionMismatch : Error {
    using Error::Error;
};
struct ZeroVector : Error {
    using Error::Error;
};
struct ProviderUnavailable : Error {
    using Error::Error;
};
struct EmptyInput : Error {
    using Error::Error;
};

struct EmbeddingVector {
    std::vector<float> values;
    double norm = 0.0;  // Euclidean norm of values, cached

    static EmbeddingVector of(std::vector<float> values);
    std::size_t dim() const { return values.size(); }
};

// Throws DimensionMismatch on size disagreement, ZeroVector if either norm
// is (near) zero.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) = 0;
    virtual std::string identity() const = 0;
    virtual std::size_t dim() const = 0;
};

// Hash-based offline embedder: FNV-1a over character 3-grams of the
// lowercased text, signed bucket accumulation, L2-normalized. Similar
// strings land near each other; output depends only on (text, seed, dim).
class StubEmbedder : public EmbeddingProvider {
public:
    explicit StubEmbedder(std::uint64_t seed = 42, std::size_t dim = 64)
        : seed_(seed), dim_(dim) {}

    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;
    std::string identity() const override;
    std::size_t dim() const override { return dim_; }

private:
    std::uint64_t seed_;
    std::size_t dim_;
};

// POSTs {model, texts} to <endpoint>/v1/embed, expects {"vectors": [[...]]}.
class HttpEmbeddingProvider : public EmbeddingProvider {
public:
    HttpEmbeddingProvider(std::string endpoint, std::string model, std::string api_key,
                          std::size_t dim, int timeout_seconds = 60);

    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;
    std::string identity() const override;
    std::size_t dim() const override { return dim_; }

private:
    std::string endpoint_;
    std::string model_;
    std::string api_key_;
    std::size_t dim_;
    int timeout_seconds_;
};

// Whitespace-collapsed task description; EmptyInput when nothing remains.
EmbeddingVector embed_task_text(const std::string& task_description, EmbeddingProvider& provider);
// Dataset mentions embed as "name description".
EmbeddingVector embed_dataset_text(const std::string& name, const std::string& description,
                                   EmbeddingProvider& provider);

// ---- index ------------------------------------------------------------------

enum class IndexKind { task, dataset };
const char* index_kind_name(IndexKind kind);

struct SearchHit {
    std::string id;
    double score;  // cosine
};

// Exact brute-force cosine index. Ids are unique; insertion order is kept
// (and is what the on-disk row order reflects).
class VectorIndex {
public:
    explicit VectorIndex(IndexKind kind) : kind_(kind) {}

    void append(const std::string& id, const EmbeddingVector& v);
    bool contains(const std::string& id) const { return pos_.count(id) > 0; }
    EmbeddingVector vector_of(const std::string& id) const;
    std::size_t size() const { return ids_.size(); }
    std::size_t dim() const { return dim_; }
    IndexKind kind() const { return kind_; }
    const std::vector<std::string>& ids() const { return ids_; }

    // Top-k by cosine, ties broken by ascending id. `accept` (optional)
    // filters candidates before ranking.
    std::vector<SearchHit> search(const EmbeddingVector& query, std::size_t k,
                                  const std::function<bool(const std::string&)>& accept = {}) const;

    // dir/index.<kind>.vec (binary, little-endian float32 rows behind a
    // magic + dimension + count header) and dir/index.<kind>.ids.
    void save(const std::filesystem::path& dir) const;
    static VectorIndex load(const std::filesystem::path& dir, IndexKind kind);

private:
    IndexKind kind_;
    std::size_t dim_ = 0;
    std::vector<float> data_;           // row-major
    std::vector<double> norms_;
    std::vector<std::string> ids_;
    std::map<std::string, std::size_t> pos_;
};

}  // namespace tds::embed
