#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "tds/extract.hpp"
#include "tds/kgraph.hpp"
#include "tds/query.hpp"

namespace tds::sys {

struct ConfigError : Error {
    using Error::Error;
};

// processed_at stamp used when every client is a stub, so repeated builds
// are byte-identical.
inline constexpr const char* kFixedTimestamp = "2000-01-01T00:00:00Z";

// Precedence: command-line flags > environment > config file > defaults.
// The file is strict: unknown keys are rejected. Credentials only ever come
// from the environment and are never written back out.
struct SystemConfig {
    std::string corpus;
    std::string store = "store";
    std::string cache = "cache";  // lives outside the store; survives rebuilds
    std::string alias_seed_file;

    struct Stub {
        bool extractor = true;
        bool judge = true;
        bool reranker = true;
        bool embedder = true;
        std::string fixtures;  // optional stub-rules JSON
        std::uint64_t seed = 42;
    } stub;

    struct Embedding {
        std::size_t dim = 64;
        std::string endpoint;
        std::string model;
        std::string api_key;  // env only (TDS_EMBED_API_KEY)
    } embedding;

    struct Llm {
        std::string endpoint;
        std::string model;
        std::string api_key;  // env only (TDS_LLM_API_KEY)
        int timeout_seconds = 60;
    } llm;

    kg::LinkingConfig linking;
    query::QueryConfig query;
    extract::ExtractOptions extract;

    bool deterministic() const {
        return stub.extractor && stub.judge && stub.reranker && stub.embedder;
    }
    std::string timestamp() const;

    // File + environment, in precedence order. Empty path skips the file.
    static SystemConfig load(const std::string& config_path);
    static SystemConfig from_json_string(const std::string& text);
    void apply_environment();
    void validate() const;
};

}  // namespace tds::sys
