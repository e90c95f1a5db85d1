#include "tds/config.hpp"

#include <cstdlib>

#include "nlohmann/json.hpp"

using nlohmann::json;

namespace tds::sys {

std::string SystemConfig::timestamp() const {
    return deterministic() ? kFixedTimestamp : iso8601_utc_now();
}

namespace {

void require_keys(const json& obj, const char* section,
                  std::initializer_list<const char*> known) {
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (const char* k : known)
            if (key == k) ok = true;
        if (!ok)
            throw ConfigError(std::string("config: unknown key '") + key + "' in " + section);
    }
}

const char* env(const char* name) { return std::getenv(name); }

}  // namespace

SystemConfig SystemConfig::from_json_string(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw ConfigError("config: file is not a JSON object");

    require_keys(j, "top level",
                 {"corpus", "store", "cache", "alias_seed_file", "stub", "embedding", "llm",
                  "linking", "query", "extract"});

    SystemConfig c;
    if (j.contains("corpus")) c.corpus = j["corpus"].get<std::string>();
    if (j.contains("store")) c.store = j["store"].get<std::string>();
    if (j.contains("cache")) c.cache = j["cache"].get<std::string>();
    if (j.contains("alias_seed_file")) c.alias_seed_file = j["alias_seed_file"].get<std::string>();

    if (j.contains("stub")) {
        const json& s = j["stub"];
        require_keys(s, "stub", {"extractor", "judge", "reranker", "embedder", "fixtures", "seed"});
        if (s.contains("extractor")) c.stub.extractor = s["extractor"].get<bool>();
        if (s.contains("judge")) c.stub.judge = s["judge"].get<bool>();
        if (s.contains("reranker")) c.stub.reranker = s["reranker"].get<bool>();
        if (s.contains("embedder")) c.stub.embedder = s["embedder"].get<bool>();
        if (s.contains("fixtures")) c.stub.fixtures = s["fixtures"].get<std::string>();
        if (s.contains("seed")) c.stub.seed = s["seed"].get<std::uint64_t>();
    }
    if (j.contains("embedding")) {
        const json& e = j["embedding"];
        require_keys(e, "embedding", {"dim", "endpoint", "model"});
        if (e.contains("dim")) c.embedding.dim = e["dim"].get<std::size_t>();
        if (e.contains("endpoint")) c.embedding.endpoint = e["endpoint"].get<std::string>();
        if (e.contains("model")) c.embedding.model = e["model"].get<std::string>();
    }
    if (j.contains("llm")) {
        const json& l = j["llm"];
        require_keys(l, "llm", {"endpoint", "model", "timeout_seconds"});
        if (l.contains("endpoint")) c.llm.endpoint = l["endpoint"].get<std::string>();
        if (l.contains("model")) c.llm.model = l["model"].get<std::string>();
        if (l.contains("timeout_seconds")) c.llm.timeout_seconds = l["timeout_seconds"].get<int>();
    }
    if (j.contains("linking")) {
        const json& l = j["linking"];
        require_keys(l, "linking", {"theta_d", "theta_k", "blocking_k", "judge_floor"});
        if (l.contains("theta_d")) c.linking.theta_d = l["theta_d"].get<double>();
        if (l.contains("theta_k")) c.linking.theta_k = l["theta_k"].get<double>();
        if (l.contains("blocking_k")) c.linking.blocking_k = l["blocking_k"].get<std::size_t>();
        if (l.contains("judge_floor")) c.linking.judge_floor = l["judge_floor"].get<double>();
    }
    if (j.contains("query")) {
        const json& q = j["query"];
        require_keys(q, "query",
                     {"seed_k", "alpha", "ppr_tolerance", "ppr_max_iterations", "task_cutoff",
                      "k_rerank", "rerank_enabled", "cosine_weighted_seeds"});
        if (q.contains("seed_k")) c.query.seed_k = q["seed_k"].get<std::size_t>();
        if (q.contains("alpha")) c.query.alpha = q["alpha"].get<double>();
        if (q.contains("ppr_tolerance")) c.query.ppr_tolerance = q["ppr_tolerance"].get<double>();
        if (q.contains("ppr_max_iterations"))
            c.query.ppr_max_iterations = q["ppr_max_iterations"].get<std::size_t>();
        if (q.contains("task_cutoff")) c.query.task_cutoff = q["task_cutoff"].get<std::size_t>();
        if (q.contains("k_rerank")) c.query.k_rerank = q["k_rerank"].get<std::size_t>();
        if (q.contains("rerank_enabled")) c.query.rerank_enabled = q["rerank_enabled"].get<bool>();
        if (q.contains("cosine_weighted_seeds"))
            c.query.cosine_weighted_seeds = q["cosine_weighted_seeds"].get<bool>();
    }
    if (j.contains("extract")) {
        const json& e = j["extract"];
        require_keys(e, "extract", {"char_budget"});
        if (e.contains("char_budget")) c.extract.char_budget = e["char_budget"].get<std::size_t>();
    }
    return c;
}

SystemConfig SystemConfig::load(const std::string& config_path) {
    SystemConfig c;
    if (!config_path.empty()) c = from_json_string(read_file(config_path));
    c.apply_environment();
    return c;
}

void SystemConfig::apply_environment() {
    if (const char* v = env("TDS_CORPUS")) corpus = v;
    if (const char* v = env("TDS_STORE")) store = v;
    if (const char* v = env("TDS_CACHE")) cache = v;
    if (const char* v = env("TDS_ALIAS_SEED_FILE")) alias_seed_file = v;
    if (const char* v = env("TDS_EMBED_ENDPOINT")) embedding.endpoint = v;
    if (const char* v = env("TDS_EMBED_MODEL")) embedding.model = v;
    if (const char* v = env("TDS_EMBED_API_KEY")) embedding.api_key = v;
    if (const char* v = env("TDS_LLM_ENDPOINT")) llm.endpoint = v;
    if (const char* v = env("TDS_LLM_MODEL")) llm.model = v;
    if (const char* v = env("TDS_LLM_API_KEY")) llm.api_key = v;
}

void SystemConfig::validate() const {
    if (store.empty()) throw ConfigError("config: store path must not be empty");
    if (cache.empty()) throw ConfigError("config: cache path must not be empty");
    if (!(linking.theta_d > 0.0 && linking.theta_d < 1.0))
        throw ConfigError("config: linking.theta_d must lie in (0, 1)");
    if (!(linking.theta_k > 0.0 && linking.theta_k <= 1.0))
        throw ConfigError("config: linking.theta_k must lie in (0, 1]");
    if (linking.blocking_k < 1) throw ConfigError("config: linking.blocking_k must be >= 1");
    if (!(linking.judge_floor >= 0.0 && linking.judge_floor <= 1.0))
        throw ConfigError("config: linking.judge_floor must lie in [0, 1]");
    if (embedding.dim < 4) throw ConfigError("config: embedding.dim must be >= 4");
    try {
        query.validate();
    } catch (const Error& e) {
        throw ConfigError(std::string("config: query.") + e.what());
    }
    if (extract.char_budget < 1000)
        throw ConfigError("config: extract.char_budget must be >= 1000");
    if (!stub.embedder && embedding.endpoint.empty())
        throw ConfigError("config: live embedder requires embedding.endpoint");
    if ((!stub.extractor || !stub.judge || !stub.reranker) && llm.endpoint.empty())
        throw ConfigError("config: live model clients require llm.endpoint");
}

}  // namespace tds::sys
