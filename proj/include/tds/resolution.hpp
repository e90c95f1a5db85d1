#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "tds/kgraph.hpp"
#include "tds/model_client.hpp"
#include "tds/titlekey.hpp"

namespace tds::kg {

// Union-find plus the learned alias dictionary, judge verdict cache, and
// pairs deferred by judge unavailability. Persisted with the store so
// incremental updates keep merging consistently.
class ResolutionState {
public:
    // Elements are mention ids (and external dataset ids). find() on an
    // unseen element registers it as its own root.
    std::string find(const std::string& id);
    // Returns the surviving root (smaller id wins).
    std::string unite(const std::string& a, const std::string& b);
    bool same(const std::string& a, const std::string& b);

    // normalized title key -> canonical dataset id; rebuilt after each
    // resolution pass from the surviving clusters.
    std::map<std::string, std::string>& alias_dictionary() { return alias_dict_; }
    const std::map<std::string, std::string>& alias_dictionary() const { return alias_dict_; }

    // Alias seed groups: normalized member key -> normalized group key.
    // Keys mapping to the same group compare equal during resolution.
    void add_seed_group(const std::vector<std::string>& surface_names);
    std::string effective_key(const std::string& normalized_key) const;
    const std::map<std::string, std::string>& seed_aliases() const { return seed_aliases_; }

    // Order-independent verdict cache keyed by pair content.
    bool cached_verdict(const std::string& pair_key, bool* verdict) const;
    void remember_verdict(const std::string& pair_key, bool verdict);
    std::size_t verdict_cache_size() const { return judge_cache_.size(); }

    std::vector<std::pair<std::string, std::string>>& pending_pairs() { return pending_; }

    std::string to_json_string() const;
    static ResolutionState from_json_string(const std::string& text);
    void save(const std::filesystem::path& path) const;
    static ResolutionState load(const std::filesystem::path& path);  // missing -> empty

private:
    std::map<std::string, std::string> parent_;
    std::map<std::string, std::string> alias_dict_;
    std::map<std::string, std::string> seed_aliases_;
    std::map<std::string, bool> judge_cache_;
    std::vector<std::pair<std::string, std::string>> pending_;
};

// Loads a JSON array of alias groups (arrays of surface names).
void load_alias_seed_file(ResolutionState& state, const std::filesystem::path& path);

// Content-addressed, order-independent key for one mention pair as the judge
// sees it (normalized names + descriptions).
std::string judge_pair_key(const std::string& name_a, const std::string& desc_a,
                           const std::string& name_b, const std::string& desc_b);

struct ResolutionStats {
    std::size_t merges = 0;            // merge_dataset_nodes calls
    std::size_t dictionary_unions = 0; // stage 1: alias dictionary / seed hits
    std::size_t key_unions = 0;        // stage 2: normalized-key equality
    std::size_t judge_calls = 0;       // stage 3: live model calls this pass
    std::size_t cached_verdicts = 0;   // stage 3: cache hits
    std::size_t judge_unions = 0;
    std::size_t deferred_pairs = 0;    // judge unavailable
};

// Three stages over candidate pairs from vector blocking (top blocking_k
// neighbors per in-scope mention): (1) alias-dictionary / seed lookup,
// (2) normalized-title-key equality, (3) judge verdicts for pairs at or
// above judge_floor cosine, with cached verdicts reused. Afterwards the
// union-find collapses onto canonical dataset nodes (the seq-oldest node
// survives) and the alias dictionary is rebuilt.
// `scope_mention_ids` limits pair generation (incremental updates); nullptr
// means every mention.
ResolutionStats resolve_datasets(KnowledgeGraph& g, const embed::VectorIndex& dataset_index,
                                 ResolutionState& state, llm::ModelClient& judge,
                                 const LinkingConfig& cfg,
                                 const std::vector<std::string>* scope_mention_ids = nullptr);

// Registers an externally-supplied dataset. If its title key (or a seed
// alias) already maps to a canonical node, the name joins that node as an
// alias and the existing id is returned; otherwise a new node flagged
// externally_ingested is created. Idempotent for a given name.
std::string ingest_external_dataset(KnowledgeGraph& g, ResolutionState& state,
                                    const std::string& name, const std::string& description);

}  // namespace tds::kg
