#include "tds/resolution.hpp"

#include <algorithm>

#include "nlohmann/json.hpp"
#include "tds/prompts.hpp"

using nlohmann::json;

namespace tds::kg {

// ---- union-find ---------------------------------------------------------------

std::string ResolutionState::find(const std::string& id) {
    auto it = parent_.find(id);
    if (it == parent_.end()) {
        parent_[id] = id;
        return id;
    }
    // Walk up, then compress.
    std::string root = id;
    while (parent_.at(root) != root) root = parent_.at(root);
    std::string cur = id;
    while (parent_.at(cur) != root) {
        std::string next = parent_.at(cur);
        parent_[cur] = root;
        cur = next;
    }
    return root;
}

std::string ResolutionState::unite(const std::string& a, const std::string& b) {
    std::string ra = find(a), rb = find(b);
    if (ra == rb) return ra;
    if (rb < ra) std::swap(ra, rb);
    parent_[rb] = ra;
    return ra;
}

bool ResolutionState::same(const std::string& a, const std::string& b) {
    return find(a) == find(b);
}

// ---- seed aliases ----------------------------------------------------------------

void ResolutionState::add_seed_group(const std::vector<std::string>& surface_names) {
    std::string group_key;
    std::vector<std::string> member_keys;
    for (const std::string& name : surface_names) {
        for (const std::string& k : normalize_title(name).all_keys()) {
            if (group_key.empty()) group_key = k;
            member_keys.push_back(k);
        }
    }
    if (group_key.empty()) return;
    for (const std::string& k : member_keys) {
        auto it = seed_aliases_.find(k);
        if (it != seed_aliases_.end() && it->second != group_key) {
            warnings::emit("alias seed key '" + k + "' already grouped, keeping first group");
            continue;
        }
        seed_aliases_[k] = group_key;
    }
}

std::string ResolutionState::effective_key(const std::string& normalized_key) const {
    auto it = seed_aliases_.find(normalized_key);
    return it == seed_aliases_.end() ? normalized_key : it->second;
}

void load_alias_seed_file(ResolutionState& state, const std::filesystem::path& path) {
    json j = json::parse(read_file(path.string()));
    if (!j.is_array()) throw Error("alias seed file: top level must be an array of groups");
    for (const auto& group : j) {
        if (!group.is_array()) throw Error("alias seed file: each group must be an array");
        std::vector<std::string> names;
        for (const auto& n : group) names.push_back(n.get<std::string>());
        state.add_seed_group(names);
    }
}

// ---- verdict cache ----------------------------------------------------------------

bool ResolutionState::cached_verdict(const std::string& pair_key, bool* verdict) const {
    auto it = judge_cache_.find(pair_key);
    if (it == judge_cache_.end()) return false;
    *verdict = it->second;
    return true;
}

void ResolutionState::remember_verdict(const std::string& pair_key, bool verdict) {
    judge_cache_[pair_key] = verdict;
}

std::string judge_pair_key(const std::string& name_a, const std::string& desc_a,
                           const std::string& name_b, const std::string& desc_b) {
    std::string side_a = normalize_title(name_a).key + "\x1f" + desc_a;
    std::string side_b = normalize_title(name_b).key + "\x1f" + desc_b;
    if (side_b < side_a) std::swap(side_a, side_b);
    return sha256_hex(side_a + "\x1e" + side_b).substr(0, 16);
}

// ---- persistence ------------------------------------------------------------------

std::string ResolutionState::to_json_string() const {
    json j{{"schema_version", 1},
           {"parent", parent_},
           {"alias_dictionary", alias_dict_},
           {"seed_aliases", seed_aliases_},
           {"judge_cache", judge_cache_}};
    json pending = json::array();
    for (const auto& [a, b] : pending_) pending.push_back({a, b});
    j["pending_pairs"] = std::move(pending);
    return j.dump(2) + "\n";
}

ResolutionState ResolutionState::from_json_string(const std::string& text) {
    json j = json::parse(text);
    if (!j.is_object() || j.value("schema_version", 0) != 1)
        throw Error("resolution state: unsupported schema");
    ResolutionState s;
    s.parent_ = j.at("parent").get<std::map<std::string, std::string>>();
    s.alias_dict_ = j.at("alias_dictionary").get<std::map<std::string, std::string>>();
    s.seed_aliases_ = j.at("seed_aliases").get<std::map<std::string, std::string>>();
    s.judge_cache_ = j.at("judge_cache").get<std::map<std::string, bool>>();
    for (const auto& p : j.at("pending_pairs"))
        s.pending_.emplace_back(p.at(0).get<std::string>(), p.at(1).get<std::string>());
    return s;
}

void ResolutionState::save(const std::filesystem::path& path) const {
    write_file_atomic(path.string(), to_json_string());
}

ResolutionState ResolutionState::load(const std::filesystem::path& path) {
    auto text = read_file_if_exists(path.string());
    if (!text) return ResolutionState{};
    return from_json_string(*text);
}

// ---- resolution pass ----------------------------------------------------------------

namespace {

std::vector<std::string> mention_keys(const ResolutionState& state, const Mention& m) {
    std::vector<std::string> keys;
    for (const std::string& k : normalize_title(m.surface_name).all_keys()) {
        std::string ek = state.effective_key(k);
        if (std::find(keys.begin(), keys.end(), ek) == keys.end()) keys.push_back(ek);
    }
    return keys;
}

// A union target for a canonical node: any member mention, or the node id
// itself for externally-ingested nodes (which have no mentions).
std::string union_anchor(const KnowledgeGraph& g, const std::string& canonical_id) {
    const DatasetNode& d = g.datasets.at(canonical_id);
    if (!d.member_mention_ids.empty()) return *d.member_mention_ids.begin();
    return canonical_id;
}

bool parse_verdict(const std::string& reply, bool* out) {
    std::string v = ascii_lower(trim(reply));
    if (v == "same" || v == "yes") {
        *out = true;
        return true;
    }
    if (v == "different" || v == "no") {
        *out = false;
        return true;
    }
    return false;
}

}  // namespace

ResolutionStats resolve_datasets(KnowledgeGraph& g, const embed::VectorIndex& dataset_index,
                                 ResolutionState& state, llm::ModelClient& judge,
                                 const LinkingConfig& cfg,
                                 const std::vector<std::string>* scope_mention_ids) {
    ResolutionStats stats;

    // Sync the union-find with what the graph already holds, so resolution
    // is correct even against a freshly constructed state.
    for (const auto& [cid, d] : g.datasets) {
        if (d.member_mention_ids.empty()) {
            state.find(cid);
            continue;
        }
        const std::string& anchor = *d.member_mention_ids.begin();
        for (const auto& mid : d.member_mention_ids)
            if (mid != anchor) state.unite(anchor, mid);
    }

    std::vector<std::string> scope;
    if (scope_mention_ids) {
        scope = *scope_mention_ids;
        std::sort(scope.begin(), scope.end());
        scope.erase(std::unique(scope.begin(), scope.end()), scope.end());
        for (const auto& mid : scope)
            if (!g.mentions.count(mid)) throw UnknownNode("resolve: unknown mention " + mid);
    } else {
        for (const auto& [mid, m] : g.mentions) scope.push_back(mid);
    }

    // Stage 1: alias dictionary (and seed groups) — no pair needed.
    for (const std::string& mid : scope) {
        const Mention& m = g.mentions.at(mid);
        for (const std::string& key : mention_keys(state, m)) {
            auto hit = state.alias_dictionary().find(key);
            if (hit == state.alias_dictionary().end()) continue;
            if (!g.datasets.count(hit->second)) {
                warnings::emit("alias dictionary points at missing node " + hit->second);
                continue;
            }
            std::string anchor = union_anchor(g, hit->second);
            if (!state.same(mid, anchor)) {
                state.unite(mid, anchor);
                ++stats.dictionary_unions;
            }
        }
    }

    // Vector blocking: candidate pairs among mentions.
    std::map<std::pair<std::string, std::string>, double> candidates;
    for (const std::string& mid : scope) {
        if (!dataset_index.contains(mid)) continue;
        embed::EmbeddingVector v = dataset_index.vector_of(mid);
        for (const auto& hit : dataset_index.search(v, cfg.blocking_k + 1)) {
            if (hit.id == mid) continue;
            auto key = mid < hit.id ? std::make_pair(mid, hit.id) : std::make_pair(hit.id, mid);
            auto [it, inserted] = candidates.emplace(key, hit.score);
            if (!inserted && hit.score > it->second) it->second = hit.score;
        }
    }

    // Stage 2: normalized-title-key equality.
    for (const auto& [pair, cos] : candidates) {
        (void)cos;
        if (state.same(pair.first, pair.second)) continue;
        std::vector<std::string> ka = mention_keys(state, g.mentions.at(pair.first));
        std::vector<std::string> kb = mention_keys(state, g.mentions.at(pair.second));
        bool equal = false;
        for (const auto& k : ka)
            if (!k.empty() && std::find(kb.begin(), kb.end(), k) != kb.end()) equal = true;
        if (equal) {
            state.unite(pair.first, pair.second);
            ++stats.key_unions;
        }
    }

    // Stage 3: judge verdicts, deferred pairs first.
    auto judge_pair = [&](const std::string& a, const std::string& b, double cos) -> bool {
        // Returns false only when the judge was unavailable (pair stays pending).
        if (state.same(a, b)) return true;
        if (cos < cfg.judge_floor) return true;  // presumed distinct
        const Mention& ma = g.mentions.at(a);
        const Mention& mb = g.mentions.at(b);
        std::string cache_key =
            judge_pair_key(ma.surface_name, ma.description, mb.surface_name, mb.description);
        bool verdict = false;
        if (state.cached_verdict(cache_key, &verdict)) {
            ++stats.cached_verdicts;
        } else {
            std::string prompt = llm::prompts::judge_prompt(
                ma.surface_name, ma.description, mb.surface_name, mb.description,
                title_pair_line(ma.surface_name, mb.surface_name));
            bool parsed = false;
            for (int attempt = 0; attempt < 2 && !parsed; ++attempt) {
                std::string reply;
                try {
                    reply = judge.complete(prompt, llm::ResponseContract::verdict);
                } catch (const llm::ModelUnavailable& e) {
                    warnings::emit(std::string("judge unavailable, deferring pair: ") + e.what());
                    ++stats.deferred_pairs;
                    return false;
                }
                ++stats.judge_calls;
                parsed = parse_verdict(reply, &verdict);
            }
            if (!parsed) {
                warnings::emit("judge reply unparseable twice, keeping pair distinct: " + a +
                               " / " + b);
                verdict = false;  // conservative; not cached
            } else {
                state.remember_verdict(cache_key, verdict);
            }
        }
        if (verdict) {
            state.unite(a, b);
            ++stats.judge_unions;
        }
        return true;
    };

    std::vector<std::pair<std::string, std::string>> still_pending;
    std::vector<std::pair<std::string, std::string>> retry = std::move(state.pending_pairs());
    state.pending_pairs().clear();
    for (const auto& [a, b] : retry) {
        if (!g.mentions.count(a) || !g.mentions.count(b)) continue;
        double cos = 0.0;
        if (dataset_index.contains(a) && dataset_index.contains(b))
            cos = embed::cosine(dataset_index.vector_of(a), dataset_index.vector_of(b));
        if (!judge_pair(a, b, cos)) still_pending.emplace_back(a, b);
    }
    for (const auto& [pair, cos] : candidates) {
        if (!judge_pair(pair.first, pair.second, cos)) still_pending.push_back(pair);
    }
    std::sort(still_pending.begin(), still_pending.end());
    still_pending.erase(std::unique(still_pending.begin(), still_pending.end()),
                        still_pending.end());
    state.pending_pairs() = std::move(still_pending);

    // Collapse clusters onto canonical nodes: the seq-oldest node survives.
    std::map<std::string, std::set<std::pair<std::uint64_t, std::string>>> clusters;
    for (const auto& [mid, m] : g.mentions) {
        const DatasetNode& d = g.datasets.at(m.canonical_id);
        clusters[state.find(mid)].insert({d.seq, d.canonical_id});
    }
    for (const auto& [cid, d] : g.datasets) {
        if (d.member_mention_ids.empty())
            clusters[state.find(cid)].insert({d.seq, cid});
    }
    for (const auto& [root, members] : clusters) {
        if (members.size() < 2) continue;
        const std::string& keep = members.begin()->second;
        for (auto it = std::next(members.begin()); it != members.end(); ++it) {
            merge_dataset_nodes(g, keep, it->second);
            ++stats.merges;
        }
    }

    // Rebuild the alias dictionary from the surviving clusters.
    state.alias_dictionary().clear();
    for (const auto& [cid, d] : g.datasets) {
        for (const std::string& alias : d.aliases) {
            for (const std::string& k : normalize_title(alias).all_keys()) {
                std::string ek = state.effective_key(k);
                state.alias_dictionary().emplace(ek, cid);  // first (smallest id) wins
            }
        }
    }
    return stats;
}

// ---- external ingest ------------------------------------------------------------------

std::string ingest_external_dataset(KnowledgeGraph& g, ResolutionState& state,
                                    const std::string& name, const std::string& description) {
    std::string clean_name = collapse_ws(name);
    std::string clean_desc = collapse_ws(description);
    if (clean_name.empty()) throw Error("external dataset: empty name");

    std::vector<std::string> keys;
    for (const std::string& k : normalize_title(clean_name).all_keys())
        keys.push_back(state.effective_key(k));

    for (const std::string& key : keys) {
        auto hit = state.alias_dictionary().find(key);
        if (hit == state.alias_dictionary().end() || !g.datasets.count(hit->second)) continue;
        const std::string& cid = hit->second;
        add_dataset_alias(g, cid, clean_name);
        DatasetNode& d = g.datasets.at(cid);
        if (d.description.empty() && !clean_desc.empty()) d.description = clean_desc;
        for (const std::string& key2 : keys) state.alias_dictionary().emplace(key2, cid);
        return cid;
    }

    std::string cid = external_dataset_id(clean_name);
    auto it = g.datasets.find(cid);
    if (it != g.datasets.end()) {
        if (it->second.description.size() < clean_desc.size())
            it->second.description = clean_desc;
        return cid;
    }
    DatasetNode node;
    node.canonical_id = cid;
    node.canonical_name = clean_name;
    node.description = clean_desc;
    node.aliases.insert(clean_name);
    node.externally_ingested = true;
    node.seq = g.next_seq++;
    g.datasets.emplace(cid, std::move(node));
    state.find(cid);
    for (const std::string& key : keys) state.alias_dictionary().emplace(key, cid);
    return cid;
}

}  // namespace tds::kg
