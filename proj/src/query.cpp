#include "tds/query.hpp"

#include <algorithm>
#include <cmath>

#include "nlohmann/json.hpp"
#include "tds/prompts.hpp"

using nlohmann::json;

namespace tds::query {

void QueryConfig::validate() const {
    if (seed_k < 1) throw Error("seed_k must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error("alpha must lie in (0, 1)");
    if (!(ppr_tolerance > 0.0)) throw Error("ppr_tolerance must be positive");
    if (ppr_max_iterations < 1) throw Error("ppr_max_iterations must be >= 1");
    if (task_cutoff < 1) throw Error("task_cutoff must be >= 1");
}

// ---- graph view -----------------------------------------------------------------

GraphView::GraphView(const kg::KnowledgeGraph& g, const std::set<std::string>* masked_docs)
    : graph_(&g), masked_(masked_docs) {}

bool GraphView::doc_visible(const std::string& doc_id) const {
    return !masked_ || masked_->count(doc_id) == 0;
}

bool GraphView::task_visible(const std::string& task_id) const {
    auto it = graph_->tasks.find(task_id);
    if (it == graph_->tasks.end()) return false;
    return doc_visible(it->second.source_doc_id);
}

bool GraphView::dataset_visible(const std::string& canonical_id) const {
    auto it = graph_->datasets.find(canonical_id);
    if (it == graph_->datasets.end()) return false;
    const kg::DatasetNode& d = it->second;
    if (d.externally_ingested) return true;
    if (!masking()) return !d.member_mention_ids.empty();
    for (const auto& mid : d.member_mention_ids) {
        if (doc_visible(graph_->mentions.at(mid).doc_id)) return true;
    }
    return false;
}

// ---- seeds ----------------------------------------------------------------------

SeedSet identify_seeds(const std::string& query_text, embed::EmbeddingProvider& provider,
                       const embed::VectorIndex& task_index, std::size_t seed_k,
                       const GraphView& view) {
    if (task_index.size() == 0) throw EmptyIndex("task index is empty");
    embed::EmbeddingVector q = embed::embed_task_text(query_text, provider);

    std::function<bool(const std::string&)> accept;
    if (view.masking())
        accept = [&view](const std::string& id) { return view.task_visible(id); };

    SeedSet seeds;
    for (const auto& hit : task_index.search(q, seed_k, accept))
        seeds.entries.emplace_back(hit.id, hit.score);
    if (seeds.entries.empty()) throw EmptyIndex("no visible task to seed from");
    return seeds;
}

// ---- ppr ------------------------------------------------------------------------

PprGraph PprGraph::build(const GraphView& view) {
    PprGraph ppr;
    const kg::KnowledgeGraph& g = view.graph();
    for (const auto& [tid, t] : g.tasks) {
        if (view.task_visible(tid)) {
            ppr.index_[tid] = ppr.ids_.size();
            ppr.ids_.push_back(tid);
        }
    }

    const std::size_t n = ppr.ids_.size();
    std::vector<std::vector<std::pair<std::size_t, double>>> rows(n);
    for (const auto& [key, w] : g.task_task) {
        auto a = ppr.index_.find(key.first);
        auto b = ppr.index_.find(key.second);
        if (a == ppr.index_.end() || b == ppr.index_.end()) continue;
        rows[a->second].emplace_back(b->second, w);
        rows[b->second].emplace_back(a->second, w);
    }

    ppr.offsets_.reserve(n + 1);
    ppr.offsets_.push_back(0);
    ppr.dangling_.resize(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        double total = 0.0;
        for (const auto& [j, w] : rows[i]) total += w;
        if (total <= 0.0) {
            ppr.dangling_[i] = true;
        } else {
            std::sort(rows[i].begin(), rows[i].end());
            for (const auto& [j, w] : rows[i]) {
                ppr.neighbor_.push_back(j);
                ppr.weight_.push_back(w / total);
            }
        }
        ppr.offsets_.push_back(ppr.neighbor_.size());
    }
    return ppr;
}

TaskScores expand_ppr(const PprGraph& ppr, const SeedSet& seeds, const QueryConfig& cfg) {
    cfg.validate();
    TaskScores out;
    const std::size_t n = ppr.node_count();
    if (n == 0) return out;

    // Personalization vector.
    std::vector<double> v(n, 0.0);
    double total_mass = 0.0;
    for (const auto& [tid, cos] : seeds.entries) {
        auto it = ppr.index_.find(tid);
        if (it == ppr.index_.end()) continue;
        double mass = cfg.cosine_weighted_seeds ? std::max(cos, 0.0) : 1.0;
        v[it->second] += mass;
        total_mass += mass;
    }
    if (total_mass <= 0.0) {
        // Cosine-weighted seeds can all be non-positive; fall back to uniform.
        for (const auto& [tid, cos] : seeds.entries) {
            auto it = ppr.index_.find(tid);
            if (it == ppr.index_.end()) continue;
            v[it->second] += 1.0;
            total_mass += 1.0;
        }
    }
    if (total_mass <= 0.0) throw NoSeeds("no seed task is part of the graph");
    for (double& x : v) x /= total_mass;

    std::vector<double> p = v;
    std::vector<double> next(n, 0.0);
    out.converged = false;
    for (std::size_t iter = 0; iter < cfg.ppr_max_iterations; ++iter) {
        double dangling_mass = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (ppr.dangling_[i]) dangling_mass += p[i];

        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double pi = p[i];
            if (pi == 0.0) continue;
            for (std::size_t e = ppr.offsets_[i]; e < ppr.offsets_[i + 1]; ++e)
                next[ppr.neighbor_[e]] += pi * ppr.weight_[e];
        }
        double delta = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double x = cfg.alpha * (next[i] + dangling_mass * v[i]) + (1.0 - cfg.alpha) * v[i];
            delta += std::abs(x - p[i]);
            next[i] = x;
        }
        p.swap(next);
        out.iterations = iter + 1;
        if (delta < cfg.ppr_tolerance) {
            out.converged = true;
            break;
        }
    }

    for (std::size_t i = 0; i < n; ++i) out.scores[ppr.ids()[i]] = p[i];
    return out;
}

// ---- aggregation -----------------------------------------------------------------

RankedResult aggregate_datasets(const GraphView& view, const TaskScores& scores,
                                const QueryConfig& cfg) {
    // Top task_cutoff tasks by score (ties by id) are the considered set.
    std::vector<std::pair<std::string, double>> ranked_tasks(scores.scores.begin(),
                                                             scores.scores.end());
    std::sort(ranked_tasks.begin(), ranked_tasks.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (ranked_tasks.size() > cfg.task_cutoff) ranked_tasks.resize(cfg.task_cutoff);
    std::map<std::string, double> considered(ranked_tasks.begin(), ranked_tasks.end());

    const kg::KnowledgeGraph& g = view.graph();
    std::map<std::string, ResultEntry> by_dataset;
    for (const auto& [did, tid] : g.dataset_task) {
        auto t = considered.find(tid);
        if (t == considered.end()) continue;
        if (!view.dataset_visible(did)) continue;
        ResultEntry& entry = by_dataset[did];
        if (entry.canonical_id.empty()) {
            const kg::DatasetNode& d = g.datasets.at(did);
            entry.canonical_id = did;
            entry.canonical_name = d.canonical_name;
        }
        entry.supporting_tasks.emplace_back(tid, t->second);
        entry.score = std::max(entry.score, t->second);
    }

    RankedResult result;
    result.ppr_converged = scores.converged;
    for (auto& [did, entry] : by_dataset) {
        std::sort(entry.supporting_tasks.begin(), entry.supporting_tasks.end(),
                  [](const auto& a, const auto& b) {
                      if (a.second != b.second) return a.second > b.second;
                      return a.first < b.first;
                  });
        for (const auto& [doc, d2] : g.doc_dataset) {
            if (d2 == did && view.doc_visible(doc)) entry.source_documents.push_back(doc);
        }
        result.entries.push_back(std::move(entry));
    }
    std::sort(result.entries.begin(), result.entries.end(),
              [](const ResultEntry& a, const ResultEntry& b) {
                  if (a.score != b.score) return a.score > b.score;
                  if (a.canonical_name != b.canonical_name)
                      return a.canonical_name < b.canonical_name;
                  return a.canonical_id < b.canonical_id;
              });
    return result;
}

// ---- rerank -----------------------------------------------------------------------

void rerank_head(RankedResult& result, const std::string& query_text, llm::ModelClient& client,
                 std::size_t k_rerank, const kg::KnowledgeGraph& g) {
    std::size_t head_len = std::min(k_rerank, result.entries.size());
    if (head_len < 2) return;

    std::vector<llm::prompts::RerankCandidate> head;
    std::set<std::string> head_ids;
    for (std::size_t i = 0; i < head_len; ++i) {
        const ResultEntry& e = result.entries[i];
        auto node = g.datasets.find(e.canonical_id);
        head.push_back({e.canonical_id, e.canonical_name,
                        node == g.datasets.end() ? "" : node->second.description});
        head_ids.insert(e.canonical_id);
    }
    std::string prompt = llm::prompts::rerank_prompt(query_text, head);

    auto try_parse = [&](const std::string& reply) -> std::optional<std::vector<std::string>> {
        json arr = json::parse(reply, nullptr, false);
        if (!arr.is_array() || arr.size() != head_len) return std::nullopt;
        std::vector<std::string> order;
        std::set<std::string> seen;
        for (const auto& x : arr) {
            if (!x.is_string()) return std::nullopt;
            std::string id = x.get<std::string>();
            if (!head_ids.count(id) || !seen.insert(id).second) return std::nullopt;
            order.push_back(id);
        }
        return order;
    };

    std::optional<std::vector<std::string>> order;
    for (int attempt = 0; attempt < 2 && !order; ++attempt) {
        std::string reply;
        try {
            reply = client.complete(prompt, llm::ResponseContract::rerank_list);
        } catch (const llm::ModelUnavailable& e) {
            warnings::emit(std::string("reranker unavailable, keeping graph order: ") + e.what());
            result.rerank_fallback = true;
            return;
        }
        order = try_parse(reply);
    }
    if (!order) {
        warnings::emit("rerank reply is not a valid permutation, keeping graph order");
        result.rerank_fallback = true;
        return;
    }

    std::map<std::string, ResultEntry> pool;
    for (std::size_t i = 0; i < head_len; ++i)
        pool.emplace(result.entries[i].canonical_id, std::move(result.entries[i]));
    for (std::size_t i = 0; i < head_len; ++i)
        result.entries[i] = std::move(pool.at((*order)[i]));
    result.rerank_applied = true;
}

// ---- engine -----------------------------------------------------------------------

Engine::Engine(const kg::KnowledgeGraph& graph, const embed::VectorIndex& task_index,
               embed::EmbeddingProvider& provider, llm::ModelClient* reranker, QueryConfig cfg)
    : graph_(&graph),
      task_index_(&task_index),
      provider_(&provider),
      reranker_(reranker),
      cfg_(std::move(cfg)) {
    cfg_.validate();
    full_ppr_ = PprGraph::build(GraphView(graph));
}

RankedResult Engine::search(const std::string& query_text,
                            const std::set<std::string>* masked_docs) const {
    GraphView view(*graph_, masked_docs);
    SeedSet seeds = identify_seeds(query_text, *provider_, *task_index_, cfg_.seed_k, view);

    TaskScores scores;
    if (view.masking()) {
        PprGraph masked = PprGraph::build(view);
        scores = expand_ppr(masked, seeds, cfg_);
    } else {
        scores = expand_ppr(full_ppr_, seeds, cfg_);
    }

    RankedResult result = aggregate_datasets(view, scores, cfg_);
    result.seeds = seeds;
    if (cfg_.rerank_enabled && reranker_)
        rerank_head(result, query_text, *reranker_, cfg_.k_rerank, *graph_);
    return result;
}

// ---- serialization -------------------------------------------------------------------

std::string result_to_json_string(const RankedResult& result, const std::string& query_text,
                                  std::size_t top_n, bool explain) {
    json j;
    j["query"] = query_text;
    j["ppr_converged"] = result.ppr_converged;
    j["rerank_applied"] = result.rerank_applied;
    if (result.rerank_fallback) j["rerank_fallback"] = true;

    json seeds = json::array();
    for (const auto& [tid, cos] : result.seeds.entries)
        seeds.push_back({{"task_id", tid}, {"cosine", cos}});
    j["seeds"] = std::move(seeds);

    json entries = json::array();
    std::size_t limit = top_n == 0 ? result.entries.size() : std::min(top_n, result.entries.size());
    for (std::size_t i = 0; i < limit; ++i) {
        const ResultEntry& e = result.entries[i];
        json row{{"rank", i + 1},
                 {"canonical_id", e.canonical_id},
                 {"canonical_name", e.canonical_name},
                 {"score", e.score}};
        if (explain) {
            json support = json::array();
            for (const auto& [tid, s] : e.supporting_tasks)
                support.push_back({{"task_id", tid}, {"score", s}});
            row["supporting_tasks"] = std::move(support);
            row["source_documents"] = e.source_documents;
        }
        entries.push_back(std::move(row));
    }
    j["results"] = std::move(entries);
    return j.dump(2) + "\n";
}

}  // namespace tds::query
