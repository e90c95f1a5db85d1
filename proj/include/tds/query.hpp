#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "tds/embedding.hpp"
#include "tds/kgraph.hpp"
#include "tds/model_client.hpp"

namespace tds::query {

struct EmptyIndex : Error {
    using Error::Error;
};
struct NoSeeds : Error {
    using Error::Error;
};

struct QueryConfig {
    std::size_t seed_k = 2;
    double alpha = 0.85;
    double ppr_tolerance = 1e-8;
    std::size_t ppr_max_iterations = 100;
    std::size_t task_cutoff = 200;
    std::size_t k_rerank = 10;
    bool rerank_enabled = false;
    // Personalization mass per seed: uniform by default; optionally
    // proportional to the seed's cosine similarity.
    bool cosine_weighted_seeds = false;

    void validate() const;
};

// Read-only lens over the graph with a set of documents masked out (used by
// the benchmark harness to hide each query's source documents). A task is
// visible iff its source document is; a dataset is visible iff any mention
// from a visible document remains, or it was externally ingested.
class GraphView {
public:
    GraphView(const kg::KnowledgeGraph& g, const std::set<std::string>* masked_docs = nullptr);

    const kg::KnowledgeGraph& graph() const { return *graph_; }
    bool masking() const { return masked_ && !masked_->empty(); }
    bool doc_visible(const std::string& doc_id) const;
    bool task_visible(const std::string& task_id) const;
    bool dataset_visible(const std::string& canonical_id) const;

private:
    const kg::KnowledgeGraph* graph_;
    const std::set<std::string>* masked_;
};

struct SeedSet {
    // (task_id, cosine to the query), best first.
    std::vector<std::pair<std::string, double>> entries;
};

// Top seed_k visible tasks by embedding similarity. Throws EmptyIndex when
// no visible task exists.
SeedSet identify_seeds(const std::string& query_text, embed::EmbeddingProvider& provider,
                       const embed::VectorIndex& task_index, std::size_t seed_k,
                       const GraphView& view);

struct TaskScores {
    std::map<std::string, double> scores;  // every visible task, sums to 1
    bool converged = true;
    std::size_t iterations = 0;
};

// Row-normalized adjacency of the visible task-task graph in CSR form.
// Building it once per snapshot keeps unmasked queries fast.
class PprGraph {
public:
    static PprGraph build(const GraphView& view);

    std::size_t node_count() const { return ids_.size(); }
    const std::vector<std::string>& ids() const { return ids_; }
    bool has(const std::string& task_id) const { return index_.count(task_id) > 0; }

    friend TaskScores expand_ppr(const PprGraph&, const SeedSet&, const QueryConfig&);

private:
    std::vector<std::string> ids_;  // sorted
    std::map<std::string, std::size_t> index_;
    std::vector<std::size_t> offsets_;   // ids_.size() + 1
    std::vector<std::size_t> neighbor_;
    std::vector<double> weight_;         // row-normalized
    std::vector<bool> dangling_;
};

// Personalized PageRank: p <- alpha * M^T p + (1 - alpha) * v, personalization
// v over the seeds, dangling mass redistributed to v. Stops when the L1 step
// delta drops below ppr_tolerance, else flags converged=false after
// ppr_max_iterations and returns the last iterate.
TaskScores expand_ppr(const PprGraph& ppr, const SeedSet& seeds, const QueryConfig& cfg);

struct ResultEntry {
    std::string canonical_id;
    std::string canonical_name;
    double score = 0.0;  // max over linked considered tasks
    std::vector<std::pair<std::string, double>> supporting_tasks;
    std::vector<std::string> source_documents;
};

struct RankedResult {
    std::vector<ResultEntry> entries;
    SeedSet seeds;
    bool ppr_converged = true;
    bool rerank_applied = false;
    bool rerank_fallback = false;  // model reply unusable, graph order kept
};

// Max-aggregation over the top task_cutoff tasks. Entries are sorted by
// score descending, ties by canonical_name then canonical_id ascending.
RankedResult aggregate_datasets(const GraphView& view, const TaskScores& scores,
                                const QueryConfig& cfg);

// Permutes the top min(k_rerank, size) entries according to the model's
// ordering. An invalid permutation (after one retry) or an unavailable model
// keeps graph order and sets rerank_fallback. Never changes the entry set.
void rerank_head(RankedResult& result, const std::string& query_text, llm::ModelClient& client,
                 std::size_t k_rerank, const kg::KnowledgeGraph& g);

// Snapshot-scoped query façade: seeds -> PPR -> aggregation -> optional
// rerank. Unmasked queries reuse a prebuilt PprGraph; masked ones rebuild.
class Engine {
public:
    Engine(const kg::KnowledgeGraph& graph, const embed::VectorIndex& task_index,
           embed::EmbeddingProvider& provider, llm::ModelClient* reranker, QueryConfig cfg);

    RankedResult search(const std::string& query_text,
                        const std::set<std::string>* masked_docs = nullptr) const;
    const QueryConfig& config() const { return cfg_; }

private:
    const kg::KnowledgeGraph* graph_;
    const embed::VectorIndex* task_index_;
    embed::EmbeddingProvider* provider_;
    llm::ModelClient* reranker_;
    QueryConfig cfg_;
    PprGraph full_ppr_;
};

std::string result_to_json_string(const RankedResult& result, const std::string& query_text,
                                  std::size_t top_n, bool explain);

}  // namespace tds::query
