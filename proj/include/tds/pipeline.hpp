#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "tds/config.hpp"
#include "tds/evalbench.hpp"
#include "tds/snapshot.hpp"

namespace tds::sys {

// One client per model role plus the embedder, wired from config. Stub
// roles share the same fixture rules; live roles talk to llm.endpoint.
struct Clients {
    std::unique_ptr<llm::ModelClient> extractor;
    std::unique_ptr<llm::ModelClient> judge;
    std::unique_ptr<llm::ModelClient> reranker;
    std::unique_ptr<embed::EmbeddingProvider> embedder;

    static Clients make(const SystemConfig& cfg);
    std::uint64_t model_tokens() const;
};

struct IntegrateStats {
    std::size_t documents_integrated = 0;  // entered graph + manifest
    std::size_t documents_filtered = 0;    // integrated with zero records
    std::size_t documents_skipped = 0;     // no valid records; retried next run
    std::size_t records_added = 0;
    std::size_t new_tasks = 0;
    std::size_t new_mentions = 0;
    std::size_t new_task_edges = 0;
    kg::ResolutionStats resolution;
};

// Extract -> graph insert -> embed -> link -> resolve for a batch of new
// documents. Documents that yield no valid records are skipped (and stay
// out of the manifest, so the next run retries them); a dead model backend
// aborts the whole batch.
IntegrateStats integrate_documents(StoreSnapshot& snap,
                                   const std::vector<ingest::NormalizedDocument>& docs,
                                   Clients& clients, const SystemConfig& cfg,
                                   const ingest::CacheStore& cache);

struct BuildStats {
    std::size_t corpus_documents = 0;  // distinct normalized docs found
    std::size_t new_documents = 0;     // absent from the manifest
    IntegrateStats integrate;
    std::size_t documents = 0;  // store totals after the run
    std::size_t datasets = 0;
    std::size_t tasks = 0;
    std::size_t mentions = 0;
    std::size_t task_task_edges = 0;
    std::uint64_t model_tokens = 0;
    std::string snapshot_id;

    std::string to_json_string() const;
};

// Fresh store from the configured corpus (an existing store directory is
// replaced on success).
BuildStats cmd_build(const SystemConfig& cfg);
// Incremental pass: only documents whose fingerprint is new to the manifest
// are processed. With nothing new the store round-trips byte-identically.
BuildStats cmd_update(const SystemConfig& cfg);

struct QueryOutput {
    query::RankedResult result;
    std::string json;
};
QueryOutput cmd_query(const SystemConfig& cfg, const std::string& query_text, std::size_t top_n,
                      bool explain);

// Runs the benchmark against the configured store; writes report.json and
// report.txt into out_dir when it is non-empty.
eval::EvalReport cmd_eval(const SystemConfig& cfg, const std::string& benchmark_path,
                          const std::string& out_dir);

struct StoreStats {
    std::string snapshot_id;
    std::string embedder_identity;
    std::string extractor_identity;
    std::size_t documents = 0;
    std::size_t datasets = 0;
    std::size_t external_datasets = 0;
    std::size_t tasks = 0;
    std::size_t mentions = 0;
    std::size_t doc_dataset_edges = 0;
    std::size_t dataset_task_edges = 0;
    std::size_t task_task_edges = 0;
    std::size_t task_index_size = 0;
    std::size_t dataset_index_size = 0;
    std::size_t extraction_records = 0;
    std::size_t manifest_entries = 0;
    std::size_t pending_judge_pairs = 0;

    std::string to_json_string() const;
};
StoreStats cmd_stats(const SystemConfig& cfg);

}  // namespace tds::sys
