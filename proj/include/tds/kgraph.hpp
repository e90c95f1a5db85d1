#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "tds/common.hpp"
#include "tds/embedding.hpp"
#include "tds/extract.hpp"
#include "tds/ingest.hpp"

namespace tds::kg {

struct UnknownNode : Error {
    using Error::Error;
};
struct DanglingRecord : Error {
    using Error::Error;
};
struct GraphInconsistent : Error {
    using Error::Error;
};

struct DocumentNode {
    std::string doc_id;  // "c:" + 16 hex
    std::string title;
    std::string source_path;
};

// One surface occurrence of a dataset inside one document. Mentions are the
// unit of resolution; their ids never change once created.
struct Mention {
    std::string mention_id;  // "m:" + 16 hex of (doc_id | surface_name)
    std::string doc_id;
    std::string surface_name;
    std::string description;   // may be empty
    std::string canonical_id;  // owning dataset node
};

struct DatasetNode {
    std::string canonical_id;  // "d:" + 16 hex
    std::string canonical_name;
    std::string description;
    std::set<std::string> aliases;
    std::set<std::string> member_mention_ids;
    bool externally_ingested = false;
    std::uint64_t seq = 0;  // creation order; survives save/load
};

struct TaskNode {
    std::string task_id;  // "t:" + 16 hex of (doc_id | description)
    std::string description;
    std::vector<std::string> keywords;  // sorted, deduped
    std::string source_doc_id;
};

struct EdgeCounts {
    std::size_t doc_dataset = 0;
    std::size_t dataset_task = 0;
    std::size_t task_task = 0;
};

struct KnowledgeGraph {
    std::map<std::string, DocumentNode> documents;
    std::map<std::string, DatasetNode> datasets;
    std::map<std::string, TaskNode> tasks;
    std::map<std::string, Mention> mentions;

    std::set<std::pair<std::string, std::string>> doc_dataset;   // (doc_id, canonical_id)
    std::set<std::pair<std::string, std::string>> dataset_task;  // (canonical_id, task_id)
    // Undirected, stored once with first < second; weight in (0, 1].
    std::map<std::pair<std::string, std::string>, double> task_task;

    std::uint64_t next_seq = 0;

    EdgeCounts edge_counts() const;
    double task_task_weight(const std::string& a, const std::string& b) const;  // 0 if absent
    void add_task_task_edge(const std::string& a, const std::string& b, double w);

    // Throws GraphInconsistent on any broken invariant.
    void validate() const;

    std::string to_json_string() const;
    static KnowledgeGraph from_json_string(const std::string& text);
    void save(const std::filesystem::path& path) const;  // graph.kats
    static KnowledgeGraph load(const std::filesystem::path& path);
};

// ---- id derivation ------------------------------------------------------------

std::string mention_id(const std::string& doc_id, const std::string& surface_name);
std::string task_id(const std::string& doc_id, const std::string& task_description);
// Initial (pre-resolution) dataset node id for a mention.
std::string dataset_id_for_mention(const std::string& mention_id_str);
std::string external_dataset_id(const std::string& name);

// ---- construction ---------------------------------------------------------------

// Jaccard overlap of two keyword sets; 0 when both are empty.
double keyword_overlap(const std::vector<std::string>& a, const std::vector<std::string>& b);

struct LinkingConfig {
    double theta_d = 0.80;    // cosine threshold for task-task edges
    double theta_k = 0.50;    // keyword-overlap threshold
    std::size_t blocking_k = 10;
    double judge_floor = 0.85;
};

// Adds one record's task node, mention, singleton dataset node, and edges.
// The document must already be present (DanglingRecord otherwise). Embeds
// nothing — vectors are appended by the caller.
struct AddedEntities {
    std::vector<std::string> new_task_ids;
    std::vector<std::string> new_mention_ids;
};
AddedEntities add_record(KnowledgeGraph& g, const extract::ExtractionRecord& record);

// Documents + records -> graph with singleton dataset nodes (no task links,
// no resolution). Record order does not affect the result.
KnowledgeGraph build_graph(const std::vector<ingest::NormalizedDocument>& docs,
                           const std::vector<extract::ExtractionRecord>& records);

// Creates task-task edges for every pair (scope x all) passing the cosine
// OR keyword-overlap test. Weight is always the cosine; pairs admitted only
// by keywords whose cosine is not positive are skipped (weights stay in
// (0, 1]). Pass nullptr scope to link all pairs.
void link_tasks(KnowledgeGraph& g, const embed::VectorIndex& task_index,
                const LinkingConfig& cfg,
                const std::vector<std::string>* scope_task_ids = nullptr);

// Repoints every mention, alias, and edge of `absorb` onto `keep`, then
// drops `absorb`. Canonical name/description are recomputed (longest alias,
// ties lexicographic; longest member description).
void merge_dataset_nodes(KnowledgeGraph& g, const std::string& keep_id,
                         const std::string& absorb_id);

// Adds an alias and re-picks the canonical name.
void add_dataset_alias(KnowledgeGraph& g, const std::string& canonical_id,
                       const std::string& alias);

}  // namespace tds::kg
