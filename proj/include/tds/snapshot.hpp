#pragma once

#include <filesystem>

#include "tds/embedding.hpp"
#include "tds/extract.hpp"
#include "tds/ingest.hpp"
#include "tds/kgraph.hpp"
#include "tds/resolution.hpp"

namespace tds::sys {

struct SnapshotInconsistent : Error {
    using Error::Error;
};

// Everything one store directory holds:
//   graph.kats            versioned knowledge graph
//   index.task.{vec,ids}  task embedding index
//   index.dataset.{vec,ids}  mention embedding index
//   resolution.json       union-find, alias dictionary, verdict cache
//   extractions.jsonl     accumulated extraction records
//   manifest.json         fingerprint -> document record
//   meta.json             snapshot id, component identities, counts
struct StoreSnapshot {
    kg::KnowledgeGraph graph;
    embed::VectorIndex task_index{embed::IndexKind::task};
    embed::VectorIndex dataset_index{embed::IndexKind::dataset};
    kg::ResolutionState resolution;
    ingest::Manifest manifest;
    std::vector<extract::ExtractionRecord> records;

    std::string embedder_identity;
    std::string extractor_identity;
    std::string snapshot_id;  // filled by save(), read back by load()

    // Writes into "<dir>.staging" and atomically swaps it in, so a crashed
    // run can never leave a half-written store behind. The manifest is the
    // last file written inside the staging area.
    void save(const std::filesystem::path& dir);
    static StoreSnapshot load(const std::filesystem::path& dir);

    // Cross-file invariants: index/graph id bijections, manifest docs exist.
    void validate_consistency() const;
};

// Exclusive advisory lock (a .lock file next to the store). Held for the
// whole of build/update.
class StoreLock {
public:
    explicit StoreLock(const std::filesystem::path& store_dir);
    ~StoreLock();
    StoreLock(const StoreLock&) = delete;
    StoreLock& operator=(const StoreLock&) = delete;

private:
    std::filesystem::path lock_path_;
};

}  // namespace tds::sys
