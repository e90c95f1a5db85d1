#include "tds/snapshot.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>

#include "nlohmann/json.hpp"
#include "tds/prompts.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace tds::sys {

namespace {
const char* kSnapshotFiles[] = {"graph.kats",        "index.task.vec",  "index.task.ids",
                                "index.dataset.vec", "index.dataset.ids", "resolution.json",
                                "extractions.jsonl", "manifest.json"};
}

void StoreSnapshot::validate_consistency() const {
    graph.validate();

    for (const auto& [tid, t] : graph.tasks)
        if (!task_index.contains(tid))
            throw SnapshotInconsistent("task " + tid + " missing from task index");
    for (const std::string& tid : task_index.ids())
        if (!graph.tasks.count(tid))
            throw SnapshotInconsistent("task index id " + tid + " missing from graph");

    for (const auto& [mid, m] : graph.mentions)
        if (!dataset_index.contains(mid))
            throw SnapshotInconsistent("mention " + mid + " missing from dataset index");
    for (const std::string& mid : dataset_index.ids())
        if (!graph.mentions.count(mid))
            throw SnapshotInconsistent("dataset index id " + mid + " missing from graph");

    for (const auto& [fp, entry] : manifest.entries())
        if (!graph.documents.count(entry.doc_id))
            throw SnapshotInconsistent("manifest doc " + entry.doc_id + " missing from graph");

    for (const auto& r : records)
        if (!graph.documents.count(r.source_doc_id))
            throw SnapshotInconsistent("extraction record references missing doc " +
                                       r.source_doc_id);
}

void StoreSnapshot::save(const fs::path& dir) {
    validate_consistency();

    fs::path staging = dir;
    staging += ".staging";
    fs::path old = dir;
    old += ".old";
    fs::remove_all(staging);
    fs::remove_all(old);
    fs::create_directories(staging);

    graph.save(staging / "graph.kats");
    task_index.save(staging);
    dataset_index.save(staging);
    resolution.save(staging / "resolution.json");
    extract::write_records_jsonl(staging / "extractions.jsonl", records);
    manifest.save(staging / "manifest.json");

    // Content-addressed snapshot id over every data file.
    std::string fold;
    for (const char* name : kSnapshotFiles) {
        fold += name;
        fold += '\0';
        fold += read_file((staging / name).string());
        fold += '\0';
    }
    snapshot_id = sha256_hex(fold).substr(0, 16);

    json meta{{"schema_version", 1},
              {"snapshot_id", snapshot_id},
              {"embedder", embedder_identity},
              {"extractor", extractor_identity},
              {"prompt_tag", llm::prompts::template_hash8()},
              {"counts",
               {{"documents", graph.documents.size()},
                {"datasets", graph.datasets.size()},
                {"tasks", graph.tasks.size()},
                {"mentions", graph.mentions.size()},
                {"doc_dataset_edges", graph.doc_dataset.size()},
                {"dataset_task_edges", graph.dataset_task.size()},
                {"task_task_edges", graph.task_task.size()}}}};
    write_file_atomic((staging / "meta.json").string(), meta.dump(2) + "\n");

    if (fs::exists(dir)) fs::rename(dir, old);
    fs::rename(staging, dir);
    fs::remove_all(old);
}

StoreSnapshot StoreSnapshot::load(const fs::path& dir) {
    if (!fs::is_directory(dir))
        throw Error("store not found (run build first): " + dir.string());

    StoreSnapshot s;
    s.graph = kg::KnowledgeGraph::load(dir / "graph.kats");
    s.task_index = embed::VectorIndex::load(dir, embed::IndexKind::task);
    s.dataset_index = embed::VectorIndex::load(dir, embed::IndexKind::dataset);
    s.resolution = kg::ResolutionState::load(dir / "resolution.json");
    s.manifest = ingest::Manifest::load(dir / "manifest.json");
    s.records = extract::read_records_jsonl(dir / "extractions.jsonl");

    json meta = json::parse(read_file((dir / "meta.json").string()));
    if (meta.value("schema_version", 0) != 1)
        throw Error("store meta: unsupported schema_version");
    s.snapshot_id = meta.value("snapshot_id", "");
    s.embedder_identity = meta.value("embedder", "");
    s.extractor_identity = meta.value("extractor", "");

    s.validate_consistency();
    return s;
}

// ---- lock ---------------------------------------------------------------------

StoreLock::StoreLock(const fs::path& store_dir) {
    lock_path_ = store_dir;
    lock_path_ += ".lock";
    if (lock_path_.has_parent_path()) fs::create_directories(lock_path_.parent_path());
    int fd = ::open(lock_path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0)
        throw Error("store is locked by another build/update (remove " + lock_path_.string() +
                    " if stale)");
    std::string pid = std::to_string(::getpid()) + "\n";
    [[maybe_unused]] ssize_t n = ::write(fd, pid.data(), pid.size());
    ::close(fd);
}

StoreLock::~StoreLock() {
    std::error_code ec;
    fs::remove(lock_path_, ec);
}

}  // namespace tds::sys
