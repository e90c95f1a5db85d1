#include "tds/pipeline.hpp"

#include <filesystem>

#include "nlohmann/json.hpp"
#include "tds/prompts.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace tds::sys {

// ---- clients ------------------------------------------------------------------

Clients Clients::make(const SystemConfig& cfg) {
    Clients c;
    llm::StubRules rules;
    if (!cfg.stub.fixtures.empty()) rules = llm::StubRules::load(cfg.stub.fixtures);

    auto stub = [&]() { return std::make_unique<llm::StubModelClient>(rules); };
    auto live = [&]() {
        return std::make_unique<llm::HttpModelClient>(cfg.llm.endpoint, cfg.llm.model,
                                                      cfg.llm.api_key, cfg.llm.timeout_seconds);
    };
    c.extractor = cfg.stub.extractor ? std::unique_ptr<llm::ModelClient>(stub())
                                     : std::unique_ptr<llm::ModelClient>(live());
    c.judge = cfg.stub.judge ? std::unique_ptr<llm::ModelClient>(stub())
                             : std::unique_ptr<llm::ModelClient>(live());
    c.reranker = cfg.stub.reranker ? std::unique_ptr<llm::ModelClient>(stub())
                                   : std::unique_ptr<llm::ModelClient>(live());
    if (cfg.stub.embedder)
        c.embedder = std::make_unique<embed::StubEmbedder>(cfg.stub.seed, cfg.embedding.dim);
    else
        c.embedder = std::make_unique<embed::HttpEmbeddingProvider>(
            cfg.embedding.endpoint, cfg.embedding.model, cfg.embedding.api_key,
            cfg.embedding.dim, cfg.llm.timeout_seconds);
    return c;
}

std::uint64_t Clients::model_tokens() const {
    return extractor->counts().token_estimate + judge->counts().token_estimate +
           reranker->counts().token_estimate;
}

// ---- integration ----------------------------------------------------------------

IntegrateStats integrate_documents(StoreSnapshot& snap,
                                   const std::vector<ingest::NormalizedDocument>& docs,
                                   Clients& clients, const SystemConfig& cfg,
                                   const ingest::CacheStore& cache) {
    IntegrateStats st;
    std::vector<std::string> new_task_ids;
    std::vector<std::string> new_mention_ids;
    std::set<std::string> seen_tasks, seen_mentions;

    for (const auto& doc : docs) {
        if (snap.manifest.contains(doc.fp)) continue;

        std::vector<extract::ExtractionRecord> records;
        try {
            records = extract::extract_pipeline(doc, *clients.extractor, &cache, cfg.extract);
        } catch (const extract::NoValidRecords&) {
            warnings::emit("no valid extraction records, skipping document: " + doc.doc_id +
                           " (" + doc.source_path + ")");
            ++st.documents_skipped;
            continue;
        }

        snap.graph.documents[doc.doc_id] =
            kg::DocumentNode{doc.doc_id, doc.title, doc.source_path};
        for (const auto& r : records) {
            kg::AddedEntities added = kg::add_record(snap.graph, r);
            for (const auto& t : added.new_task_ids)
                if (seen_tasks.insert(t).second) new_task_ids.push_back(t);
            for (const auto& m : added.new_mention_ids)
                if (seen_mentions.insert(m).second) new_mention_ids.push_back(m);
            snap.records.push_back(r);
            ++st.records_added;
        }
        if (records.empty()) ++st.documents_filtered;
        snap.manifest.add(doc.fp,
                          ingest::ManifestEntry{doc.doc_id, doc.source_path, cfg.timestamp()});
        ++st.documents_integrated;
    }
    st.new_tasks = new_task_ids.size();
    st.new_mentions = new_mention_ids.size();

    if (new_task_ids.empty() && new_mention_ids.empty() &&
        snap.resolution.pending_pairs().empty())
        return st;

    for (const auto& tid : new_task_ids)
        snap.task_index.append(
            tid, embed::embed_task_text(snap.graph.tasks.at(tid).description, *clients.embedder));
    for (const auto& mid : new_mention_ids) {
        const kg::Mention& m = snap.graph.mentions.at(mid);
        snap.dataset_index.append(
            mid, embed::embed_dataset_text(m.surface_name, m.description, *clients.embedder));
    }

    std::size_t edges_before = snap.graph.task_task.size();
    if (!new_task_ids.empty())
        kg::link_tasks(snap.graph, snap.task_index, cfg.linking, &new_task_ids);
    st.new_task_edges = snap.graph.task_task.size() - edges_before;

    st.resolution = kg::resolve_datasets(snap.graph, snap.dataset_index, snap.resolution,
                                         *clients.judge, cfg.linking, &new_mention_ids);
    return st;
}

// ---- commands -------------------------------------------------------------------

namespace {

void require_embedder_match(const StoreSnapshot& snap, const Clients& clients) {
    if (!snap.embedder_identity.empty() &&
        snap.embedder_identity != clients.embedder->identity())
        throw ConfigError("store was built with embedder '" + snap.embedder_identity +
                          "' but this run is configured with '" +
                          clients.embedder->identity() + "'");
}

void fill_totals(BuildStats& bs, const StoreSnapshot& snap) {
    bs.documents = snap.graph.documents.size();
    bs.datasets = snap.graph.datasets.size();
    bs.tasks = snap.graph.tasks.size();
    bs.mentions = snap.graph.mentions.size();
    bs.task_task_edges = snap.graph.task_task.size();
}

json resolution_json(const kg::ResolutionStats& r) {
    return json{{"merges", r.merges},
                {"dictionary_unions", r.dictionary_unions},
                {"key_unions", r.key_unions},
                {"judge_calls", r.judge_calls},
                {"cached_verdicts", r.cached_verdicts},
                {"judge_unions", r.judge_unions},
                {"deferred_pairs", r.deferred_pairs}};
}

}  // namespace

std::string BuildStats::to_json_string() const {
    json j{{"corpus_documents", corpus_documents},
           {"new_documents", new_documents},
           {"documents_integrated", integrate.documents_integrated},
           {"documents_filtered", integrate.documents_filtered},
           {"documents_skipped", integrate.documents_skipped},
           {"records_added", integrate.records_added},
           {"new_tasks", integrate.new_tasks},
           {"new_mentions", integrate.new_mentions},
           {"new_task_edges", integrate.new_task_edges},
           {"resolution", resolution_json(integrate.resolution)},
           {"documents", documents},
           {"datasets", datasets},
           {"tasks", tasks},
           {"mentions", mentions},
           {"task_task_edges", task_task_edges},
           {"model_tokens", model_tokens},
           {"snapshot_id", snapshot_id}};
    return j.dump(2) + "\n";
}

BuildStats cmd_build(const SystemConfig& cfg) {
    cfg.validate();
    if (cfg.corpus.empty()) throw ConfigError("build: corpus path required");
    StoreLock lock{fs::path(cfg.store)};

    std::vector<ingest::NormalizedDocument> docs = ingest::load_corpus(cfg.corpus);
    Clients clients = Clients::make(cfg);
    ingest::CacheStore cache{fs::path(cfg.cache)};
    cache.set_extraction_tag(llm::prompts::template_hash8());

    StoreSnapshot snap;
    snap.embedder_identity = clients.embedder->identity();
    snap.extractor_identity = clients.extractor->identity();
    if (!cfg.alias_seed_file.empty())
        kg::load_alias_seed_file(snap.resolution, cfg.alias_seed_file);

    BuildStats bs;
    bs.corpus_documents = docs.size();
    bs.new_documents = docs.size();
    bs.integrate = integrate_documents(snap, docs, clients, cfg, cache);
    snap.save(cfg.store);

    fill_totals(bs, snap);
    bs.model_tokens = clients.model_tokens();
    bs.snapshot_id = snap.snapshot_id;
    return bs;
}

BuildStats cmd_update(const SystemConfig& cfg) {
    cfg.validate();
    if (cfg.corpus.empty()) throw ConfigError("update: corpus path required");
    StoreLock lock{fs::path(cfg.store)};

    StoreSnapshot snap = StoreSnapshot::load(cfg.store);
    Clients clients = Clients::make(cfg);
    require_embedder_match(snap, clients);
    if (!snap.extractor_identity.empty() &&
        snap.extractor_identity != clients.extractor->identity()) {
        warnings::emit("extractor changed since the store was built: " +
                       snap.extractor_identity + " -> " + clients.extractor->identity());
        snap.extractor_identity = clients.extractor->identity();
    }
    ingest::CacheStore cache{fs::path(cfg.cache)};
    cache.set_extraction_tag(llm::prompts::template_hash8());
    if (!cfg.alias_seed_file.empty())
        kg::load_alias_seed_file(snap.resolution, cfg.alias_seed_file);

    std::vector<ingest::NormalizedDocument> docs = ingest::load_corpus(cfg.corpus);
    std::vector<ingest::NormalizedDocument> fresh = ingest::diff_corpus(snap.manifest, docs);

    BuildStats bs;
    bs.corpus_documents = docs.size();
    bs.new_documents = fresh.size();
    bs.integrate = integrate_documents(snap, fresh, clients, cfg, cache);
    snap.save(cfg.store);

    fill_totals(bs, snap);
    bs.model_tokens = clients.model_tokens();
    bs.snapshot_id = snap.snapshot_id;
    return bs;
}

QueryOutput cmd_query(const SystemConfig& cfg, const std::string& query_text, std::size_t top_n,
                      bool explain) {
    cfg.validate();
    StoreSnapshot snap = StoreSnapshot::load(cfg.store);
    Clients clients = Clients::make(cfg);
    require_embedder_match(snap, clients);

    query::Engine engine(snap.graph, snap.task_index, *clients.embedder,
                         clients.reranker.get(), cfg.query);
    QueryOutput out;
    out.result = engine.search(query_text);
    out.json = query::result_to_json_string(out.result, query_text, top_n, explain);
    return out;
}

eval::EvalReport cmd_eval(const SystemConfig& cfg, const std::string& benchmark_path,
                          const std::string& out_dir) {
    cfg.validate();
    StoreSnapshot snap = StoreSnapshot::load(cfg.store);
    Clients clients = Clients::make(cfg);
    require_embedder_match(snap, clients);

    std::vector<eval::BenchmarkQuery> queries = eval::load_benchmark(benchmark_path);
    query::Engine engine(snap.graph, snap.task_index, *clients.embedder,
                         clients.reranker.get(), cfg.query);

    eval::EvalOptions opts;
    opts.names = eval::names_from_graph(snap.graph);
    opts.token_counter = [&clients]() { return clients.model_tokens(); };

    eval::EvalReport report = eval::evaluate(
        [&engine](const std::string& text, const std::set<std::string>& mask) {
            return engine.search(text, &mask);
        },
        queries, opts);

    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        write_file_atomic((fs::path(out_dir) / "report.json").string(),
                          report.to_json_string());
        write_file_atomic((fs::path(out_dir) / "report.txt").string(), report.to_table());
    }
    return report;
}

std::string StoreStats::to_json_string() const {
    json j{{"snapshot_id", snapshot_id},
           {"embedder", embedder_identity},
           {"extractor", extractor_identity},
           {"documents", documents},
           {"datasets", datasets},
           {"external_datasets", external_datasets},
           {"tasks", tasks},
           {"mentions", mentions},
           {"doc_dataset_edges", doc_dataset_edges},
           {"dataset_task_edges", dataset_task_edges},
           {"task_task_edges", task_task_edges},
           {"task_index_size", task_index_size},
           {"dataset_index_size", dataset_index_size},
           {"extraction_records", extraction_records},
           {"manifest_entries", manifest_entries},
           {"pending_judge_pairs", pending_judge_pairs}};
    return j.dump(2) + "\n";
}

StoreStats cmd_stats(const SystemConfig& cfg) {
    cfg.validate();
    StoreSnapshot snap = StoreSnapshot::load(cfg.store);

    StoreStats s;
    s.snapshot_id = snap.snapshot_id;
    s.embedder_identity = snap.embedder_identity;
    s.extractor_identity = snap.extractor_identity;
    s.documents = snap.graph.documents.size();
    s.datasets = snap.graph.datasets.size();
    for (const auto& [id, d] : snap.graph.datasets)
        if (d.externally_ingested) ++s.external_datasets;
    s.tasks = snap.graph.tasks.size();
    s.mentions = snap.graph.mentions.size();
    kg::EdgeCounts ec = snap.graph.edge_counts();
    s.doc_dataset_edges = ec.doc_dataset;
    s.dataset_task_edges = ec.dataset_task;
    s.task_task_edges = ec.task_task;
    s.task_index_size = snap.task_index.size();
    s.dataset_index_size = snap.dataset_index.size();
    s.extraction_records = snap.records.size();
    s.manifest_entries = snap.manifest.size();
    s.pending_judge_pairs = snap.resolution.pending_pairs().size();
    return s;
}

}  // namespace tds::sys
