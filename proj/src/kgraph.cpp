#include "tds/kgraph.hpp"

#include <algorithm>

#include "nlohmann/json.hpp"

using nlohmann::json;

namespace tds::kg {

// ---- id derivation ------------------------------------------------------------

namespace {
std::string short_hash(const std::string& basis) { return sha256_hex(basis).substr(0, 16); }
}  // namespace

std::string mention_id(const std::string& doc_id, const std::string& surface_name) {
    return "m:" + short_hash(doc_id + "|" + surface_name);
}

std::string task_id(const std::string& doc_id, const std::string& task_description) {
    return "t:" + short_hash(doc_id + "|" + task_description);
}

std::string dataset_id_for_mention(const std::string& mention_id_str) {
    return "d:" + mention_id_str.substr(2);
}

std::string external_dataset_id(const std::string& name) {
    return "d:" + short_hash("external|" + name);
}

// ---- graph helpers --------------------------------------------------------------

EdgeCounts KnowledgeGraph::edge_counts() const {
    return EdgeCounts{doc_dataset.size(), dataset_task.size(), task_task.size()};
}

double KnowledgeGraph::task_task_weight(const std::string& a, const std::string& b) const {
    auto key = a < b ? std::make_pair(a, b) : std::make_pair(b, a);
    auto it = task_task.find(key);
    return it == task_task.end() ? 0.0 : it->second;
}

void KnowledgeGraph::add_task_task_edge(const std::string& a, const std::string& b, double w) {
    if (a == b) throw GraphInconsistent("task self-loop: " + a);
    if (!(w > 0.0) || w > 1.0)
        throw GraphInconsistent("task edge weight out of (0,1]: " + std::to_string(w));
    auto key = a < b ? std::make_pair(a, b) : std::make_pair(b, a);
    task_task[key] = w;
}

void KnowledgeGraph::validate() const {
    for (const auto& [id, m] : mentions) {
        if (!documents.count(m.doc_id))
            throw GraphInconsistent("mention " + id + " references missing doc " + m.doc_id);
        auto d = datasets.find(m.canonical_id);
        if (d == datasets.end())
            throw GraphInconsistent("mention " + id + " references missing dataset " +
                                    m.canonical_id);
        if (!d->second.member_mention_ids.count(id))
            throw GraphInconsistent("mention " + id + " missing from members of " +
                                    m.canonical_id);
    }
    for (const auto& [id, d] : datasets) {
        if (d.member_mention_ids.empty() && !d.externally_ingested)
            throw GraphInconsistent("dataset " + id + " has no mentions and is not external");
        for (const auto& mid : d.member_mention_ids) {
            auto m = mentions.find(mid);
            if (m == mentions.end() || m->second.canonical_id != id)
                throw GraphInconsistent("dataset " + id + " lists stray member " + mid);
        }
        if (!d.member_mention_ids.empty()) {
            bool linked = false;
            for (const auto& mid : d.member_mention_ids)
                if (doc_dataset.count({mentions.at(mid).doc_id, id})) linked = true;
            if (!linked)
                throw GraphInconsistent("dataset " + id + " has mentions but no document edge");
        }
    }
    for (const auto& [id, t] : tasks) {
        if (!documents.count(t.source_doc_id))
            throw GraphInconsistent("task " + id + " references missing doc " + t.source_doc_id);
    }
    for (const auto& [c, d] : doc_dataset) {
        if (!documents.count(c) || !datasets.count(d))
            throw GraphInconsistent("doc-dataset edge with missing endpoint: " + c + " -> " + d);
    }
    for (const auto& [d, t] : dataset_task) {
        if (!datasets.count(d) || !tasks.count(t))
            throw GraphInconsistent("dataset-task edge with missing endpoint: " + d + " -> " + t);
    }
    for (const auto& [key, w] : task_task) {
        if (key.first >= key.second)
            throw GraphInconsistent("task-task edge key not ordered: " + key.first);
        if (!tasks.count(key.first) || !tasks.count(key.second))
            throw GraphInconsistent("task-task edge with missing endpoint: " + key.first +
                                    " -- " + key.second);
        if (!(w > 0.0) || w > 1.0)
            throw GraphInconsistent("task-task weight out of (0,1]");
    }
}

// ---- keyword overlap -------------------------------------------------------------

double keyword_overlap(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    if (a.empty() && b.empty()) return 0.0;
    std::set<std::string> sa(a.begin(), a.end());
    std::set<std::string> sb(b.begin(), b.end());
    std::size_t inter = 0;
    for (const auto& k : sa) inter += sb.count(k);
    std::size_t uni = sa.size() + sb.size() - inter;
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

// ---- construction -----------------------------------------------------------------

namespace {

// Longest wins; ties go to the lexicographically smallest.
const std::string* pick_longest(const std::set<std::string>& values) {
    const std::string* best = nullptr;
    for (const auto& v : values) {
        if (!best || v.size() > best->size()) best = &v;
    }
    return best;
}

void recompute_dataset_naming(KnowledgeGraph& g, DatasetNode& d) {
    if (const std::string* name = pick_longest(d.aliases)) d.canonical_name = *name;
    std::set<std::string> descs;
    for (const auto& mid : d.member_mention_ids) {
        const std::string& desc = g.mentions.at(mid).description;
        if (!desc.empty()) descs.insert(desc);
    }
    if (const std::string* desc = pick_longest(descs)) d.description = *desc;
}

}  // namespace

AddedEntities add_record(KnowledgeGraph& g, const extract::ExtractionRecord& record) {
    AddedEntities added;
    if (record.dataset_name.empty() || record.task_description.empty() ||
        record.source_doc_id.empty())
        throw DanglingRecord("record missing required fields");
    if (!g.documents.count(record.source_doc_id))
        throw DanglingRecord("record references unknown document " + record.source_doc_id);

    // Task node (per document + description; repeats merge keywords).
    std::string tid = task_id(record.source_doc_id, record.task_description);
    auto t = g.tasks.find(tid);
    if (t == g.tasks.end()) {
        TaskNode node;
        node.task_id = tid;
        node.description = record.task_description;
        node.source_doc_id = record.source_doc_id;
        node.keywords = record.task_keywords;
        std::sort(node.keywords.begin(), node.keywords.end());
        node.keywords.erase(std::unique(node.keywords.begin(), node.keywords.end()),
                            node.keywords.end());
        g.tasks.emplace(tid, std::move(node));
        added.new_task_ids.push_back(tid);
    } else {
        std::vector<std::string>& kws = t->second.keywords;
        kws.insert(kws.end(), record.task_keywords.begin(), record.task_keywords.end());
        std::sort(kws.begin(), kws.end());
        kws.erase(std::unique(kws.begin(), kws.end()), kws.end());
    }

    // Mention + singleton dataset node.
    std::string mid = mention_id(record.source_doc_id, record.dataset_name);
    auto m = g.mentions.find(mid);
    if (m == g.mentions.end()) {
        Mention mention;
        mention.mention_id = mid;
        mention.doc_id = record.source_doc_id;
        mention.surface_name = record.dataset_name;
        mention.description = record.dataset_description;
        mention.canonical_id = dataset_id_for_mention(mid);
        g.mentions.emplace(mid, mention);

        DatasetNode node;
        node.canonical_id = mention.canonical_id;
        node.canonical_name = record.dataset_name;
        node.description = record.dataset_description;
        node.aliases.insert(record.dataset_name);
        node.member_mention_ids.insert(mid);
        node.seq = g.next_seq++;
        g.datasets.emplace(node.canonical_id, std::move(node));
        added.new_mention_ids.push_back(mid);
    } else {
        // Same doc, same surface, another record: keep the "larger"
        // description so record order cannot change the outcome.
        const std::string& incoming = record.dataset_description;
        std::string& current = m->second.description;
        if (incoming.size() > current.size() ||
            (incoming.size() == current.size() && !incoming.empty() && incoming < current)) {
            current = incoming;
            recompute_dataset_naming(g, g.datasets.at(m->second.canonical_id));
        }
    }

    const std::string& cid = g.mentions.at(mid).canonical_id;
    g.doc_dataset.insert({record.source_doc_id, cid});
    g.dataset_task.insert({cid, tid});
    return added;
}

KnowledgeGraph build_graph(const std::vector<ingest::NormalizedDocument>& docs,
                           const std::vector<extract::ExtractionRecord>& records) {
    KnowledgeGraph g;
    for (const auto& doc : docs)
        g.documents[doc.doc_id] = DocumentNode{doc.doc_id, doc.title, doc.source_path};
    // Canonical insertion order keeps creation sequence numbers independent
    // of how the records arrived.
    std::vector<const extract::ExtractionRecord*> ordered;
    ordered.reserve(records.size());
    for (const auto& r : records) ordered.push_back(&r);
    std::sort(ordered.begin(), ordered.end(),
              [](const extract::ExtractionRecord* a, const extract::ExtractionRecord* b) {
                  return std::tie(a->source_doc_id, a->dataset_name, a->task_description,
                                  a->dataset_description) <
                         std::tie(b->source_doc_id, b->dataset_name, b->task_description,
                                  b->dataset_description);
              });
    for (const auto* r : ordered) add_record(g, *r);
    return g;
}

void link_tasks(KnowledgeGraph& g, const embed::VectorIndex& task_index,
                const LinkingConfig& cfg, const std::vector<std::string>* scope_task_ids) {
    std::vector<std::string> scope;
    if (scope_task_ids) {
        scope = *scope_task_ids;
        std::sort(scope.begin(), scope.end());
        scope.erase(std::unique(scope.begin(), scope.end()), scope.end());
    } else {
        for (const auto& [id, t] : g.tasks) scope.push_back(id);
    }
    std::set<std::string> in_scope(scope.begin(), scope.end());

    std::vector<embed::EmbeddingVector> scope_vecs;
    scope_vecs.reserve(scope.size());
    for (const auto& tid : scope) {
        if (!g.tasks.count(tid)) throw UnknownNode("link_tasks: unknown task " + tid);
        scope_vecs.push_back(task_index.vector_of(tid));
    }

    for (std::size_t i = 0; i < scope.size(); ++i) {
        const std::string& a = scope[i];
        const TaskNode& ta = g.tasks.at(a);
        for (const auto& [b, tb] : g.tasks) {
            if (a == b) continue;
            // Each unordered pair exactly once: scope-scope pairs only when
            // a < b; scope-outside pairs always.
            if (in_scope.count(b) && !(a < b)) continue;

            double cos = embed::cosine(scope_vecs[i], task_index.vector_of(b));
            bool by_cosine = cos >= cfg.theta_d;
            bool by_keywords = keyword_overlap(ta.keywords, tb.keywords) >= cfg.theta_k;
            if (!by_cosine && !by_keywords) continue;
            if (cos <= 0.0) {
                warnings::emit("skipping keyword-admitted task pair with non-positive cosine: " +
                               a + " -- " + b);
                continue;
            }
            g.add_task_task_edge(a, b, std::min(cos, 1.0));
        }
    }
}

void merge_dataset_nodes(KnowledgeGraph& g, const std::string& keep_id,
                         const std::string& absorb_id) {
    if (keep_id == absorb_id) return;
    auto keep_it = g.datasets.find(keep_id);
    auto absorb_it = g.datasets.find(absorb_id);
    if (keep_it == g.datasets.end()) throw UnknownNode("merge: unknown dataset " + keep_id);
    if (absorb_it == g.datasets.end()) throw UnknownNode("merge: unknown dataset " + absorb_id);
    DatasetNode& keep = keep_it->second;
    DatasetNode& absorb = absorb_it->second;

    for (const auto& mid : absorb.member_mention_ids) {
        g.mentions.at(mid).canonical_id = keep_id;
        keep.member_mention_ids.insert(mid);
    }
    keep.aliases.insert(absorb.aliases.begin(), absorb.aliases.end());
    keep.externally_ingested = keep.externally_ingested || absorb.externally_ingested;

    std::vector<std::pair<std::string, std::string>> moved_cd;
    for (const auto& e : g.doc_dataset)
        if (e.second == absorb_id) moved_cd.push_back(e);
    for (const auto& e : moved_cd) {
        g.doc_dataset.erase(e);
        g.doc_dataset.insert({e.first, keep_id});
    }
    std::vector<std::pair<std::string, std::string>> moved_dt;
    for (const auto& e : g.dataset_task)
        if (e.first == absorb_id) moved_dt.push_back(e);
    for (const auto& e : moved_dt) {
        g.dataset_task.erase(e);
        g.dataset_task.insert({keep_id, e.second});
    }

    g.datasets.erase(absorb_it);
    recompute_dataset_naming(g, keep);
}

void add_dataset_alias(KnowledgeGraph& g, const std::string& canonical_id,
                       const std::string& alias) {
    auto it = g.datasets.find(canonical_id);
    if (it == g.datasets.end()) throw UnknownNode("add alias: unknown dataset " + canonical_id);
    if (alias.empty()) return;
    it->second.aliases.insert(alias);
    recompute_dataset_naming(g, it->second);
}

// ---- serialization ----------------------------------------------------------------

std::string KnowledgeGraph::to_json_string() const {
    json j;
    j["schema_version"] = 1;
    j["next_seq"] = next_seq;

    json docs = json::array();
    for (const auto& [id, d] : documents)
        docs.push_back({{"doc_id", d.doc_id}, {"title", d.title}, {"source_path", d.source_path}});
    j["documents"] = std::move(docs);

    json ds = json::array();
    for (const auto& [id, d] : datasets) {
        ds.push_back({{"canonical_id", d.canonical_id},
                      {"canonical_name", d.canonical_name},
                      {"description", d.description},
                      {"aliases", std::vector<std::string>(d.aliases.begin(), d.aliases.end())},
                      {"member_mention_ids",
                       std::vector<std::string>(d.member_mention_ids.begin(),
                                                d.member_mention_ids.end())},
                      {"externally_ingested", d.externally_ingested},
                      {"seq", d.seq}});
    }
    j["datasets"] = std::move(ds);

    json ts = json::array();
    for (const auto& [id, t] : tasks)
        ts.push_back({{"task_id", t.task_id},
                      {"description", t.description},
                      {"keywords", t.keywords},
                      {"source_doc_id", t.source_doc_id}});
    j["tasks"] = std::move(ts);

    json ms = json::array();
    for (const auto& [id, m] : mentions)
        ms.push_back({{"mention_id", m.mention_id},
                      {"doc_id", m.doc_id},
                      {"surface_name", m.surface_name},
                      {"description", m.description},
                      {"canonical_id", m.canonical_id}});
    j["mentions"] = std::move(ms);

    json cd = json::array();
    for (const auto& [c, d] : doc_dataset) cd.push_back({c, d});
    json dt = json::array();
    for (const auto& [d, t] : dataset_task) dt.push_back({d, t});
    json tt = json::array();
    for (const auto& [key, w] : task_task) tt.push_back({key.first, key.second, w});
    j["edges"] = {{"doc_dataset", std::move(cd)},
                  {"dataset_task", std::move(dt)},
                  {"task_task", std::move(tt)}};
    return j.dump(2) + "\n";
}

KnowledgeGraph KnowledgeGraph::from_json_string(const std::string& text) {
    json j = json::parse(text);
    if (!j.is_object() || !j.contains("schema_version"))
        throw Error("graph file: missing schema_version");
    if (j["schema_version"].get<int>() != 1)
        throw Error("graph file: unsupported schema_version " + j["schema_version"].dump());

    KnowledgeGraph g;
    g.next_seq = j.value("next_seq", std::uint64_t{0});
    for (const auto& d : j.at("documents")) {
        DocumentNode node{d.at("doc_id").get<std::string>(), d.at("title").get<std::string>(),
                          d.at("source_path").get<std::string>()};
        g.documents[node.doc_id] = std::move(node);
    }
    for (const auto& d : j.at("datasets")) {
        DatasetNode node;
        node.canonical_id = d.at("canonical_id").get<std::string>();
        node.canonical_name = d.at("canonical_name").get<std::string>();
        node.description = d.at("description").get<std::string>();
        for (const auto& a : d.at("aliases")) node.aliases.insert(a.get<std::string>());
        for (const auto& m : d.at("member_mention_ids"))
            node.member_mention_ids.insert(m.get<std::string>());
        node.externally_ingested = d.at("externally_ingested").get<bool>();
        node.seq = d.at("seq").get<std::uint64_t>();
        g.datasets[node.canonical_id] = std::move(node);
    }
    for (const auto& t : j.at("tasks")) {
        TaskNode node;
        node.task_id = t.at("task_id").get<std::string>();
        node.description = t.at("description").get<std::string>();
        for (const auto& k : t.at("keywords")) node.keywords.push_back(k.get<std::string>());
        node.source_doc_id = t.at("source_doc_id").get<std::string>();
        g.tasks[node.task_id] = std::move(node);
    }
    for (const auto& m : j.at("mentions")) {
        Mention node;
        node.mention_id = m.at("mention_id").get<std::string>();
        node.doc_id = m.at("doc_id").get<std::string>();
        node.surface_name = m.at("surface_name").get<std::string>();
        node.description = m.at("description").get<std::string>();
        node.canonical_id = m.at("canonical_id").get<std::string>();
        g.mentions[node.mention_id] = std::move(node);
    }
    const json& edges = j.at("edges");
    for (const auto& e : edges.at("doc_dataset"))
        g.doc_dataset.insert({e.at(0).get<std::string>(), e.at(1).get<std::string>()});
    for (const auto& e : edges.at("dataset_task"))
        g.dataset_task.insert({e.at(0).get<std::string>(), e.at(1).get<std::string>()});
    for (const auto& e : edges.at("task_task"))
        g.task_task[{e.at(0).get<std::string>(), e.at(1).get<std::string>()}] =
            e.at(2).get<double>();

    g.validate();
    return g;
}

void KnowledgeGraph::save(const std::filesystem::path& path) const {
    write_file_atomic(path.string(), to_json_string());
}

KnowledgeGraph KnowledgeGraph::load(const std::filesystem::path& path) {
    return from_json_string(read_file(path.string()));
}

}  // namespace tds::kg
