#include <algorithm>

#include "doctest.h"
#include "fixtures.hpp"
#include "tds/kgraph.hpp"

using namespace tds;
using namespace tds::kg;

namespace {

KnowledgeGraph one_doc_graph() {
    KnowledgeGraph g;
    g.documents["c:doc1"] = DocumentNode{"c:doc1", "Doc One", "a.txt"};
    return g;
}

extract::ExtractionRecord rec(const std::string& dataset, const std::string& task,
                              std::vector<std::string> keywords = {},
                              const std::string& doc = "c:doc1",
                              const std::string& desc = "") {
    return extract::ExtractionRecord{dataset, desc, task, std::move(keywords), doc};
}

}  // namespace

TEST_SUITE_BEGIN("kgraph");

// ---- ids ---------------------------------------------------------------------

TEST_CASE("entity ids are content-addressed") {
    CHECK(mention_id("c:abc", "MNIST") ==
          "m:" + testfx::ref_sha256_hex("c:abc|MNIST").substr(0, 16));
    CHECK(task_id("c:abc", "classify digits") ==
          "t:" + testfx::ref_sha256_hex("c:abc|classify digits").substr(0, 16));
    CHECK(dataset_id_for_mention("m:0123456789abcdef") == "d:0123456789abcdef");
    CHECK(external_dataset_id("ImageNet") ==
          "d:" + testfx::ref_sha256_hex("external|ImageNet").substr(0, 16));
    CHECK(mention_id("c:abc", "MNIST") != mention_id("c:xyz", "MNIST"));
}

TEST_CASE("keyword overlap is Jaccard") {
    CHECK(keyword_overlap({"a", "b"}, {"b", "c"}) == doctest::Approx(1.0 / 3.0));
    CHECK(keyword_overlap({"a"}, {"a"}) == doctest::Approx(1.0));
    CHECK(keyword_overlap({}, {}) == 0.0);
    CHECK(keyword_overlap({"a"}, {}) == 0.0);
    CHECK(keyword_overlap({"a", "a", "b"}, {"b", "a"}) == doctest::Approx(1.0));  // set semantics
}

// ---- add_record -----------------------------------------------------------------

TEST_CASE("add_record creates task, mention, singleton dataset, and edges") {
    KnowledgeGraph g = one_doc_graph();
    auto added = add_record(g, rec("MNIST", "classify digits", {"b", "a", "a"}));
    REQUIRE(added.new_task_ids.size() == 1);
    REQUIRE(added.new_mention_ids.size() == 1);

    const TaskNode& t = g.tasks.at(added.new_task_ids[0]);
    CHECK(t.description == "classify digits");
    CHECK(t.keywords == std::vector<std::string>{"a", "b"});  // sorted, deduped

    const Mention& m = g.mentions.at(added.new_mention_ids[0]);
    CHECK(m.surface_name == "MNIST");
    CHECK(m.canonical_id == dataset_id_for_mention(m.mention_id));

    const DatasetNode& d = g.datasets.at(m.canonical_id);
    CHECK(d.canonical_name == "MNIST");
    CHECK(d.aliases == std::set<std::string>{"MNIST"});
    CHECK(d.member_mention_ids == std::set<std::string>{m.mention_id});
    CHECK(!d.externally_ingested);

    CHECK(g.doc_dataset.count({"c:doc1", d.canonical_id}) == 1);
    CHECK(g.dataset_task.count({d.canonical_id, t.task_id}) == 1);
    g.validate();

    // The same record again adds nothing.
    auto again = add_record(g, rec("MNIST", "classify digits", {"a", "b"}));
    CHECK(again.new_task_ids.empty());
    CHECK(again.new_mention_ids.empty());
    CHECK(g.tasks.size() == 1);
    CHECK(g.mentions.size() == 1);
}

TEST_CASE("repeated tasks merge keywords; mention descriptions upgrade") {
    KnowledgeGraph g = one_doc_graph();
    add_record(g, rec("MNIST", "classify digits", {"digits"}));
    add_record(g, rec("MNIST", "classify digits", {"vision", "digits"}));
    REQUIRE(g.tasks.size() == 1);
    CHECK(g.tasks.begin()->second.keywords == std::vector<std::string>{"digits", "vision"});

    auto r_short = rec("USPS", "classify digits", {}, "c:doc1", "small set");
    auto r_long = rec("USPS", "classify digits", {}, "c:doc1", "a larger digit collection");
    add_record(g, r_short);
    add_record(g, r_long);
    std::string mid = mention_id("c:doc1", "USPS");
    CHECK(g.mentions.at(mid).description == "a larger digit collection");

    // Longer never loses, regardless of arrival order.
    KnowledgeGraph g2 = one_doc_graph();
    add_record(g2, r_long);
    add_record(g2, r_short);
    CHECK(g2.mentions.at(mid).description == "a larger digit collection");
}

TEST_CASE("add_record rejects dangling input") {
    KnowledgeGraph g = one_doc_graph();
    CHECK_THROWS_AS(add_record(g, rec("MNIST", "task", {}, "c:unknown")), DanglingRecord);
    CHECK_THROWS_AS(add_record(g, rec("", "task")), DanglingRecord);
    CHECK_THROWS_AS(add_record(g, rec("MNIST", "")), DanglingRecord);
}

TEST_CASE("build_graph is record-order independent") {
    std::vector<ingest::NormalizedDocument> docs(2);
    docs[0].doc_id = "c:doc1"; docs[0].title = "One"; docs[0].text = "x";
    docs[1].doc_id = "c:doc2"; docs[1].title = "Two"; docs[1].text = "y";

    std::vector<extract::ExtractionRecord> records = {
        rec("MNIST", "classify digits", {"digits"}, "c:doc1", "short"),
        rec("MNIST", "classify digits", {"vision"}, "c:doc1", "longer text"),
        rec("COCO", "detect objects", {"objects"}, "c:doc2"),
        rec("MNIST", "probe generalization", {}, "c:doc2")};

    KnowledgeGraph a = build_graph(docs, records);
    std::reverse(records.begin(), records.end());
    std::reverse(docs.begin(), docs.end());
    KnowledgeGraph b = build_graph(docs, records);
    CHECK(a.to_json_string() == b.to_json_string());
    a.validate();
    CHECK(a.datasets.size() == 3);  // one per mention before resolution
    CHECK(a.mentions.size() == 3);
    CHECK(a.tasks.size() == 3);
}

// ---- task linking ----------------------------------------------------------------

namespace {

struct LinkFixture {
    KnowledgeGraph g;
    embed::VectorIndex index{embed::IndexKind::task};
    std::string t1, t2, t3, t4;

    LinkFixture() {
        g = one_doc_graph();
        t1 = add_record(g, rec("D1", "task one", {"alpha", "beta"})).new_task_ids[0];
        t2 = add_record(g, rec("D2", "task two", {"unrelated"})).new_task_ids[0];
        t3 = add_record(g, rec("D3", "task three", {"alpha", "beta"})).new_task_ids[0];
        t4 = add_record(g, rec("D4", "task four", {"alpha", "beta", "gamma"})).new_task_ids[0];
        index.append(t1, embed::EmbeddingVector::of({1.0f, 0.0f}));
        index.append(t2, embed::EmbeddingVector::of({0.9f, 0.43588989f}));
        index.append(t3, embed::EmbeddingVector::of({0.0f, 1.0f}));
        index.append(t4, embed::EmbeddingVector::of({0.5f, 0.8660254f}));
    }
};

}  // namespace

TEST_CASE("link_tasks admits pairs by cosine or keyword overlap") {
    LinkFixture f;
    warnings::reset();
    link_tasks(f.g, f.index, LinkingConfig{});
    f.g.validate();

    // cos(t1,t2)=0.9 >= theta_d.
    CHECK(f.g.task_task_weight(f.t1, f.t2) == doctest::Approx(0.9));
    // cos(t1,t4)=0.5 below theta_d, but keyword Jaccard 2/3 >= theta_k.
    CHECK(f.g.task_task_weight(f.t1, f.t4) == doctest::Approx(0.5));
    // cos(t2,t4) and cos(t3,t4) clear theta_d on their own.
    CHECK(f.g.task_task_weight(f.t2, f.t4) == doctest::Approx(0.82745).epsilon(1e-4));
    CHECK(f.g.task_task_weight(f.t3, f.t4) == doctest::Approx(0.8660254).epsilon(1e-6));
    // t1-t3: keywords agree but cosine is zero -> skipped with a warning.
    CHECK(f.g.task_task_weight(f.t1, f.t3) == 0.0);
    CHECK(f.g.task_task.size() == 4);
    CHECK(warnings::count() == 1);
}

TEST_CASE("incremental scoped linking matches a full relink") {
    LinkFixture f;
    KnowledgeGraph full = f.g;
    link_tasks(full, f.index, LinkingConfig{});

    // Replay the incremental flow: first three tasks alone, then t4 arrives.
    KnowledgeGraph staged = one_doc_graph();
    embed::VectorIndex staged_index{embed::IndexKind::task};
    std::string t1 = add_record(staged, rec("D1", "task one", {"alpha", "beta"})).new_task_ids[0];
    std::string t2 = add_record(staged, rec("D2", "task two", {"unrelated"})).new_task_ids[0];
    std::string t3 = add_record(staged, rec("D3", "task three", {"alpha", "beta"})).new_task_ids[0];
    staged_index.append(t1, f.index.vector_of(t1));
    staged_index.append(t2, f.index.vector_of(t2));
    staged_index.append(t3, f.index.vector_of(t3));
    std::vector<std::string> first = {t1, t2, t3};
    link_tasks(staged, staged_index, LinkingConfig{}, &first);
    CHECK(staged.task_task.size() == 1);  // only t1-t2 clears a threshold

    std::string t4 =
        add_record(staged, rec("D4", "task four", {"alpha", "beta", "gamma"})).new_task_ids[0];
    staged_index.append(t4, f.index.vector_of(t4));
    std::vector<std::string> second = {t4};
    link_tasks(staged, staged_index, LinkingConfig{}, &second);

    CHECK(staged.to_json_string() == full.to_json_string());

    // Relinking everything is idempotent.
    link_tasks(staged, staged_index, LinkingConfig{});
    CHECK(staged.to_json_string() == full.to_json_string());
}

TEST_CASE("edge helpers enforce the weight domain") {
    KnowledgeGraph g = one_doc_graph();
    add_record(g, rec("D1", "task one"));
    add_record(g, rec("D2", "task two"));
    std::string a = task_id("c:doc1", "task one");
    std::string b = task_id("c:doc1", "task two");

    CHECK_THROWS_AS(g.add_task_task_edge(a, a, 0.5), GraphInconsistent);
    CHECK_THROWS_AS(g.add_task_task_edge(a, b, 0.0), GraphInconsistent);
    CHECK_THROWS_AS(g.add_task_task_edge(a, b, 1.5), GraphInconsistent);
    g.add_task_task_edge(b, a, 1.0);  // stored once, ordered
    CHECK(g.task_task_weight(a, b) == 1.0);
    CHECK(g.task_task_weight(b, a) == 1.0);
    CHECK(g.task_task.size() == 1);
    g.validate();
}

// ---- merging ---------------------------------------------------------------------

TEST_CASE("merge_dataset_nodes repoints everything and renames") {
    KnowledgeGraph g = one_doc_graph();
    g.documents["c:doc2"] = DocumentNode{"c:doc2", "Doc Two", "b.txt"};
    add_record(g, rec("MNIST", "classify digits", {}, "c:doc1", "digit images"));
    add_record(g, rec("MNIST database", "probe models", {}, "c:doc2",
                      "a database of handwritten digits"));

    std::string m1 = mention_id("c:doc1", "MNIST");
    std::string m2 = mention_id("c:doc2", "MNIST database");
    std::string keep = g.mentions.at(m1).canonical_id;
    std::string absorb = g.mentions.at(m2).canonical_id;
    std::uint64_t keep_seq = g.datasets.at(keep).seq;

    merge_dataset_nodes(g, keep, absorb);
    g.validate();

    CHECK(g.datasets.size() == 1);
    const DatasetNode& d = g.datasets.at(keep);
    CHECK(d.seq == keep_seq);
    CHECK(d.canonical_name == "MNIST database");  // longest alias
    CHECK(d.aliases == std::set<std::string>{"MNIST", "MNIST database"});
    CHECK(d.description == "a database of handwritten digits");
    CHECK(d.member_mention_ids == std::set<std::string>{m1, m2});
    CHECK(g.mentions.at(m2).canonical_id == keep);
    CHECK(g.doc_dataset.count({"c:doc2", keep}) == 1);
    CHECK(g.dataset_task.count({keep, task_id("c:doc2", "probe models")}) == 1);

    CHECK_THROWS_AS(merge_dataset_nodes(g, keep, "d:nope"), UnknownNode);
    merge_dataset_nodes(g, keep, keep);  // no-op
    CHECK(g.datasets.size() == 1);
}

TEST_CASE("aliases re-pick the canonical name, ties lexicographically") {
    KnowledgeGraph g = one_doc_graph();
    add_record(g, rec("ABC", "task one"));
    std::string id = g.mentions.begin()->second.canonical_id;
    add_dataset_alias(g, id, "ABD");
    CHECK(g.datasets.at(id).canonical_name == "ABC");  // equal length, smaller wins
    add_dataset_alias(g, id, "a longer alias");
    CHECK(g.datasets.at(id).canonical_name == "a longer alias");
    CHECK_THROWS_AS(add_dataset_alias(g, "d:nope", "x"), UnknownNode);
}

// ---- validation ------------------------------------------------------------------

TEST_CASE("validate catches broken invariants") {
    LinkFixture f;
    link_tasks(f.g, f.index, LinkingConfig{});

    SUBCASE("missing dataset behind a mention") {
        f.g.datasets.erase(f.g.mentions.begin()->second.canonical_id);
        CHECK_THROWS_AS(f.g.validate(), GraphInconsistent);
    }
    SUBCASE("stray member id") {
        f.g.datasets.begin()->second.member_mention_ids.insert("m:0000000000000000");
        CHECK_THROWS_AS(f.g.validate(), GraphInconsistent);
    }
    SUBCASE("non-external dataset with no mentions") {
        DatasetNode d;
        d.canonical_id = "d:ffffffffffffffff";
        d.canonical_name = "Ghost";
        f.g.datasets[d.canonical_id] = d;
        CHECK_THROWS_AS(f.g.validate(), GraphInconsistent);
    }
    SUBCASE("task edge endpoint missing") {
        f.g.task_task[{"t:0000000000000000", "t:1111111111111111"}] = 0.5;
        CHECK_THROWS_AS(f.g.validate(), GraphInconsistent);
    }
    SUBCASE("task edge key out of order") {
        auto key = std::make_pair(std::max(f.t1, f.t2), std::min(f.t1, f.t2));
        f.g.task_task.clear();
        f.g.task_task[key] = 0.5;
        CHECK_THROWS_AS(f.g.validate(), GraphInconsistent);
    }
    SUBCASE("weight out of range sneaks past the setter") {
        f.g.task_task[{std::min(f.t1, f.t2), std::max(f.t1, f.t2)}] = 1.5;
        CHECK_THROWS_AS(f.g.validate(), GraphInconsistent);
    }
    SUBCASE("doc-dataset edge with missing endpoint") {
        f.g.doc_dataset.insert({"c:nope", f.g.datasets.begin()->first});
        CHECK_THROWS_AS(f.g.validate(), GraphInconsistent);
    }
}

// ---- serialization ---------------------------------------------------------------

TEST_CASE("graph json round-trips byte-identically") {
    LinkFixture f;
    link_tasks(f.g, f.index, LinkingConfig{});
    std::string once = f.g.to_json_string();
    KnowledgeGraph back = KnowledgeGraph::from_json_string(once);
    CHECK(back.to_json_string() == once);
    back.validate();
    CHECK(back.next_seq == f.g.next_seq);
    CHECK(back.datasets.begin()->second.seq == f.g.datasets.begin()->second.seq);
    CHECK(back.task_task.size() == f.g.task_task.size());
}

TEST_CASE("graph files carry a schema version") {
    testfx::TmpDir tmp;
    LinkFixture f;
    f.g.save(tmp / "graph.kats");
    KnowledgeGraph back = KnowledgeGraph::load(tmp / "graph.kats");
    CHECK(back.to_json_string() == f.g.to_json_string());

    CHECK_THROWS_AS(KnowledgeGraph::from_json_string("{\"schema_version\": 99}"), Error);
    CHECK_THROWS_AS(KnowledgeGraph::from_json_string("{}"), Error);
}

TEST_SUITE_END();
