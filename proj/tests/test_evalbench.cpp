#include "doctest.h"
#include "fixtures.hpp"
#include "nlohmann/json.hpp"
#include "tds/evalbench.hpp"

using namespace tds;
using namespace tds::eval;

namespace {

query::ResultEntry entry(const std::string& id, const std::string& name, double score) {
    query::ResultEntry e;
    e.canonical_id = id;
    e.canonical_name = name;
    e.score = score;
    return e;
}

query::RankedResult ranked(std::vector<query::ResultEntry> entries) {
    query::RankedResult r;
    r.entries = std::move(entries);
    return r;
}

GoldAnswer gold_mnist() {
    GoldAnswer g;
    g.canonical_name = "MNIST";
    g.aliases = {"MNIST database"};
    g.substitutes = {"USPS digits"};
    return g;
}

}  // namespace

TEST_SUITE_BEGIN("evalbench");

// ---- matching ----------------------------------------------------------------

TEST_CASE("match levels compare normalized title keys") {
    GoldAnswer g = gold_mnist();
    CHECK(match_level("MNIST", g) == MatchLevel::canonical);
    CHECK(match_level("mnist", g) == MatchLevel::canonical);
    CHECK(match_level("M.N.I.S.T.", g) == MatchLevel::canonical);
    CHECK(match_level("MNIST database", g) == MatchLevel::alias);
    CHECK(match_level("MNIST-Database", g) == MatchLevel::alias);
    CHECK(match_level("USPS digits", g) == MatchLevel::substitute);
    CHECK(match_level("CIFAR-10", g) == MatchLevel::none);
    CHECK(match_level("##", g) == MatchLevel::none);

    GoldAnswer spaced;
    spaced.canonical_name = "cifar 10";
    CHECK(match_level("CIFAR-10", spaced) == MatchLevel::canonical);
}

TEST_CASE("hits count substitutes but exact match does not") {
    std::vector<GoldAnswer> gold = {gold_mnist()};
    NameExpander names = canonical_name_only();

    auto r = ranked({entry("d:1", "USPS digits", 0.9), entry("d:2", "MNIST", 0.8),
                     entry("d:3", "CIFAR-10", 0.7)});
    CHECK(hit_at_k(r, gold, 1, names) == 1);  // substitute at rank 1
    CHECK(hit_at_k(r, gold, 3, names) == 1);
    CHECK(exact_match(r, gold, names) == 0);  // substitutes are not exact

    auto aliased = ranked({entry("d:1", "MNIST database", 0.9)});
    CHECK(exact_match(aliased, gold, names) == 1);

    auto miss_then_hit = ranked({entry("d:1", "CIFAR-10", 0.9), entry("d:2", "MNIST", 0.8)});
    CHECK(hit_at_k(miss_then_hit, gold, 1, names) == 0);
    CHECK(hit_at_k(miss_then_hit, gold, 2, names) == 1);
    CHECK(exact_match(miss_then_hit, gold, names) == 0);

    auto empty = ranked({});
    CHECK(hit_at_k(empty, gold, 5, names) == 0);
    CHECK(exact_match(empty, gold, names) == 0);
    CHECK(best_token_f1(empty, gold) == 0.0);
}

TEST_CASE("graph aliases widen what an entry answers to") {
    kg::KnowledgeGraph g;
    kg::DatasetNode d;
    d.canonical_id = "d:abc";
    d.canonical_name = "Modified NIST";
    d.aliases = {"Modified NIST", "MNIST"};
    d.externally_ingested = true;
    g.datasets[d.canonical_id] = d;

    std::vector<GoldAnswer> gold = {gold_mnist()};
    auto r = ranked({entry("d:abc", "Modified NIST", 0.9)});
    CHECK(hit_at_k(r, gold, 1, canonical_name_only()) == 0);
    CHECK(hit_at_k(r, gold, 1, names_from_graph(g)) == 1);
    CHECK(exact_match(r, gold, names_from_graph(g)) == 1);
}

// ---- token f1 -----------------------------------------------------------------

TEST_CASE("token f1 is the squad-style multiset overlap") {
    CHECK(token_f1("MS COCO dataset", "COCO") == doctest::Approx(0.5));  // P=1/3, R=1
    CHECK(token_f1("MNIST", "MNIST") == doctest::Approx(1.0));
    CHECK(token_f1("CIFAR-10", "cifar 10") == doctest::Approx(1.0));
    CHECK(token_f1("", "") == doctest::Approx(1.0));
    CHECK(token_f1("something", "") == doctest::Approx(0.0));
    CHECK(token_f1("", "gold") == doctest::Approx(0.0));
    CHECK(token_f1("alpha beta", "gamma delta") == doctest::Approx(0.0));
    // Multiset counting: the second "coco" finds no remaining gold token.
    CHECK(token_f1("coco coco", "coco") == doctest::Approx(2.0 / 3.0));

    std::vector<GoldAnswer> gold;
    GoldAnswer a;
    a.canonical_name = "COCO";
    GoldAnswer b;
    b.canonical_name = "MS COCO dataset";
    gold.push_back(a);
    gold.push_back(b);
    auto r = ranked({entry("d:1", "MS COCO dataset", 0.9)});
    CHECK(best_token_f1(r, gold) == doctest::Approx(1.0));  // best gold wins
}

// ---- benchmark loading -----------------------------------------------------------

TEST_CASE("benchmark files parse strictly with line numbers") {
    testfx::TmpDir tmp;
    std::string good =
        R"({"query_id": "q1", "task_text": "classify digits", "gold": [{"canonical_name": "MNIST", "aliases": ["MNIST database"], "substitutes": ["USPS"]}], "held_out_doc_ids": ["c:1", "c:2"]})"
        "\n"
        "\n"  // blank lines are fine
        R"({"query_id": "q2", "task_text": "detect objects", "gold": [{"canonical_name": "COCO"}]})"
        "\n";
    testfx::write_file(tmp / "bench.jsonl", good);
    auto queries = load_benchmark(tmp / "bench.jsonl");
    REQUIRE(queries.size() == 2);
    CHECK(queries[0].query_id == "q1");
    CHECK(queries[0].gold[0].aliases == std::set<std::string>{"MNIST database"});
    CHECK(queries[0].held_out_doc_ids == std::set<std::string>{"c:1", "c:2"});
    CHECK(queries[1].held_out_doc_ids.empty());

    auto expect_error = [&](const std::string& content, const std::string& needle) {
        testfx::write_file(tmp / "bad.jsonl", content);
        try {
            load_benchmark(tmp / "bad.jsonl");
            FAIL_CHECK("expected Error for: " << needle);
        } catch (const Error& e) {
            CHECK(std::string(e.what()).find(needle) != std::string::npos);
        }
    };
    expect_error("{\"query_id\": \"q1\"\n", "line 1");
    expect_error(R"({"query_id": "q1", "task_text": "t", "gold": []})" "\n", "no gold answers");
    expect_error(R"({"task_text": "t", "gold": [{"canonical_name": "X"}]})" "\n", "query_id");
    expect_error(R"({"query_id": "", "task_text": "t", "gold": [{"canonical_name": "X"}]})" "\n",
                 "empty query_id");
    std::string dup =
        R"({"query_id": "q1", "task_text": "t", "gold": [{"canonical_name": "X"}]})" "\n"
        R"({"query_id": "q1", "task_text": "t", "gold": [{"canonical_name": "X"}]})" "\n";
    expect_error(dup, "line 2");
    expect_error(dup, "duplicate query_id");
}

// ---- harness -----------------------------------------------------------------------

TEST_CASE("the harness masks per query, survives failures, and tracks tokens") {
    std::vector<BenchmarkQuery> queries;
    {
        BenchmarkQuery q;
        q.query_id = "digits";
        q.task_text = "classify digits";
        q.gold = {gold_mnist()};
        q.held_out_doc_ids = {"c:mask-me"};
        queries.push_back(q);
    }
    {
        BenchmarkQuery q;
        q.query_id = "objects";
        q.task_text = "detect objects";
        GoldAnswer g;
        g.canonical_name = "COCO";
        q.gold = {g};
        queries.push_back(q);
    }
    {
        BenchmarkQuery q;
        q.query_id = "broken";
        q.task_text = "no tasks visible";
        GoldAnswer g;
        g.canonical_name = "Whatever";
        q.gold = {g};
        queries.push_back(q);
    }

    std::uint64_t tokens = 0;
    std::vector<std::set<std::string>> seen_masks;
    SearchFn search = [&](const std::string& text,
                          const std::set<std::string>& mask) -> query::RankedResult {
        seen_masks.push_back(mask);
        tokens += 10;
        if (text == "classify digits")
            return ranked({entry("d:1", "MNIST", 0.9), entry("d:2", "SVHN", 0.5)});
        if (text == "detect objects")
            return ranked({entry("d:3", "Cityscapes", 0.9), entry("d:4", "USPS digits", 0.8)});
        throw query::EmptyIndex("no visible task to seed from");
    };

    EvalOptions opts;
    opts.ks = {1, 2};
    opts.token_counter = [&] { return tokens; };
    warnings::reset();
    EvalReport report = evaluate(search, queries, opts);

    REQUIRE(report.per_query.size() == 3);
    REQUIRE(seen_masks.size() == 3);
    CHECK(seen_masks[0] == std::set<std::string>{"c:mask-me"});
    CHECK(seen_masks[1].empty());

    const PerQueryRow& digits = report.per_query[0];
    CHECK(digits.hit.at(1) == 1);
    CHECK(digits.em == 1);
    CHECK(digits.f1 == doctest::Approx(1.0));
    CHECK(digits.rank_of_first_hit == 1);
    CHECK(digits.tokens == 10);
    CHECK(digits.error.empty());

    const PerQueryRow& objects = report.per_query[1];
    CHECK(objects.hit.at(1) == 0);
    CHECK(objects.hit.at(2) == 0);  // no COCO anywhere
    CHECK(objects.em == 0);
    CHECK(objects.rank_of_first_hit == 0);

    const PerQueryRow& broken = report.per_query[2];
    CHECK(!broken.error.empty());
    CHECK(broken.hit.at(1) == 0);
    CHECK(report.failures == 1);
    CHECK(warnings::count() == 1);

    CHECK(report.hit_rate.at(1) == doctest::Approx(1.0 / 3.0));
    CHECK(report.em == doctest::Approx(1.0 / 3.0));
    CHECK(report.total_tokens == 30);

    auto j = nlohmann::json::parse(report.to_json_string());
    CHECK(j.at("summary").at("queries") == 3);
    CHECK(j.at("summary").at("failures") == 1);
    CHECK(j.at("summary").at("total_tokens") == 30);
    CHECK(j.at("summary").at("hit_rate").at("hit_rate@1") == doctest::Approx(1.0 / 3.0));
    REQUIRE(j.at("per_query").size() == 3);
    CHECK(!j.at("per_query")[0].contains("error"));
    CHECK(j.at("per_query")[2].contains("error"));

    std::string table = report.to_table();
    CHECK(table.find("queries: 3") != std::string::npos);
    CHECK(table.find("failures: 1") != std::string::npos);
    CHECK(table.find("hit_rate@1") != std::string::npos);
    CHECK(table.find("total_tokens 30") != std::string::npos);
}

TEST_CASE("an empty benchmark yields an empty report") {
    EvalReport report = evaluate([](const std::string&, const std::set<std::string>&) {
        return query::RankedResult{};
    }, {});
    CHECK(report.per_query.empty());
    CHECK(report.failures == 0);
    CHECK(report.em == 0.0);
    CHECK(report.hit_rate.at(1) == 0.0);
}

TEST_SUITE_END();
