#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "tds/query.hpp"

namespace tds::eval {

struct GoldAnswer {
    std::string canonical_name;
    std::set<std::string> aliases;
    std::set<std::string> substitutes;  // acceptable stand-ins, not exact matches
};

struct BenchmarkQuery {
    std::string query_id;
    std::string task_text;
    std::vector<GoldAnswer> gold;
    std::set<std::string> held_out_doc_ids;
};

// JSONL, one query per line. Malformed lines raise Error with the line number.
std::vector<BenchmarkQuery> load_benchmark(const std::filesystem::path& path);

enum class MatchLevel { none, substitute, alias, canonical };

// How a predicted name relates to one gold answer, via normalized title keys.
MatchLevel match_level(const std::string& predicted_name, const GoldAnswer& gold);

// Names an entry answers to: canonical name by default, aliases when the
// caller can supply them from the graph.
using NameExpander = std::function<std::vector<std::string>(const query::ResultEntry&)>;
NameExpander canonical_name_only();
NameExpander names_from_graph(const kg::KnowledgeGraph& g);

// 1 if any of the top-k entries matches any gold at any level (substitutes
// count), else 0.
int hit_at_k(const query::RankedResult& result, const std::vector<GoldAnswer>& gold,
             std::size_t k, const NameExpander& names);
// 1 if the top entry matches a gold canonical name or alias. Substitutes do
// not count as exact.
int exact_match(const query::RankedResult& result, const std::vector<GoldAnswer>& gold,
                const NameExpander& names);

// SQuAD-style token F1 (lowercase, split on non-alphanumerics, multiset
// overlap). Both empty -> 1, one empty -> 0.
double token_f1(const std::string& predicted, const std::string& gold);
// Token F1 of the top entry's canonical name against the best gold.
double best_token_f1(const query::RankedResult& result, const std::vector<GoldAnswer>& gold);

struct PerQueryRow {
    std::string query_id;
    std::map<std::size_t, int> hit;  // k -> 0/1
    int em = 0;
    double f1 = 0.0;
    std::size_t rank_of_first_hit = 0;  // 0 = no hit
    double seconds = 0.0;
    std::uint64_t tokens = 0;
    std::string error;  // non-empty when the query failed
};

struct EvalReport {
    std::map<std::size_t, double> hit_rate;  // k -> mean
    double em = 0.0;
    double f1 = 0.0;
    double mean_seconds = 0.0;
    std::uint64_t total_tokens = 0;
    std::size_t failures = 0;
    std::vector<PerQueryRow> per_query;

    std::string to_json_string() const;
    std::string to_table() const;
};

struct EvalOptions {
    std::vector<std::size_t> ks = {1, 3, 5, 10};
    NameExpander names;  // defaults to canonical_name_only()
    // Cumulative token count (e.g. summed model tallies); rows record deltas.
    std::function<std::uint64_t()> token_counter;
};

// Runs every benchmark query through `search` with its holdout set. A query
// that throws is recorded as a zero-score row with the error message; the
// run continues.
using SearchFn =
    std::function<query::RankedResult(const std::string& text, const std::set<std::string>& mask)>;
EvalReport evaluate(const SearchFn& search, const std::vector<BenchmarkQuery>& queries,
                    const EvalOptions& opts = {});

}  // namespace tds::eval
