#include "tds/evalbench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "nlohmann/json.hpp"
#include "tds/titlekey.hpp"

using nlohmann::json;

namespace tds::eval {

// ---- benchmark loading --------------------------------------------------------

std::vector<BenchmarkQuery> load_benchmark(const std::filesystem::path& path) {
    std::vector<BenchmarkQuery> queries;
    std::set<std::string> seen_ids;
    std::size_t line_no = 0;
    for (const std::string& line : split_lines(read_file(path.string()))) {
        ++line_no;
        if (trim(line).empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object())
            throw Error("benchmark line " + std::to_string(line_no) + ": not a JSON object");
        try {
            BenchmarkQuery q;
            q.query_id = j.at("query_id").get<std::string>();
            q.task_text = j.at("task_text").get<std::string>();
            if (q.query_id.empty() || trim(q.task_text).empty())
                throw Error("empty query_id or task_text");
            if (!seen_ids.insert(q.query_id).second)
                throw Error("duplicate query_id " + q.query_id);
            for (const auto& g : j.at("gold")) {
                GoldAnswer gold;
                gold.canonical_name = g.at("canonical_name").get<std::string>();
                if (gold.canonical_name.empty()) throw Error("empty gold canonical_name");
                if (g.contains("aliases"))
                    for (const auto& a : g["aliases"]) gold.aliases.insert(a.get<std::string>());
                if (g.contains("substitutes"))
                    for (const auto& s : g["substitutes"])
                        gold.substitutes.insert(s.get<std::string>());
                q.gold.push_back(std::move(gold));
            }
            if (q.gold.empty()) throw Error("no gold answers");
            if (j.contains("held_out_doc_ids"))
                for (const auto& d : j["held_out_doc_ids"])
                    q.held_out_doc_ids.insert(d.get<std::string>());
            queries.push_back(std::move(q));
        } catch (const json::exception& e) {
            throw Error("benchmark line " + std::to_string(line_no) + ": " + e.what());
        } catch (const Error& e) {
            throw Error("benchmark line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return queries;
}

// ---- matching -------------------------------------------------------------------

MatchLevel match_level(const std::string& predicted_name, const GoldAnswer& gold) {
    std::string key = kg::normalize_title(predicted_name).key;
    if (key.empty()) return MatchLevel::none;
    if (key == kg::normalize_title(gold.canonical_name).key) return MatchLevel::canonical;
    for (const auto& alias : gold.aliases)
        if (key == kg::normalize_title(alias).key) return MatchLevel::alias;
    for (const auto& sub : gold.substitutes)
        if (key == kg::normalize_title(sub).key) return MatchLevel::substitute;
    return MatchLevel::none;
}

NameExpander canonical_name_only() {
    return [](const query::ResultEntry& e) { return std::vector<std::string>{e.canonical_name}; };
}

NameExpander names_from_graph(const kg::KnowledgeGraph& g) {
    return [&g](const query::ResultEntry& e) {
        std::vector<std::string> names{e.canonical_name};
        auto it = g.datasets.find(e.canonical_id);
        if (it != g.datasets.end())
            for (const auto& alias : it->second.aliases)
                if (alias != e.canonical_name) names.push_back(alias);
        return names;
    };
}

namespace {
MatchLevel entry_level(const query::ResultEntry& entry, const std::vector<GoldAnswer>& gold,
                       const NameExpander& names) {
    MatchLevel best = MatchLevel::none;
    for (const std::string& name : names(entry)) {
        for (const GoldAnswer& g : gold) {
            MatchLevel level = match_level(name, g);
            if (static_cast<int>(level) > static_cast<int>(best)) best = level;
        }
    }
    return best;
}
}  // namespace

int hit_at_k(const query::RankedResult& result, const std::vector<GoldAnswer>& gold,
             std::size_t k, const NameExpander& names) {
    std::size_t limit = std::min(k, result.entries.size());
    for (std::size_t i = 0; i < limit; ++i) {
        if (entry_level(result.entries[i], gold, names) != MatchLevel::none) return 1;
    }
    return 0;
}

int exact_match(const query::RankedResult& result, const std::vector<GoldAnswer>& gold,
                const NameExpander& names) {
    if (result.entries.empty()) return 0;
    MatchLevel level = entry_level(result.entries.front(), gold, names);
    return (level == MatchLevel::canonical || level == MatchLevel::alias) ? 1 : 0;
}

// ---- token f1 ---------------------------------------------------------------------

namespace {
std::vector<std::string> f1_tokens(const std::string& s) {
    std::vector<std::string> tokens;
    std::string cur;
    for (unsigned char c : ascii_lower(s)) {
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(c));
        } else if (!cur.empty()) {
            tokens.push_back(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(cur);
    return tokens;
}
}  // namespace

double token_f1(const std::string& predicted, const std::string& gold) {
    std::vector<std::string> p = f1_tokens(predicted);
    std::vector<std::string> g = f1_tokens(gold);
    if (p.empty() && g.empty()) return 1.0;
    if (p.empty() || g.empty()) return 0.0;

    std::map<std::string, int> gold_counts;
    for (const auto& t : g) ++gold_counts[t];
    std::size_t overlap = 0;
    for (const auto& t : p) {
        auto it = gold_counts.find(t);
        if (it != gold_counts.end() && it->second > 0) {
            --it->second;
            ++overlap;
        }
    }
    if (overlap == 0) return 0.0;
    double precision = static_cast<double>(overlap) / static_cast<double>(p.size());
    double recall = static_cast<double>(overlap) / static_cast<double>(g.size());
    return 2.0 * precision * recall / (precision + recall);
}

double best_token_f1(const query::RankedResult& result, const std::vector<GoldAnswer>& gold) {
    if (result.entries.empty()) return 0.0;
    double best = 0.0;
    for (const GoldAnswer& g : gold)
        best = std::max(best, token_f1(result.entries.front().canonical_name, g.canonical_name));
    return best;
}

// ---- harness ----------------------------------------------------------------------

EvalReport evaluate(const SearchFn& search, const std::vector<BenchmarkQuery>& queries,
                    const EvalOptions& opts) {
    NameExpander names = opts.names ? opts.names : canonical_name_only();
    EvalReport report;
    double seconds_sum = 0.0;

    for (const BenchmarkQuery& q : queries) {
        PerQueryRow row;
        row.query_id = q.query_id;
        std::uint64_t tokens_before = opts.token_counter ? opts.token_counter() : 0;
        auto t0 = std::chrono::steady_clock::now();
        try {
            query::RankedResult result = search(q.task_text, q.held_out_doc_ids);
            row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                              .count();
            for (std::size_t k : opts.ks) row.hit[k] = hit_at_k(result, q.gold, k, names);
            row.em = exact_match(result, q.gold, names);
            row.f1 = best_token_f1(result, q.gold);
            for (std::size_t i = 0; i < result.entries.size(); ++i) {
                if (entry_level(result.entries[i], q.gold, names) != MatchLevel::none) {
                    row.rank_of_first_hit = i + 1;
                    break;
                }
            }
        } catch (const std::exception& e) {
            row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                              .count();
            row.error = e.what();
            for (std::size_t k : opts.ks) row.hit[k] = 0;
            ++report.failures;
            warnings::emit("benchmark query " + q.query_id + " failed: " + row.error);
        }
        if (opts.token_counter) row.tokens = opts.token_counter() - tokens_before;
        report.total_tokens += row.tokens;
        seconds_sum += row.seconds;
        report.per_query.push_back(std::move(row));
    }

    const double n = static_cast<double>(queries.empty() ? 1 : queries.size());
    for (std::size_t k : opts.ks) {
        double sum = 0.0;
        for (const auto& row : report.per_query) sum += row.hit.at(k);
        report.hit_rate[k] = sum / n;
    }
    double em_sum = 0.0, f1_sum = 0.0;
    for (const auto& row : report.per_query) {
        em_sum += row.em;
        f1_sum += row.f1;
    }
    report.em = em_sum / n;
    report.f1 = f1_sum / n;
    report.mean_seconds = seconds_sum / n;
    return report;
}

// ---- report output -------------------------------------------------------------------

std::string EvalReport::to_json_string() const {
    json j;
    json hr = json::object();
    for (const auto& [k, v] : hit_rate) hr["hit_rate@" + std::to_string(k)] = v;
    j["summary"] = {{"hit_rate", std::move(hr)},
                    {"exact_match", em},
                    {"token_f1", f1},
                    {"mean_seconds", mean_seconds},
                    {"total_tokens", total_tokens},
                    {"queries", per_query.size()},
                    {"failures", failures}};
    json rows = json::array();
    for (const auto& row : per_query) {
        json r{{"query_id", row.query_id},
               {"exact_match", row.em},
               {"token_f1", row.f1},
               {"rank_of_first_hit", row.rank_of_first_hit},
               {"seconds", row.seconds},
               {"tokens", row.tokens}};
        for (const auto& [k, hit] : row.hit) r["hit@" + std::to_string(k)] = hit;
        if (!row.error.empty()) r["error"] = row.error;
        rows.push_back(std::move(r));
    }
    j["per_query"] = std::move(rows);
    return j.dump(2) + "\n";
}

std::string EvalReport::to_table() const {
    std::ostringstream out;
    out << "queries: " << per_query.size() << "  failures: " << failures << "\n";
    for (const auto& [k, v] : hit_rate) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "hit_rate@%-3zu %.4f\n", k, v);
        out << buf;
    }
    char buf[128];
    std::snprintf(buf, sizeof buf, "exact_match  %.4f\ntoken_f1     %.4f\nmean_seconds %.4f\n",
                  em, f1, mean_seconds);
    out << buf;
    out << "total_tokens " << total_tokens << "\n";
    return out.str();
}

}  // namespace tds::eval
