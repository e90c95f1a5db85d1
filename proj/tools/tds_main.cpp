#include <cstdio>
#include <iostream>
#include <mutex>
#include <sstream>

#include "CLI11.hpp"
#include "httplib.h"
#include "tds/pipeline.hpp"

using namespace tds;

namespace {

struct CommonOpts {
    std::string config;
    std::string corpus;
    std::string store;
    std::string cache;
    std::string alias_seeds;
    std::string fixtures;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config, "JSON config file");
    cmd->add_option("--corpus", o.corpus, "corpus directory (or file listing one path per line)");
    cmd->add_option("--store", o.store, "store directory");
    cmd->add_option("--cache", o.cache, "cache directory");
    cmd->add_option("--alias-seeds", o.alias_seeds, "alias seed groups (JSON array of arrays)");
    cmd->add_option("--fixtures", o.fixtures, "stub model fixture rules (JSON)");
}

// Flags > environment > config file > defaults.
sys::SystemConfig load_config(const CommonOpts& o) {
    sys::SystemConfig cfg = sys::SystemConfig::load(o.config);
    if (!o.corpus.empty()) cfg.corpus = o.corpus;
    if (!o.store.empty()) cfg.store = o.store;
    if (!o.cache.empty()) cfg.cache = o.cache;
    if (!o.alias_seeds.empty()) cfg.alias_seed_file = o.alias_seeds;
    if (!o.fixtures.empty()) cfg.stub.fixtures = o.fixtures;
    return cfg;
}

void print_result_table(const query::RankedResult& r, std::size_t top_n) {
    std::size_t n = top_n == 0 ? r.entries.size() : std::min(top_n, r.entries.size());
    if (n == 0) {
        std::cout << "(no results)\n";
        return;
    }
    for (std::size_t i = 0; i < n; ++i) {
        const auto& e = r.entries[i];
        std::printf("%3zu. %-40s %.6f  %s\n", i + 1, e.canonical_name.c_str(), e.score,
                    e.canonical_id.c_str());
    }
    if (!r.ppr_converged) std::cout << "note: graph expansion hit the iteration cap\n";
    if (r.rerank_fallback) std::cout << "note: rerank reply unusable, graph order kept\n";
}

int run_serve(const sys::SystemConfig& cfg, const std::string& bind) {
    std::string host = "127.0.0.1";
    int port = 8080;
    if (auto colon = bind.rfind(':'); colon != std::string::npos) {
        host = bind.substr(0, colon);
        port = std::stoi(bind.substr(colon + 1));
    } else if (!bind.empty()) {
        host = bind;
    }

    sys::StoreSnapshot snap = sys::StoreSnapshot::load(cfg.store);
    sys::Clients clients = sys::Clients::make(cfg);
    query::QueryConfig qcfg = cfg.query;
    qcfg.rerank_enabled = false;  // applied per request below
    query::Engine engine(snap.graph, snap.task_index, *clients.embedder, nullptr, qcfg);
    std::mutex search_mutex;

    httplib::Server server;
    server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
        res.set_content("{\"status\":\"ok\"}\n", "application/json");
    });
    server.Get("/search", [&](const httplib::Request& req, httplib::Response& res) {
        std::string q = req.get_param_value("q");
        if (q.empty()) {
            res.status = 400;
            res.set_content("{\"error\":\"missing q parameter\"}\n", "application/json");
            return;
        }
        std::size_t top_n = 10;
        if (req.has_param("top_n")) top_n = std::stoul(req.get_param_value("top_n"));
        bool explain = req.get_param_value("explain") == "1";
        bool rerank = req.get_param_value("rerank") == "1";
        try {
            std::lock_guard<std::mutex> lock(search_mutex);
            query::RankedResult result = engine.search(q);
            if (rerank)
                query::rerank_head(result, q, *clients.reranker, cfg.query.k_rerank, snap.graph);
            res.set_content(query::result_to_json_string(result, q, top_n, explain),
                            "application/json");
        } catch (const Error& e) {
            res.status = 422;
            res.set_content(std::string("{\"error\":\"") + e.what() + "\"}\n",
                            "application/json");
        }
    });

    std::cerr << "serving on http://" << host << ":" << port << "\n";
    if (!server.listen(host, port)) {
        std::cerr << "error: failed to bind " << host << ":" << port << "\n";
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    warnings::set_echo_stderr(true);

    CLI::App app{"task-oriented dataset search over a document corpus"};
    app.require_subcommand(1);

    CommonOpts build_opts;
    CLI::App* build = app.add_subcommand("build", "build a fresh store from the corpus");
    add_common(build, build_opts);

    CommonOpts update_opts;
    CLI::App* update = app.add_subcommand("update", "integrate documents new to the manifest");
    add_common(update, update_opts);

    CommonOpts query_opts;
    std::vector<std::string> query_words;
    std::size_t query_top_n = 10;
    bool query_json = false;
    bool query_explain = false;
    bool query_rerank = false;
    bool query_no_rerank = false;
    CLI::App* query_cmd = app.add_subcommand("query", "rank datasets for a task description");
    add_common(query_cmd, query_opts);
    query_cmd->add_option("text", query_words, "task description")->required();
    query_cmd->add_option("--top-n", query_top_n, "entries to print (0 = all)");
    query_cmd->add_flag("--json", query_json, "print the full JSON result");
    query_cmd->add_flag("--explain", query_explain, "include supporting tasks and sources");
    query_cmd->add_flag("--rerank", query_rerank, "rerank the head with the model");
    query_cmd->add_flag("--no-rerank", query_no_rerank, "disable reranking");

    CommonOpts eval_opts;
    std::string eval_benchmark;
    std::string eval_out;
    bool eval_rerank = false;
    bool eval_no_rerank = false;
    CLI::App* eval_cmd = app.add_subcommand("eval", "run a benchmark against the store");
    add_common(eval_cmd, eval_opts);
    eval_cmd->add_option("--benchmark", eval_benchmark, "benchmark JSONL")->required();
    eval_cmd->add_option("--out", eval_out, "directory for report.json / report.txt");
    eval_cmd->add_flag("--rerank", eval_rerank, "rerank the head with the model");
    eval_cmd->add_flag("--no-rerank", eval_no_rerank, "disable reranking");

    CommonOpts stats_opts;
    CLI::App* stats_cmd = app.add_subcommand("stats", "print store statistics");
    add_common(stats_cmd, stats_opts);

    CommonOpts serve_opts;
    std::string serve_bind = "127.0.0.1:8080";
    CLI::App* serve_cmd = app.add_subcommand("serve", "HTTP search endpoint over the store");
    add_common(serve_cmd, serve_opts);
    serve_cmd->add_option("--bind", serve_bind, "host:port to listen on");

    CLI11_PARSE(app, argc, argv);

    try {
        if (build->parsed()) {
            std::cout << sys::cmd_build(load_config(build_opts)).to_json_string();
        } else if (update->parsed()) {
            std::cout << sys::cmd_update(load_config(update_opts)).to_json_string();
        } else if (query_cmd->parsed()) {
            sys::SystemConfig cfg = load_config(query_opts);
            if (query_rerank) cfg.query.rerank_enabled = true;
            if (query_no_rerank) cfg.query.rerank_enabled = false;
            std::string text;
            for (const auto& w : query_words) {
                if (!text.empty()) text += ' ';
                text += w;
            }
            sys::QueryOutput out = sys::cmd_query(cfg, text, query_top_n, query_explain);
            if (query_json)
                std::cout << out.json;
            else
                print_result_table(out.result, query_top_n);
        } else if (eval_cmd->parsed()) {
            sys::SystemConfig cfg = load_config(eval_opts);
            if (eval_rerank) cfg.query.rerank_enabled = true;
            if (eval_no_rerank) cfg.query.rerank_enabled = false;
            eval::EvalReport report = sys::cmd_eval(cfg, eval_benchmark, eval_out);
            std::cout << report.to_table();
        } else if (stats_cmd->parsed()) {
            std::cout << sys::cmd_stats(load_config(stats_opts)).to_json_string();
        } else if (serve_cmd->parsed()) {
            return run_serve(load_config(serve_opts), serve_bind);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
