#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "tds/common.hpp"

namespace tds::llm {

struct ModelUnavailable : Error {
    using Error::Error;
};
struct UnparseableResponse : Error {
    using Error::Error;
};

// What shape of reply the caller will parse. Doubles as the routing key for
// the stub and as the per-role call counter index.
enum class ResponseContract : int {
    boolean = 0,       // relevance filter: yes / no
    json_records = 1,  // analyst: JSON array of extraction records
    keyword_list = 2,  // enrich: JSON array of keywords
    verdict = 3,       // resolution judge: same / different
    rerank_list = 4,   // reranker: JSON array of candidate ids
};
constexpr int kContractCount = 5;

const char* contract_name(ResponseContract c);

// Plain-value snapshot of a client's counters (the live tally is atomic).
struct CallCounts {
    std::array<std::uint64_t, kContractCount> by_contract{};
    std::uint64_t total = 0;
    std::uint64_t token_estimate = 0;

    std::uint64_t of(ResponseContract c) const {
        return by_contract[static_cast<int>(c)];
    }
};

class ModelClient {
public:
    virtual ~ModelClient() = default;

    // Single completion. Throws ModelUnavailable when the backend cannot
    // answer; never retries internally.
    std::string complete(const std::string& prompt, ResponseContract contract);

    // Stable identifier recorded in snapshot metadata.
    virtual std::string identity() const = 0;

    CallCounts counts() const;

protected:
    virtual std::string complete_impl(const std::string& prompt, ResponseContract contract) = 0;

private:
    std::array<std::atomic<std::uint64_t>, kContractCount> calls_{};
    std::atomic<std::uint64_t> tokens_{0};
};

// ---- stub -------------------------------------------------------------------

// Fixture-driven offline client. Replies are pure functions of the prompt,
// so repeated runs are byte-identical and no network is ever touched.
struct StubRules {
    // boolean: reply yes iff the prompt contains this (case-insensitive).
    std::string filter_trigger = "dataset";
    // verdict: pairs of surface names that should judge as "same".
    std::vector<std::pair<std::string, std::string>> judge_pairs;
    // rerank_list: "identity" keeps prompt order, "reverse" flips it.
    std::string rerank_mode = "identity";

    // Highest priority: exact-substring overrides, first match wins.
    struct Rule {
        ResponseContract contract;
        std::string pattern;  // substring of the prompt
        std::string reply;
    };
    std::vector<Rule> rules;

    static StubRules load(const std::filesystem::path& json_path);
};

class StubModelClient : public ModelClient {
public:
    StubModelClient() = default;
    explicit StubModelClient(StubRules rules) : rules_(std::move(rules)) {}

    std::string identity() const override;
    const StubRules& rules() const { return rules_; }

protected:
    std::string complete_impl(const std::string& prompt, ResponseContract contract) override;

private:
    StubRules rules_;
};

// ---- http adapter -----------------------------------------------------------

// POSTs {model, contract, prompt} as JSON and expects {"text": "..."}.
// Credentials come from the caller (environment-sourced); they are held in
// memory only and never serialized anywhere.
class HttpModelClient : public ModelClient {
public:
    HttpModelClient(std::string endpoint, std::string model, std::string api_key,
                    int timeout_seconds = 60);

    std::string identity() const override;

protected:
    std::string complete_impl(const std::string& prompt, ResponseContract contract) override;

private:
    std::string endpoint_;  // http://host:port
    std::string model_;
    std::string api_key_;
    int timeout_seconds_;
};

}  // namespace tds::llm
