#include "tds/model_client.hpp"

#include <algorithm>
#include <cstdio>

#include "httplib.h"
#include "nlohmann/json.hpp"
#include "tds/titlekey.hpp"

using nlohmann::json;

namespace tds::llm {

const char* contract_name(ResponseContract c) {
    switch (c) {
        case ResponseContract::boolean: return "boolean";
        case ResponseContract::json_records: return "json_records";
        case ResponseContract::keyword_list: return "keyword_list";
        case ResponseContract::verdict: return "verdict";
        case ResponseContract::rerank_list: return "rerank_list";
    }
    return "unknown";
}

namespace {
ResponseContract contract_from_name(const std::string& name) {
    for (int i = 0; i < kContractCount; ++i) {
        auto c = static_cast<ResponseContract>(i);
        if (name == contract_name(c)) return c;
    }
    throw Error("unknown response contract: " + name);
}
}  // namespace

std::string ModelClient::complete(const std::string& prompt, ResponseContract contract) {
    calls_[static_cast<int>(contract)].fetch_add(1, std::memory_order_relaxed);
    std::string reply = complete_impl(prompt, contract);
    tokens_.fetch_add((prompt.size() + reply.size() + 3) / 4, std::memory_order_relaxed);
    return reply;
}

CallCounts ModelClient::counts() const {
    CallCounts c;
    for (int i = 0; i < kContractCount; ++i) {
        c.by_contract[i] = calls_[i].load(std::memory_order_relaxed);
        c.total += c.by_contract[i];
    }
    c.token_estimate = tokens_.load(std::memory_order_relaxed);
    return c;
}

// ---- stub -------------------------------------------------------------------

StubRules StubRules::load(const std::filesystem::path& json_path) {
    json j = json::parse(read_file(json_path.string()));
    if (!j.is_object()) throw Error("stub fixtures: top level must be an object");
    StubRules r;
    for (auto& [key, value] : j.items()) {
        if (key == "filter_trigger") {
            r.filter_trigger = value.get<std::string>();
        } else if (key == "judge_pairs") {
            for (const auto& pair : value) {
                if (!pair.is_array() || pair.size() != 2)
                    throw Error("stub fixtures: judge_pairs entries must be [a, b]");
                r.judge_pairs.emplace_back(pair[0].get<std::string>(),
                                           pair[1].get<std::string>());
            }
        } else if (key == "rerank_mode") {
            r.rerank_mode = value.get<std::string>();
            if (r.rerank_mode != "identity" && r.rerank_mode != "reverse")
                throw Error("stub fixtures: rerank_mode must be identity or reverse");
        } else if (key == "rules") {
            for (const auto& rule : value) {
                r.rules.push_back(Rule{contract_from_name(rule.at("contract").get<std::string>()),
                                       rule.at("pattern").get<std::string>(),
                                       rule.at("reply").get<std::string>()});
            }
        } else {
            throw Error("stub fixtures: unknown key: " + key);
        }
    }
    return r;
}

namespace {

// Pulls out every "@@record{...}" planted in the prompt, balancing braces.
json collect_planted_records(const std::string& prompt) {
    json records = json::array();
    const std::string marker = "@@record";
    std::size_t pos = 0;
    while ((pos = prompt.find(marker, pos)) != std::string::npos) {
        std::size_t brace = prompt.find('{', pos + marker.size());
        if (brace == std::string::npos) break;
        int depth = 0;
        bool in_string = false;
        std::size_t end = brace;
        for (; end < prompt.size(); ++end) {
            char c = prompt[end];
            if (in_string) {
                if (c == '\\') ++end;
                else if (c == '"') in_string = false;
            } else if (c == '"') {
                in_string = true;
            } else if (c == '{') {
                ++depth;
            } else if (c == '}') {
                if (--depth == 0) break;
            }
        }
        if (end >= prompt.size()) break;
        json obj = json::parse(prompt.substr(brace, end - brace + 1), nullptr, false);
        if (!obj.is_discarded()) records.push_back(obj);
        pos = end + 1;
    }
    return records;
}

// Reads the "PAIR: a || b" line the judge prompt carries.
std::string extract_pair_line(const std::string& prompt) {
    std::size_t pos = prompt.find("PAIR: ");
    if (pos == std::string::npos) return "";
    std::size_t end = prompt.find('\n', pos);
    return prompt.substr(pos + 6, end == std::string::npos ? std::string::npos : end - pos - 6);
}

std::vector<std::string> extract_candidate_ids(const std::string& prompt) {
    std::vector<std::string> ids;
    for (const std::string& line : split_lines(prompt)) {
        if (line.rfind("- ", 0) != 0) continue;
        std::size_t bar = line.find(" | ");
        if (bar == std::string::npos) continue;
        ids.push_back(line.substr(2, bar - 2));
    }
    return ids;
}

std::string extract_keywords_reply(const std::string& prompt) {
    json arr = json::array();
    for (const std::string& line : split_lines(prompt)) {
        if (line.rfind("KEYWORDS: ", 0) != 0) continue;
        std::string rest = line.substr(10);
        std::size_t start = 0;
        while (start <= rest.size()) {
            std::size_t bar = rest.find(" | ", start);
            std::string item = trim(rest.substr(
                start, bar == std::string::npos ? std::string::npos : bar - start));
            if (!item.empty()) arr.push_back(item);
            if (bar == std::string::npos) break;
            start = bar + 3;
        }
        break;
    }
    return arr.dump();
}

std::string lower_find_target(const std::string& haystack, const std::string& needle) {
    return ascii_lower(haystack).find(ascii_lower(needle)) != std::string::npos ? "yes" : "no";
}

}  // namespace

std::string StubModelClient::identity() const {
    std::string fold = rules_.filter_trigger + "|" + rules_.rerank_mode;
    for (const auto& [a, b] : rules_.judge_pairs) fold += "|" + a + "~" + b;
    for (const auto& r : rules_.rules)
        fold += "|" + std::string(contract_name(r.contract)) + "~" + r.pattern + "~" + r.reply;
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(fold)));
    return std::string("stub:") + std::string(buf).substr(0, 8);
}

std::string StubModelClient::complete_impl(const std::string& prompt,
                                           ResponseContract contract) {
    for (const auto& rule : rules_.rules) {
        if (rule.contract == contract && prompt.find(rule.pattern) != std::string::npos)
            return rule.reply;
    }
    switch (contract) {
        case ResponseContract::boolean: {
            // Scan only the document part, not the instruction preamble.
            std::size_t start = prompt.find("\nTITLE: ");
            return lower_find_target(
                start == std::string::npos ? prompt : prompt.substr(start),
                rules_.filter_trigger);
        }
        case ResponseContract::json_records:
            return collect_planted_records(prompt).dump();
        case ResponseContract::keyword_list:
            return extract_keywords_reply(prompt);
        case ResponseContract::verdict: {
            std::string pair_line = extract_pair_line(prompt);
            for (const auto& [a, b] : rules_.judge_pairs) {
                if (kg::title_pair_line(a, b) == pair_line) return "same";
            }
            return "different";
        }
        case ResponseContract::rerank_list: {
            std::vector<std::string> ids = extract_candidate_ids(prompt);
            if (rules_.rerank_mode == "reverse") std::reverse(ids.begin(), ids.end());
            return json(ids).dump();
        }
    }
    throw Error("stub: unknown contract");
}

// ---- http adapter -----------------------------------------------------------

HttpModelClient::HttpModelClient(std::string endpoint, std::string model, std::string api_key,
                                 int timeout_seconds)
    : endpoint_(std::move(endpoint)),
      model_(std::move(model)),
      api_key_(std::move(api_key)),
      timeout_seconds_(timeout_seconds) {}

std::string HttpModelClient::identity() const { return "http:" + model_ + "@" + endpoint_; }

std::string HttpModelClient::complete_impl(const std::string& prompt,
                                           ResponseContract contract) {
    netstat::note("llm completion");
    httplib::Client client(endpoint_);
    client.set_connection_timeout(timeout_seconds_, 0);
    client.set_read_timeout(timeout_seconds_, 0);

    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    json body{{"model", model_}, {"contract", contract_name(contract)}, {"prompt", prompt}};
    auto res = client.Post("/v1/complete", headers, body.dump(), "application/json");
    if (!res) throw ModelUnavailable("model endpoint unreachable: " + endpoint_);
    if (res->status != 200)
        throw ModelUnavailable("model endpoint returned HTTP " + std::to_string(res->status));

    json reply = json::parse(res->body, nullptr, false);
    if (reply.is_discarded() || !reply.is_object() || !reply.contains("text") ||
        !reply["text"].is_string())
        throw UnparseableResponse("malformed completion envelope from " + endpoint_);
    return reply["text"].get<std::string>();
}

}  // namespace tds::llm
