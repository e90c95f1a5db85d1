#pragma once

#include <string>
#include <vector>

namespace tds::llm::prompts {

// Bumping the version (or editing any template) changes template_hash8(),
// which is part of the extraction cache directory name.
extern const char* const kVersion;

std::string filter_prompt(const std::string& title, const std::string& excerpt);
std::string analyst_prompt(const std::string& title, const std::string& excerpt);
std::string enrich_prompt(const std::string& dataset_name, const std::string& task_description,
                          const std::vector<std::string>& keywords);
// pair_line is the canonical "<key_a> || <key_b>" form (keys sorted), so the
// same unordered pair always renders the same prompt.
std::string judge_prompt(const std::string& name_a, const std::string& desc_a,
                         const std::string& name_b, const std::string& desc_b,
                         const std::string& pair_line);

struct RerankCandidate {
    std::string id;
    std::string name;
    std::string description;
};
std::string rerank_prompt(const std::string& query, const std::vector<RerankCandidate>& head);

// 8 hex chars over all templates + version.
std::string template_hash8();

}  // namespace tds::llm::prompts
