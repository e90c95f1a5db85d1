#include "tds/prompts.hpp"

#include <cstdio>
#include <sstream>

#include "tds/common.hpp"

namespace tds::llm::prompts {

const char* const kVersion = "v1";

namespace {

const char* kFilterTemplate =
    "You screen research documents for reusable machine-learning datasets.\n"
    "Answer yes only if the document introduces or uses a concrete, named dataset.\n"
    "Answer with a single word: yes or no.\n";

const char* kAnalystTemplate =
    "You extract dataset usage from a research document.\n"
    "For every dataset the document uses or introduces, report:\n"
    "  dataset_name        verbatim surface name\n"
    "  dataset_description short description if the document gives one\n"
    "  task_description    one sentence: what task the dataset is used for\n"
    "  task_keywords       2-5 lowercase keywords for that task\n"
    "Reply with a JSON array of objects using exactly those fields.\n"
    "Reply [] if no dataset is actually used.\n";

const char* kEnrichTemplate =
    "You refine task keywords for a dataset usage record.\n"
    "Keep every existing keyword and append missing ones (lowercase).\n"
    "Reply with a JSON array of keywords.\n";

const char* kJudgeTemplate =
    "You decide whether two dataset mentions refer to the same underlying dataset.\n"
    "Different versions or subsets of one collection count as the same dataset.\n"
    "Answer with a single word: same or different.\n";

const char* kRerankTemplate =
    "You rank candidate datasets by fitness for a research task.\n"
    "Reply with a JSON array of the candidate ids, best first, using every id exactly once.\n";

}  // namespace

std::string filter_prompt(const std::string& title, const std::string& excerpt) {
    std::ostringstream out;
    out << kFilterTemplate << "\nTITLE: " << title << "\nDOCUMENT:\n" << excerpt << "\n";
    return out.str();
}

std::string analyst_prompt(const std::string& title, const std::string& excerpt) {
    std::ostringstream out;
    out << kAnalystTemplate << "\nTITLE: " << title << "\nDOCUMENT:\n" << excerpt << "\n";
    return out.str();
}

std::string enrich_prompt(const std::string& dataset_name, const std::string& task_description,
                          const std::vector<std::string>& keywords) {
    std::ostringstream out;
    out << kEnrichTemplate << "\nDATASET: " << dataset_name << "\nTASK: " << task_description
        << "\nKEYWORDS: ";
    for (std::size_t i = 0; i < keywords.size(); ++i) {
        if (i) out << " | ";
        out << keywords[i];
    }
    out << "\n";
    return out.str();
}

std::string judge_prompt(const std::string& name_a, const std::string& desc_a,
                         const std::string& name_b, const std::string& desc_b,
                         const std::string& pair_line) {
    std::ostringstream out;
    out << kJudgeTemplate << "\nPAIR: " << pair_line << "\nA: " << name_a;
    if (!desc_a.empty()) out << " — " << desc_a;
    out << "\nB: " << name_b;
    if (!desc_b.empty()) out << " — " << desc_b;
    out << "\n";
    return out.str();
}

std::string rerank_prompt(const std::string& query, const std::vector<RerankCandidate>& head) {
    std::ostringstream out;
    out << kRerankTemplate << "\nQUERY: " << query << "\nCANDIDATES:\n";
    for (const auto& c : head) {
        std::string desc = c.description.substr(0, 200);
        out << "- " << c.id << " | " << c.name;
        if (!desc.empty()) out << " | " << desc;
        out << "\n";
    }
    return out.str();
}

std::string template_hash8() {
    std::string all = std::string(kVersion) + kFilterTemplate + kAnalystTemplate +
                      kEnrichTemplate + kJudgeTemplate + kRerankTemplate;
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(all)));
    return std::string(buf).substr(0, 8);
}

}  // namespace tds::llm::prompts
