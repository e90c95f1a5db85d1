#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tds/ingest.hpp"
#include "tds/model_client.hpp"

namespace tds::extract {

struct NoValidRecords : Error {
    using Error::Error;
};

// One dataset-task usage pulled out of one document.
struct ExtractionRecord {
    std::string dataset_name;                 // verbatim surface form
    std::string dataset_description;          // may be empty
    std::string task_description;
    std::vector<std::string> task_keywords;   // lowercase, deduped, order kept
    std::string source_doc_id;
};

struct ExtractOptions {
    std::size_t char_budget = 12000;  // excerpt cap handed to the model
};

// Relevance screen. Unparseable replies retry once, then fail open (true)
// with a warning; ModelUnavailable propagates.
bool filter_relevance(const ingest::NormalizedDocument& doc, llm::ModelClient& client,
                      const ExtractOptions& opts = {});

// Analyst pass: JSON array reply -> validated records. Invalid array items
// are dropped with warnings; an unparseable reply retries once then throws
// UnparseableResponse.
std::vector<ExtractionRecord> analyze(const ingest::NormalizedDocument& doc,
                                      llm::ModelClient& client,
                                      const ExtractOptions& opts = {});

// Keyword enrichment. Existing keywords are always preserved; new ones are
// appended. Any model failure leaves the record unchanged (warning only).
ExtractionRecord enrich(ExtractionRecord record, llm::ModelClient& client);

// filter -> analyze -> description backfill -> enrich, with extraction-stage
// caching (a cache hit makes zero model calls). Filtered-out documents cache
// an empty record list; a filtered-in document with no usable records throws
// NoValidRecords and caches nothing, so the next run retries it.
std::vector<ExtractionRecord> extract_pipeline(const ingest::NormalizedDocument& doc,
                                               llm::ModelClient& client,
                                               const ingest::CacheStore* cache,
                                               const ExtractOptions& opts = {});

// Head of the text plus windows around dataset-cue hits, under the budget.
std::string focus_excerpt(const std::string& text, std::size_t char_budget);

// When the analyst gives no description: first sentence following the first
// occurrence of the dataset name in the document text (bounded), else "".
std::string backfill_description(const std::string& dataset_name, const std::string& doc_text);

// ---- jsonl io ---------------------------------------------------------------

std::string record_to_json_line(const ExtractionRecord& r);
ExtractionRecord record_from_json(const std::string& line);
void write_records_jsonl(const std::filesystem::path& path,
                         const std::vector<ExtractionRecord>& records);
std::vector<ExtractionRecord> read_records_jsonl(const std::filesystem::path& path);

}  // namespace tds::extract
