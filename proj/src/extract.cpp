#include "tds/extract.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "nlohmann/json.hpp"
#include "tds/prompts.hpp"

using nlohmann::json;

namespace tds::extract {

// ---- excerpting -------------------------------------------------------------

std::string focus_excerpt(const std::string& text, std::size_t char_budget) {
    if (text.size() <= char_budget) return text;

    static const char* kCues[] = {"dataset", "corpus", "benchmark"};
    const std::size_t head_len = char_budget / 2;
    std::string out = text.substr(0, head_len);

    // Windows around cue hits past the head, in document order.
    const std::size_t window = 300;
    std::string lower = ascii_lower(text);
    std::size_t cursor = head_len;
    std::size_t last_end = head_len;
    while (out.size() + 5 < char_budget) {
        std::size_t best = std::string::npos;
        for (const char* cue : kCues) {
            std::size_t hit = lower.find(cue, cursor);
            if (hit != std::string::npos && hit < best) best = hit;
        }
        if (best == std::string::npos) break;
        std::size_t start = std::max(best > window ? best - window : 0, last_end);
        std::size_t end = std::min(best + window, text.size());
        if (start > last_end) out += " … ";
        std::size_t room = char_budget > out.size() ? char_budget - out.size() : 0;
        out += text.substr(start, std::min(end - start, room));
        last_end = std::max(last_end, end);
        cursor = best + 1;
    }
    return out;
}

std::string backfill_description(const std::string& dataset_name, const std::string& doc_text) {
    if (dataset_name.empty()) return "";
    std::size_t pos = doc_text.find(dataset_name);
    if (pos == std::string::npos) return "";
    std::size_t start = pos + dataset_name.size();
    while (start < doc_text.size() && (doc_text[start] == ' ' || doc_text[start] == ','))
        ++start;
    std::size_t stop = doc_text.find('.', start);
    std::size_t end = stop == std::string::npos ? doc_text.size() : stop;
    constexpr std::size_t kMaxLen = 240;
    if (end - start > kMaxLen) end = start + kMaxLen;
    return trim(doc_text.substr(start, end - start));
}

// ---- record validation --------------------------------------------------------

namespace {

std::vector<std::string> clean_keywords(const json& arr) {
    std::vector<std::string> out;
    std::set<std::string> seen;
    if (!arr.is_array()) return out;
    for (const auto& item : arr) {
        if (!item.is_string()) continue;
        std::string kw = collapse_ws(ascii_lower(item.get<std::string>()));
        if (kw.empty()) continue;
        if (seen.insert(kw).second) out.push_back(std::move(kw));
    }
    return out;
}

// nullopt when the object is missing required fields.
std::optional<ExtractionRecord> record_from_object(const json& obj, const std::string& doc_id) {
    if (!obj.is_object()) return std::nullopt;
    ExtractionRecord r;
    if (obj.contains("dataset_name") && obj["dataset_name"].is_string())
        r.dataset_name = collapse_ws(obj["dataset_name"].get<std::string>());
    if (obj.contains("task_description") && obj["task_description"].is_string())
        r.task_description = collapse_ws(obj["task_description"].get<std::string>());
    if (obj.contains("dataset_description") && obj["dataset_description"].is_string())
        r.dataset_description = collapse_ws(obj["dataset_description"].get<std::string>());
    if (obj.contains("task_keywords")) r.task_keywords = clean_keywords(obj["task_keywords"]);
    if (r.dataset_name.empty() || r.task_description.empty()) return std::nullopt;
    r.source_doc_id = doc_id;
    return r;
}

}  // namespace

// ---- model passes -------------------------------------------------------------

bool filter_relevance(const ingest::NormalizedDocument& doc, llm::ModelClient& client,
                      const ExtractOptions& opts) {
    std::string prompt = llm::prompts::filter_prompt(doc.title,
                                                     focus_excerpt(doc.text, opts.char_budget));
    for (int attempt = 0; attempt < 2; ++attempt) {
        std::string reply = ascii_lower(trim(client.complete(
            prompt, llm::ResponseContract::boolean)));
        if (reply == "yes" || reply == "true") return true;
        if (reply == "no" || reply == "false") return false;
    }
    warnings::emit("relevance filter reply unparseable twice, keeping document: " + doc.doc_id);
    return true;
}

std::vector<ExtractionRecord> analyze(const ingest::NormalizedDocument& doc,
                                      llm::ModelClient& client, const ExtractOptions& opts) {
    std::string prompt = llm::prompts::analyst_prompt(doc.title,
                                                      focus_excerpt(doc.text, opts.char_budget));
    json arr;
    for (int attempt = 0;; ++attempt) {
        std::string reply = client.complete(prompt, llm::ResponseContract::json_records);
        arr = json::parse(reply, nullptr, false);
        if (arr.is_array()) break;
        if (attempt >= 1)
            throw llm::UnparseableResponse("analyst reply is not a JSON array for " + doc.doc_id);
    }
    std::vector<ExtractionRecord> records;
    for (const auto& obj : arr) {
        if (auto r = record_from_object(obj, doc.doc_id)) {
            records.push_back(std::move(*r));
        } else {
            warnings::emit("dropping invalid extraction record from " + doc.doc_id);
        }
    }
    return records;
}

ExtractionRecord enrich(ExtractionRecord record, llm::ModelClient& client) {
    std::string prompt = llm::prompts::enrich_prompt(record.dataset_name,
                                                     record.task_description,
                                                     record.task_keywords);
    std::string reply;
    try {
        reply = client.complete(prompt, llm::ResponseContract::keyword_list);
    } catch (const Error& e) {
        warnings::emit(std::string("keyword enrichment skipped: ") + e.what());
        return record;
    }
    json arr = json::parse(reply, nullptr, false);
    if (!arr.is_array()) {
        warnings::emit("keyword enrichment reply unparseable, record kept as-is");
        return record;
    }
    std::set<std::string> have(record.task_keywords.begin(), record.task_keywords.end());
    for (const std::string& kw : clean_keywords(arr)) {
        if (have.insert(kw).second) record.task_keywords.push_back(kw);
    }
    return record;
}

// ---- pipeline -----------------------------------------------------------------

std::vector<ExtractionRecord> extract_pipeline(const ingest::NormalizedDocument& doc,
                                               llm::ModelClient& client,
                                               const ingest::CacheStore* cache,
                                               const ExtractOptions& opts) {
    if (cache) {
        if (auto hit = cache->get(doc.fp, ingest::CacheStage::extraction)) {
            json arr = json::parse(*hit);
            std::vector<ExtractionRecord> records;
            for (const auto& obj : arr) {
                if (auto r = record_from_object(obj, doc.doc_id)) records.push_back(std::move(*r));
            }
            return records;
        }
    }

    if (!filter_relevance(doc, client, opts)) {
        if (cache) cache->put(doc.fp, ingest::CacheStage::extraction, "[]");
        return {};
    }

    std::vector<ExtractionRecord> records = analyze(doc, client, opts);
    if (records.empty())
        throw NoValidRecords("no usable extraction records for " + doc.doc_id);

    for (auto& r : records) {
        if (r.dataset_description.empty())
            r.dataset_description = backfill_description(r.dataset_name, doc.text);
        r = enrich(std::move(r), client);
    }

    if (cache) {
        json arr = json::array();
        for (const auto& r : records) arr.push_back(json::parse(record_to_json_line(r)));
        cache->put(doc.fp, ingest::CacheStage::extraction, arr.dump());
    }
    return records;
}

// ---- jsonl io -------------------------------------------------------------------

std::string record_to_json_line(const ExtractionRecord& r) {
    json j{{"dataset_name", r.dataset_name},
           {"task_description", r.task_description},
           {"task_keywords", r.task_keywords},
           {"source_doc_id", r.source_doc_id}};
    if (!r.dataset_description.empty()) j["dataset_description"] = r.dataset_description;
    return j.dump();
}

ExtractionRecord record_from_json(const std::string& line) {
    json obj = json::parse(line);
    std::string doc_id = obj.value("source_doc_id", "");
    auto r = record_from_object(obj, doc_id);
    if (!r || doc_id.empty()) throw Error("invalid extraction record line");
    return *r;
}

void write_records_jsonl(const std::filesystem::path& path,
                         const std::vector<ExtractionRecord>& records) {
    std::string out;
    for (const auto& r : records) {
        out += record_to_json_line(r);
        out += '\n';
    }
    write_file_atomic(path.string(), out);
}

std::vector<ExtractionRecord> read_records_jsonl(const std::filesystem::path& path) {
    std::vector<ExtractionRecord> records;
    for (const std::string& line : split_lines(read_file(path.string()))) {
        if (trim(line).empty()) continue;
        records.push_back(record_from_json(line));
    }
    return records;
}

}  // namespace tds::extract
