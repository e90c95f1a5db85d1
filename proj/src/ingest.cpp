#include "tds/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "icu_util.hpp"
#include "nlohmann/json.hpp"

using nlohmann::json;

namespace tds::ingest {

Fingerprint fingerprint_text(std::string_view normalized_text) {
    return Fingerprint{sha256_hex(normalized_text)};
}

// ---- unicode normalization --------------------------------------------------

std::string normalize_text(std::string_view decoded_utf8) {
    std::u16string u = icu::normalize(icu::nfc(), icu::to_utf16(decoded_utf8));

    // Strip Cc/Cf controls (keep \n for line structure until the collapse),
    // fold all Unicode whitespace to ' '.
    std::u16string kept;
    kept.reserve(u.size());
    int32_t i = 0;
    const int32_t n = static_cast<int32_t>(u.size());
    while (i < n) {
        UChar32 c;
        U16_NEXT(u.data(), i, n, c);
        if (c == u'\n') {
            kept.push_back(u'\n');
            continue;
        }
        int8_t type = u_charType(c);
        if (type == U_CONTROL_CHAR || type == U_FORMAT_CHAR) {
            if (c == u'\t') kept.push_back(u' ');
            continue;
        }
        if (u_isUWhiteSpace(c)) {
            kept.push_back(u' ');
            continue;
        }
        UChar buf[2];
        int32_t blen = 0;
        UBool err = false;
        U16_APPEND(buf, blen, 2, c, err);
        if (!err) kept.append(buf, static_cast<std::size_t>(blen));
    }
    return icu::to_utf8(kept);
}

// ---- normalize_document -----------------------------------------------------

NormalizedDocument normalize_document(std::string_view raw, FormatHint format,
                                      std::string source_path, std::string title_override) {
    std::string decoded;
    switch (format) {
        case FormatHint::plain_text:
            if (!utf8_valid(raw))
                throw UndecodableInput("not valid UTF-8 text: " +
                                       (source_path.empty() ? std::string("<inline>") : source_path));
            decoded.assign(raw);
            break;
        case FormatHint::pdf:
            decoded = pdf_extract_text(raw);  // throws UndecodableInput on bad magic
            break;
    }

    std::string lined = normalize_text(decoded);  // still has '\n'

    std::string title = collapse_ws(title_override);
    if (title.empty()) {
        for (const std::string& line : split_lines(lined)) {
            std::string t = collapse_ws(line);
            if (!t.empty()) {
                title = std::move(t);
                break;
            }
        }
    }

    std::string text = collapse_ws(lined);
    if (text.empty())
        throw EmptyDocument("no text after normalization: " +
                            (source_path.empty() ? std::string("<inline>") : source_path));

    NormalizedDocument doc;
    doc.fp = fingerprint_text(text);
    doc.doc_id = "c:" + doc.fp.short_hex();
    doc.title = title;
    doc.source_path = std::move(source_path);
    doc.text = std::move(text);
    return doc;
}

// ---- manifest ---------------------------------------------------------------

std::string Manifest::to_json_string() const {
    json j = json::object();
    for (const auto& [fp, e] : entries_) {
        j[fp] = {{"doc_id", e.doc_id},
                 {"source_path", e.source_path},
                 {"processed_at", e.processed_at}};
    }
    return j.dump(2) + "\n";
}

Manifest Manifest::from_json_string(const std::string& json_text) {
    json j = json::parse(json_text);
    if (!j.is_object()) throw Error("manifest: top level must be an object");
    Manifest m;
    for (auto& [fp, e] : j.items()) {
        if (fp.size() != 64 || fp.find_first_not_of("0123456789abcdef") != std::string::npos)
            throw Error("manifest: bad fingerprint key: " + fp);
        ManifestEntry entry;
        entry.doc_id = e.at("doc_id").get<std::string>();
        entry.source_path = e.at("source_path").get<std::string>();
        entry.processed_at = e.at("processed_at").get<std::string>();
        m.entries_[fp] = std::move(entry);
    }
    return m;
}

void Manifest::save(const std::filesystem::path& path) const {
    write_file_atomic(path.string(), to_json_string());
}

Manifest Manifest::load(const std::filesystem::path& path) {
    auto text = read_file_if_exists(path.string());
    if (!text) return Manifest{};
    return from_json_string(*text);
}

std::vector<NormalizedDocument> diff_corpus(const Manifest& manifest,
                                            const std::vector<NormalizedDocument>& docs) {
    std::vector<NormalizedDocument> fresh;
    std::set<std::string> seen;
    for (const auto& d : docs) {
        if (manifest.contains(d.fp)) continue;
        if (!seen.insert(d.fp.hex).second) continue;
        fresh.push_back(d);
    }
    return fresh;
}

// ---- cache ------------------------------------------------------------------

namespace {
std::string stage_dir_name(CacheStage stage, const std::string& extraction_tag) {
    switch (stage) {
        case CacheStage::normalized_text:
            return "normalized_text";
        case CacheStage::extraction:
            return extraction_tag.empty() ? std::string("extraction")
                                          : "extraction-" + extraction_tag;
    }
    throw Error("unknown cache stage");
}

bool payload_ok(CacheStage stage, const std::string& payload) {
    switch (stage) {
        case CacheStage::normalized_text:
            return utf8_valid(payload);
        case CacheStage::extraction: {
            json j = json::parse(payload, nullptr, false);
            return j.is_array();
        }
    }
    return false;
}
}  // namespace

std::filesystem::path CacheStore::entry_path(const Fingerprint& fp, CacheStage stage) const {
    if (fp.hex.size() != 64) throw Error("cache: bad fingerprint");
    return root_ / stage_dir_name(stage, extraction_tag_) / fp.hex.substr(0, 2) / fp.hex;
}

std::optional<std::string> CacheStore::get(const Fingerprint& fp, CacheStage stage) const {
    auto path = entry_path(fp, stage);
    auto payload = read_file_if_exists(path.string());
    if (!payload) return std::nullopt;
    if (!payload_ok(stage, *payload)) {
        warnings::emit("corrupt cache entry treated as miss: " + path.string());
        return std::nullopt;
    }
    return payload;
}

void CacheStore::put(const Fingerprint& fp, CacheStage stage, std::string_view payload) const {
    write_file_atomic(entry_path(fp, stage).string(), payload);
}

// ---- corpus scan ------------------------------------------------------------

std::vector<std::string> list_corpus_files(const std::filesystem::path& corpus) {
    namespace fs = std::filesystem;
    std::vector<std::string> files;
    if (!fs::exists(corpus)) throw Error("corpus path does not exist: " + corpus.string());
    if (fs::is_regular_file(corpus)) {
        for (const std::string& line : split_lines(read_file(corpus.string()))) {
            std::string p = trim(line);
            if (!p.empty()) files.push_back(p);
        }
        return files;
    }
    for (const auto& entry : fs::recursive_directory_iterator(corpus)) {
        if (entry.is_regular_file()) files.push_back(entry.path().string());
    }
    std::sort(files.begin(), files.end());
    return files;
}

FormatHint sniff_format(const std::filesystem::path& path, std::string_view bytes) {
    if (path.extension() == ".pdf") return FormatHint::pdf;
    if (bytes.size() >= 5 && bytes.substr(0, 5) == "%PDF-") return FormatHint::pdf;
    return FormatHint::plain_text;
}

std::vector<NormalizedDocument> load_corpus(const std::filesystem::path& corpus) {
    std::vector<NormalizedDocument> docs;
    std::set<std::string> seen;
    for (const std::string& file : list_corpus_files(corpus)) {
        std::string raw;
        try {
            raw = read_file(file);
        } catch (const Error& e) {
            warnings::emit(std::string("skipping unreadable corpus file: ") + e.what());
            continue;
        }
        try {
            NormalizedDocument doc = normalize_document(raw, sniff_format(file, raw), file);
            if (seen.insert(doc.fp.hex).second) docs.push_back(std::move(doc));
        } catch (const UndecodableInput& e) {
            warnings::emit(std::string("skipping undecodable file: ") + e.what());
        } catch (const EmptyDocument& e) {
            warnings::emit(std::string("skipping empty document: ") + e.what());
        }
    }
    return docs;
}

}  // namespace tds::ingest
