#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tds/common.hpp"

namespace tds::ingest {

struct UndecodableInput : Error {
    using Error::Error;
};
struct EmptyDocument : Error {
    using Error::Error;
};

enum class FormatHint { plain_text, pdf };

// SHA-256 over the UTF-8 bytes of normalized text; lowercase hex.
struct Fingerprint {
    std::string hex;

    bool operator==(const Fingerprint&) const = default;
    auto operator<=>(const Fingerprint&) const = default;
    // First 16 hex chars — the short form used inside entity ids.
    std::string short_hex() const { return hex.substr(0, 16); }
};

Fingerprint fingerprint_text(std::string_view normalized_text);

struct NormalizedDocument {
    std::string doc_id;       // "c:" + first 16 hex of fingerprint
    std::string title;        // first non-empty line, whitespace-collapsed
    std::string source_path;  // where the raw bytes came from ("" if inline)
    std::string text;         // NFC, controls stripped, whitespace collapsed
    Fingerprint fp;
};

// Decode (UTF-8 check or PDF text extraction), NFC-normalize, strip control
// characters, collapse whitespace, fingerprint. Same text in different
// formats converges to one fingerprint. Throws UndecodableInput on a format
// mismatch and EmptyDocument when nothing survives normalization.
NormalizedDocument normalize_document(std::string_view raw, FormatHint format,
                                      std::string source_path = "",
                                      std::string title_override = "");

// Unicode NFC + control strip + whitespace collapse (the text half of
// normalize_document, reusable on already-decoded strings).
std::string normalize_text(std::string_view decoded_utf8);

// Text-operator scan over a PDF's content streams (FlateDecode supported).
// Declared here, defined in pdf_text.cpp.
std::string pdf_extract_text(std::string_view bytes);

// ---- manifest ---------------------------------------------------------------

struct ManifestEntry {
    std::string doc_id;
    std::string source_path;
    std::string processed_at;  // ISO-8601 UTC
};

// Keyed by full fingerprint hex. JSON on disk; written atomically.
class Manifest {
public:
    bool contains(const Fingerprint& fp) const { return entries_.count(fp.hex) > 0; }
    void add(const Fingerprint& fp, ManifestEntry entry) { entries_[fp.hex] = std::move(entry); }
    const std::map<std::string, ManifestEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }

    std::string to_json_string() const;
    static Manifest from_json_string(const std::string& json_text);
    void save(const std::filesystem::path& path) const;
    static Manifest load(const std::filesystem::path& path);  // missing file -> empty

private:
    std::map<std::string, ManifestEntry> entries_;
};

// Docs whose fingerprint is absent from the manifest, input order preserved.
std::vector<NormalizedDocument> diff_corpus(const Manifest& manifest,
                                            const std::vector<NormalizedDocument>& docs);

// ---- cache ------------------------------------------------------------------

enum class CacheStage { normalized_text, extraction };

// Content-addressed store: <root>/<stage>/<first 2 hex>/<fingerprint>.
// A payload that fails the stage's schema check reads as a miss (plus a
// warning) so a corrupt entry can never poison a rebuild.
class CacheStore {
public:
    explicit CacheStore(std::filesystem::path root) : root_(std::move(root)) {}

    // Extraction entries live under "extraction-<tag>" so changing prompt
    // templates invalidates them wholesale.
    void set_extraction_tag(std::string tag) { extraction_tag_ = std::move(tag); }

    std::optional<std::string> get(const Fingerprint& fp, CacheStage stage) const;
    void put(const Fingerprint& fp, CacheStage stage, std::string_view payload) const;
    std::filesystem::path entry_path(const Fingerprint& fp, CacheStage stage) const;
    const std::filesystem::path& root() const { return root_; }

private:
    std::filesystem::path root_;
    std::string extraction_tag_;
};

// ---- corpus scan ------------------------------------------------------------

// Regular files under the corpus root (recursive), sorted by path. A corpus
// path that is itself a file is treated as a one-line-per-path listing.
std::vector<std::string> list_corpus_files(const std::filesystem::path& corpus);

FormatHint sniff_format(const std::filesystem::path& path, std::string_view bytes);

// Load + normalize every corpus file. Per-file decode failures are warnings,
// not fatal; duplicates (same fingerprint) keep the first occurrence.
std::vector<NormalizedDocument> load_corpus(const std::filesystem::path& corpus);

}  // namespace tds::ingest
