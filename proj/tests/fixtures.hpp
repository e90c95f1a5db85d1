#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace testfx {

// Self-deleting scratch directory for one test case.
class TmpDir {
public:
    TmpDir();
    ~TmpDir();
    TmpDir(const TmpDir&) = delete;
    TmpDir& operator=(const TmpDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

// Independent SHA-256 (FIPS 180-4), used as the oracle for the library's
// OpenSSL-backed digest.
std::string ref_sha256_hex(std::string_view data);

// One extraction record planted into synthetic document text as an
// "@@record{...}" marker the offline analyst stub echoes back.
struct PlantedRecord {
    std::string dataset_name;
    std::string dataset_description;
    std::string task_description;
    std::vector<std::string> keywords;
};

std::string planted_marker(const PlantedRecord& r);
// Title line, intro, markers near the head, then the body.
std::string make_doc_text(const std::string& title, const std::vector<PlantedRecord>& records,
                          const std::string& body = "");

// Tiny one-stream PDFs: each line shown with Tj, separated by T*.
std::string make_simple_pdf(const std::vector<std::string>& lines);
std::string make_flate_pdf(const std::vector<std::string>& lines);

void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace testfx
