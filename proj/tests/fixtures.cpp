#include "fixtures.hpp"

#include <stdlib.h>
#include <zlib.h>

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "nlohmann/json.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace testfx {

TmpDir::TmpDir() {
    std::string tmpl = (fs::temp_directory_path() / "tds-test-XXXXXX").string();
    std::vector<char> buf(tmpl.begin(), tmpl.end());
    buf.push_back('\0');
    if (!mkdtemp(buf.data())) throw std::runtime_error("mkdtemp failed");
    path_ = buf.data();
}

TmpDir::~TmpDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

void write_file(const fs::path& path, std::string_view content) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

// ---- reference sha-256 --------------------------------------------------------

namespace {

constexpr std::uint32_t kK[64] = {
    0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1, 0x923f82a4,
    0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3, 0x72be5d74, 0x80deb1fe,
    0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786, 0x0fc19dc6, 0x240ca1cc, 0x2de92c6f,
    0x4a7484aa, 0x5cb0a9dc, 0x76f988da, 0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7,
    0xc6e00bf3, 0xd5a79147, 0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc,
    0x53380d13, 0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
    0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070, 0x19a4c116,
    0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a, 0x5b9cca4f, 0x682e6ff3,
    0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208, 0x90befffa, 0xa4506ceb, 0xbef9a3f7,
    0xc67178f2};

inline std::uint32_t rotr(std::uint32_t x, unsigned n) { return (x >> n) | (x << (32 - n)); }

}  // namespace

std::string ref_sha256_hex(std::string_view data) {
    std::uint32_t h[8] = {0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a,
                          0x510e527f, 0x9b05688c, 0x1f83d9ab, 0x5be0cd19};

    std::string padded(data);
    std::uint64_t bit_len = static_cast<std::uint64_t>(data.size()) * 8;
    padded.push_back(static_cast<char>(0x80));
    while (padded.size() % 64 != 56) padded.push_back('\0');
    for (int i = 7; i >= 0; --i)
        padded.push_back(static_cast<char>((bit_len >> (i * 8)) & 0xff));

    for (std::size_t block = 0; block < padded.size(); block += 64) {
        std::uint32_t w[64];
        for (int t = 0; t < 16; ++t) {
            w[t] = (static_cast<std::uint32_t>(static_cast<unsigned char>(padded[block + t * 4])) << 24) |
                   (static_cast<std::uint32_t>(static_cast<unsigned char>(padded[block + t * 4 + 1])) << 16) |
                   (static_cast<std::uint32_t>(static_cast<unsigned char>(padded[block + t * 4 + 2])) << 8) |
                   static_cast<std::uint32_t>(static_cast<unsigned char>(padded[block + t * 4 + 3]));
        }
        for (int t = 16; t < 64; ++t) {
            std::uint32_t s0 = rotr(w[t - 15], 7) ^ rotr(w[t - 15], 18) ^ (w[t - 15] >> 3);
            std::uint32_t s1 = rotr(w[t - 2], 17) ^ rotr(w[t - 2], 19) ^ (w[t - 2] >> 10);
            w[t] = w[t - 16] + s0 + w[t - 7] + s1;
        }
        std::uint32_t a = h[0], b = h[1], c = h[2], d = h[3];
        std::uint32_t e = h[4], f = h[5], g = h[6], hh = h[7];
        for (int t = 0; t < 64; ++t) {
            std::uint32_t S1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
            std::uint32_t ch = (e & f) ^ (~e & g);
            std::uint32_t temp1 = hh + S1 + ch + kK[t] + w[t];
            std::uint32_t S0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
            std::uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
            std::uint32_t temp2 = S0 + maj;
            hh = g;
            g = f;
            f = e;
            e = d + temp1;
            d = c;
            c = b;
            b = a;
            a = temp1 + temp2;
        }
        h[0] += a; h[1] += b; h[2] += c; h[3] += d;
        h[4] += e; h[5] += f; h[6] += g; h[7] += hh;
    }

    char out[65];
    for (int i = 0; i < 8; ++i) std::snprintf(out + i * 8, 9, "%08x", h[i]);
    return std::string(out, 64);
}

// ---- synthetic documents --------------------------------------------------------

std::string planted_marker(const PlantedRecord& r) {
    json j;
    j["dataset_name"] = r.dataset_name;
    if (!r.dataset_description.empty()) j["dataset_description"] = r.dataset_description;
    j["task_description"] = r.task_description;
    j["task_keywords"] = r.keywords;
    return "@@record" + j.dump();
}

std::string make_doc_text(const std::string& title, const std::vector<PlantedRecord>& records,
                          const std::string& body) {
    std::string text = title + "\n\n";
    text += "This report describes experiments on a benchmark dataset collection.\n";
    for (const auto& r : records) text += planted_marker(r) + "\n";
    if (!body.empty()) text += "\n" + body + "\n";
    return text;
}

// ---- pdf builders ---------------------------------------------------------------

namespace {

std::string pdf_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '(' || c == ')' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    return out;
}

std::string content_stream(const std::vector<std::string>& lines) {
    std::string content = "BT /F1 12 Tf\n";
    for (const auto& line : lines) content += "(" + pdf_escape(line) + ") Tj T*\n";
    content += "ET\n";
    return content;
}

std::string wrap_pdf(const std::string& stream_bytes, const char* extra_dict) {
    std::string pdf = "%PDF-1.4\n";
    pdf += "1 0 obj\n<< /Length " + std::to_string(stream_bytes.size()) + extra_dict +
           " >>\nstream\n";
    pdf += stream_bytes;
    pdf += "\nendstream\nendobj\n%%EOF\n";
    return pdf;
}

}  // namespace

std::string make_simple_pdf(const std::vector<std::string>& lines) {
    return wrap_pdf(content_stream(lines), "");
}

std::string make_flate_pdf(const std::vector<std::string>& lines) {
    std::string content = content_stream(lines);
    uLongf bound = compressBound(static_cast<uLong>(content.size()));
    std::string packed(bound, '\0');
    if (compress2(reinterpret_cast<Bytef*>(packed.data()), &bound,
                  reinterpret_cast<const Bytef*>(content.data()),
                  static_cast<uLong>(content.size()), 9) != Z_OK)
        throw std::runtime_error("zlib compress failed");
    packed.resize(bound);
    return wrap_pdf(packed, " /Filter /FlateDecode");
}

}  // namespace testfx
