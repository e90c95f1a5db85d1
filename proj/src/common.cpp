#include "tds/common.hpp"

#include <openssl/evp.h>

#include <atomic>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>

namespace tds {

// ---- warnings -------------------------------------------------------------

namespace warnings {
namespace {
std::mutex mu;
std::vector<std::string> log;
bool echo = true;
}  // namespace

void emit(const std::string& message) {
    std::lock_guard<std::mutex> lock(mu);
    log.push_back(message);
    if (echo) std::fprintf(stderr, "warning: %s\n", message.c_str());
}

std::vector<std::string> snapshot() {
    std::lock_guard<std::mutex> lock(mu);
    return log;
}

std::size_t count() {
    std::lock_guard<std::mutex> lock(mu);
    return log.size();
}

void reset() {
    std::lock_guard<std::mutex> lock(mu);
    log.clear();
}

void set_echo_stderr(bool on) {
    std::lock_guard<std::mutex> lock(mu);
    echo = on;
}

}  // namespace warnings

// ---- network accounting ---------------------------------------------------

namespace netstat {
namespace {
std::atomic<std::uint64_t> ops{0};
}

void note(const std::string&) { ops.fetch_add(1, std::memory_order_relaxed); }
std::uint64_t count() { return ops.load(std::memory_order_relaxed); }
void reset() { ops.store(0, std::memory_order_relaxed); }

}  // namespace netstat

// ---- hashing --------------------------------------------------------------

std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx) throw Error("sha256: EVP_MD_CTX_new failed");
    if (EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) != 1 ||
        EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
        EVP_MD_CTX_free(ctx);
        throw Error("sha256: digest failed");
    }
    EVP_MD_CTX_free(ctx);
    static const char* hexdig = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hexdig[digest[i] >> 4]);
        out.push_back(hexdig[digest[i] & 0xf]);
    }
    return out;
}

// ---- string helpers -------------------------------------------------------

std::string ascii_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return out;
}

namespace {
bool is_ascii_space(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}
}  // namespace

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && is_ascii_space(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && is_ascii_space(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string collapse_ws(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool in_space = false;
    for (unsigned char c : s) {
        if (is_ascii_space(c)) {
            in_space = true;
            continue;
        }
        if (in_space && !out.empty()) out.push_back(' ');
        in_space = false;
        out.push_back(static_cast<char>(c));
    }
    return out;
}

std::vector<std::string> split_lines(std::string_view s) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == '\n') {
            std::string_view line = s.substr(start, i - start);
            if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
            lines.emplace_back(line);
            start = i + 1;
        }
    }
    if (!lines.empty() && lines.back().empty()) lines.pop_back();
    return lines;
}

namespace {
// Returns sequence length (1..4) if a valid UTF-8 sequence starts at i, else 0.
int utf8_seq_len(std::string_view s, std::size_t i) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    if (c < 0x80) return 1;
    int len, lo = 0x80, hi = 0xBF;
    std::uint32_t cp;
    if (c >= 0xC2 && c <= 0xDF) { len = 2; cp = c & 0x1F; }
    else if (c >= 0xE0 && c <= 0xEF) {
        len = 3; cp = c & 0x0F;
        if (c == 0xE0) lo = 0xA0;
        if (c == 0xED) hi = 0x9F;
    } else if (c >= 0xF0 && c <= 0xF4) {
        len = 4; cp = c & 0x07;
        if (c == 0xF0) lo = 0x90;
        if (c == 0xF4) hi = 0x8F;
    } else {
        return 0;
    }
    if (i + static_cast<std::size_t>(len) > s.size()) return 0;
    for (int k = 1; k < len; ++k) {
        unsigned char cc = static_cast<unsigned char>(s[i + k]);
        int klo = (k == 1) ? lo : 0x80;
        int khi = (k == 1) ? hi : 0xBF;
        if (cc < klo || cc > khi) return 0;
        cp = (cp << 6) | (cc & 0x3F);
    }
    (void)cp;
    return len;
}
}  // namespace

bool utf8_valid(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size()) {
        int len = utf8_seq_len(s, i);
        if (len == 0) return false;
        i += static_cast<std::size_t>(len);
    }
    return true;
}

std::string scrub_utf8(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        int len = utf8_seq_len(s, i);
        if (len == 0) {
            ++i;
            continue;
        }
        out.append(s.substr(i, static_cast<std::size_t>(len)));
        i += static_cast<std::size_t>(len);
    }
    return out;
}

// ---- small file io ----------------------------------------------------------

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::optional<std::string> read_file_if_exists(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file_atomic(const std::string& path, std::string_view content) {
    namespace fs = std::filesystem;
    fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write file: " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw Error("short write: " + tmp.string());
    }
    fs::rename(tmp, target);
}

std::string iso8601_utc_now() {
    std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace tds
