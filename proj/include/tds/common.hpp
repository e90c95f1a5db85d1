#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tds {

// Base for everything thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---- warnings -------------------------------------------------------------
// Non-fatal conditions (cache corruption, enrich failures, skipped pairs)
// land here so batch runs keep going but nothing is silently swallowed.
namespace warnings {

void emit(const std::string& message);
std::vector<std::string> snapshot();
std::size_t count();
void reset();
void set_echo_stderr(bool on);

}  // namespace warnings

// ---- network accounting ---------------------------------------------------
// Every code path that would touch the network must pass through note().
// Stub clients never call it; tests assert count() stays at zero.
namespace netstat {

void note(const std::string& what);
std::uint64_t count();
void reset();

}  // namespace netstat

// ---- hashing --------------------------------------------------------------

// FNV-1a 64-bit with explicit constants (std::hash is platform-defined and
// would break build determinism).
constexpr std::uint64_t fnv1a64(std::string_view s,
                                std::uint64_t h = 1469598103934665603ULL) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

// SHA-256 of the given bytes, lowercase hex (64 chars).
std::string sha256_hex(std::string_view bytes);

// ---- string helpers -------------------------------------------------------

std::string ascii_lower(std::string_view s);
std::string trim(std::string_view s);
// Collapse any run of ASCII whitespace to a single space and trim.
std::string collapse_ws(std::string_view s);
std::vector<std::string> split_lines(std::string_view s);
bool utf8_valid(std::string_view s);
// Drop bytes that do not form valid UTF-8 sequences.
std::string scrub_utf8(std::string_view s);

// ---- small file io ----------------------------------------------------------

std::string read_file(const std::string& path);
std::optional<std::string> read_file_if_exists(const std::string& path);
// Write via sibling temp file + rename so readers never see partial content.
void write_file_atomic(const std::string& path, std::string_view content);

// Current UTC time, ISO-8601 seconds resolution ("2026-08-19T12:00:00Z").
std::string iso8601_utc_now();

}  // namespace tds
