#include <zlib.h>

#include <cctype>
#include <optional>
#include <string>
#include <vector>

#include "tds/ingest.hpp"

namespace tds::ingest {

namespace {

std::optional<std::string> try_inflate(std::string_view in) {
    z_stream zs{};
    if (inflateInit(&zs) != Z_OK) return std::nullopt;
    zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(in.data()));
    zs.avail_in = static_cast<uInt>(in.size());
    std::string out;
    char buf[16384];
    int rc = Z_OK;
    while (rc == Z_OK) {
        zs.next_out = reinterpret_cast<Bytef*>(buf);
        zs.avail_out = sizeof buf;
        rc = inflate(&zs, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&zs);
            return std::nullopt;
        }
        out.append(buf, sizeof buf - zs.avail_out);
        if (rc == Z_STREAM_END) break;
        if (zs.avail_in == 0 && zs.avail_out != 0) break;  // truncated input
    }
    inflateEnd(&zs);
    if (out.empty()) return std::nullopt;
    return out;
}

// UTF-16BE with BOM -> UTF-8 (PDF text strings may use this encoding).
std::string utf16be_to_utf8(std::string_view s) {
    std::string out;
    std::size_t i = 2;  // skip BOM
    while (i + 1 < s.size()) {
        std::uint32_t cp = (static_cast<unsigned char>(s[i]) << 8) |
                           static_cast<unsigned char>(s[i + 1]);
        i += 2;
        if (cp >= 0xD800 && cp <= 0xDBFF && i + 1 < s.size()) {
            std::uint32_t lo = (static_cast<unsigned char>(s[i]) << 8) |
                               static_cast<unsigned char>(s[i + 1]);
            if (lo >= 0xDC00 && lo <= 0xDFFF) {
                cp = 0x10000 + ((cp - 0xD800) << 10) + (lo - 0xDC00);
                i += 2;
            }
        }
        if (cp < 0x80) {
            out.push_back(static_cast<char>(cp));
        } else if (cp < 0x800) {
            out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        } else if (cp < 0x10000) {
            out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        } else {
            out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        }
    }
    return out;
}

std::string decode_pdf_string(std::string_view s) {
    if (s.size() >= 2 && static_cast<unsigned char>(s[0]) == 0xFE &&
        static_cast<unsigned char>(s[1]) == 0xFF)
        return utf16be_to_utf8(s);
    return std::string(s);
}

bool is_delim(char c) {
    return c == '(' || c == ')' || c == '<' || c == '>' || c == '[' || c == ']' ||
           c == '{' || c == '}' || c == '/' || c == '%';
}

// Extracts the text shown by a single decoded content stream.
class ContentScanner {
public:
    explicit ContentScanner(std::string_view content) : s_(content) {}

    std::string run() {
        while (pos_ < s_.size()) step();
        return out_;
    }

private:
    std::string_view s_;
    std::size_t pos_ = 0;
    std::string out_;
    std::vector<std::string> strings_;       // collected since last operator
    std::vector<double> kerning_;            // numbers inside the current array
    bool in_array_ = false;

    void append_show(const std::string& text) {
        if (!out_.empty() && out_.back() != '\n' && out_.back() != ' ') out_.push_back(' ');
        out_ += text;
    }

    void step() {
        char c = s_[pos_];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++pos_;
        } else if (c == '%') {
            while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
        } else if (c == '(') {
            strings_.push_back(decode_pdf_string(read_literal()));
        } else if (c == '<') {
            if (pos_ + 1 < s_.size() && s_[pos_ + 1] == '<') {
                pos_ += 2;  // dictionary open, no text content
            } else {
                strings_.push_back(decode_pdf_string(read_hex()));
            }
        } else if (c == '>') {
            pos_ += (pos_ + 1 < s_.size() && s_[pos_ + 1] == '>') ? 2 : 1;
        } else if (c == '[') {
            in_array_ = true;
            strings_.clear();
            kerning_.clear();
            ++pos_;
        } else if (c == ']') {
            in_array_ = false;
            ++pos_;
        } else if (c == '/') {
            ++pos_;
            while (pos_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[pos_])) &&
                   !is_delim(s_[pos_]))
                ++pos_;
        } else if (c == '{' || c == '}') {
            ++pos_;
        } else {
            handle_token(read_token());
        }
    }

    std::string read_token() {
        std::size_t start = pos_;
        while (pos_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[pos_])) &&
               !is_delim(s_[pos_]))
            ++pos_;
        return std::string(s_.substr(start, pos_ - start));
    }

    void handle_token(const std::string& tok) {
        if (tok.empty()) {
            ++pos_;
            return;
        }
        char c0 = tok[0];
        if (c0 == '+' || c0 == '-' || c0 == '.' || std::isdigit(static_cast<unsigned char>(c0))) {
            if (in_array_) {
                try {
                    kerning_.push_back(std::stod(tok));
                } catch (...) {
                }
            }
            return;
        }
        if (tok == "Tj") {
            flush_strings(false);
        } else if (tok == "TJ") {
            flush_strings(true);
        } else if (tok == "'" || tok == "\"") {
            out_.push_back('\n');
            flush_strings(false);
        } else if (tok == "Td" || tok == "TD" || tok == "T*" || tok == "ET") {
            if (!out_.empty() && out_.back() != '\n') out_.push_back('\n');
            strings_.clear();
        } else {
            // Any other operator consumes its operands.
            strings_.clear();
            kerning_.clear();
        }
    }

    void flush_strings(bool with_kerning_gaps) {
        std::string text;
        for (std::size_t i = 0; i < strings_.size(); ++i) {
            text += strings_[i];
            // A large negative TJ displacement is a word gap.
            if (with_kerning_gaps && i < kerning_.size() && kerning_[i] < -150) text += ' ';
        }
        if (!text.empty()) append_show(text);
        strings_.clear();
        kerning_.clear();
    }

    std::string read_literal() {
        ++pos_;  // '('
        std::string out;
        int depth = 1;
        while (pos_ < s_.size()) {
            char c = s_[pos_++];
            if (c == '\\' && pos_ < s_.size()) {
                char e = s_[pos_++];
                switch (e) {
                    case 'n': out.push_back('\n'); break;
                    case 'r': out.push_back('\r'); break;
                    case 't': out.push_back('\t'); break;
                    case 'b': out.push_back('\b'); break;
                    case 'f': out.push_back('\f'); break;
                    case '(': out.push_back('('); break;
                    case ')': out.push_back(')'); break;
                    case '\\': out.push_back('\\'); break;
                    case '\r':
                        if (pos_ < s_.size() && s_[pos_] == '\n') ++pos_;
                        break;  // line continuation
                    case '\n': break;
                    default:
                        if (e >= '0' && e <= '7') {
                            int val = e - '0';
                            for (int k = 0; k < 2 && pos_ < s_.size() && s_[pos_] >= '0' &&
                                            s_[pos_] <= '7';
                                 ++k)
                                val = val * 8 + (s_[pos_++] - '0');
                            out.push_back(static_cast<char>(val & 0xFF));
                        } else {
                            out.push_back(e);
                        }
                }
            } else if (c == '(') {
                ++depth;
                out.push_back(c);
            } else if (c == ')') {
                if (--depth == 0) break;
                out.push_back(c);
            } else {
                out.push_back(c);
            }
        }
        return out;
    }

    std::string read_hex() {
        ++pos_;  // '<'
        std::string out;
        int hi = -1;
        while (pos_ < s_.size() && s_[pos_] != '>') {
            char c = s_[pos_++];
            int v;
            if (c >= '0' && c <= '9') v = c - '0';
            else if (c >= 'a' && c <= 'f') v = c - 'a' + 10;
            else if (c >= 'A' && c <= 'F') v = c - 'A' + 10;
            else continue;
            if (hi < 0) {
                hi = v;
            } else {
                out.push_back(static_cast<char>((hi << 4) | v));
                hi = -1;
            }
        }
        if (hi >= 0) out.push_back(static_cast<char>(hi << 4));
        if (pos_ < s_.size()) ++pos_;  // '>'
        return out;
    }
};

}  // namespace

std::string pdf_extract_text(std::string_view bytes) {
    if (bytes.size() < 5 || bytes.substr(0, 5) != "%PDF-")
        throw UndecodableInput("missing %PDF- header");

    std::string text;
    std::size_t search = 0;
    while (true) {
        std::size_t s = bytes.find("stream", search);
        if (s == std::string_view::npos) break;
        std::size_t data_start = s + 6;
        if (data_start < bytes.size() && bytes[data_start] == '\r') ++data_start;
        if (data_start < bytes.size() && bytes[data_start] == '\n') ++data_start;
        std::size_t e = bytes.find("endstream", data_start);
        if (e == std::string_view::npos) break;
        search = e + 9;

        std::size_t data_end = e;
        while (data_end > data_start &&
               (bytes[data_end - 1] == '\n' || bytes[data_end - 1] == '\r'))
            --data_end;

        std::string_view raw = bytes.substr(data_start, data_end - data_start);
        std::string decoded;
        if (auto inflated = try_inflate(raw)) {
            decoded = std::move(*inflated);
        } else {
            decoded.assign(raw);
        }
        if (decoded.find("BT") == std::string::npos) continue;

        std::string part = ContentScanner(decoded).run();
        if (part.empty()) continue;
        if (!text.empty() && text.back() != '\n') text.push_back('\n');
        text += part;
    }
    return scrub_utf8(text);
}

}  // namespace tds::ingest
