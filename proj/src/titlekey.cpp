#include "tds/titlekey.hpp"

#include <algorithm>

#include "icu_util.hpp"

namespace tds::kg {

namespace {

// NFKC + casefold, then keep only alphanumeric code points.
std::string fold_alnum(const std::string& s) {
    std::u16string u = icu::normalize(icu::nfkc_casefold(), icu::to_utf16(s));
    std::u16string kept;
    kept.reserve(u.size());
    int32_t i = 0;
    const int32_t n = static_cast<int32_t>(u.size());
    while (i < n) {
        UChar32 c;
        U16_NEXT(u.data(), i, n, c);
        if (!u_isalnum(c)) continue;
        UChar buf[2];
        int32_t blen = 0;
        UBool err = false;
        U16_APPEND(buf, blen, 2, c, err);
        if (!err) kept.append(buf, static_cast<std::size_t>(blen));
    }
    return icu::to_utf8(kept);
}

}  // namespace

TitleKey normalize_title(const std::string& surface_name) {
    // Split parenthetical segments out of the main name first.
    std::string main_part;
    std::vector<std::string> paren_parts;
    int depth = 0;
    std::string current;
    for (char c : surface_name) {
        if (c == '(') {
            if (depth == 0) {
                current.clear();
            } else {
                current.push_back(c);
            }
            ++depth;
        } else if (c == ')') {
            if (depth > 0) --depth;
            if (depth == 0) {
                paren_parts.push_back(current);
                current.clear();
            } else if (depth > 0) {
                current.push_back(c);
            }
        } else if (depth > 0) {
            current.push_back(c);
        } else {
            main_part.push_back(c);
        }
    }
    if (depth > 0 && !current.empty()) paren_parts.push_back(current);  // unclosed paren

    TitleKey tk;
    tk.key = fold_alnum(main_part);
    for (const std::string& p : paren_parts) {
        std::string k = fold_alnum(p);
        if (!k.empty() && k != tk.key) tk.paren_keys.push_back(k);
    }
    if (tk.key.empty() && !tk.paren_keys.empty()) {
        tk.key = tk.paren_keys.front();
        tk.paren_keys.erase(tk.paren_keys.begin());
    }
    return tk;
}

std::vector<std::string> TitleKey::all_keys() const {
    std::vector<std::string> keys;
    if (!key.empty()) keys.push_back(key);
    for (const std::string& p : paren_keys)
        if (!p.empty() && std::find(keys.begin(), keys.end(), p) == keys.end())
            keys.push_back(p);
    return keys;
}

std::string title_pair_line(const std::string& name_a, const std::string& name_b) {
    std::string ka = normalize_title(name_a).key;
    std::string kb = normalize_title(name_b).key;
    if (kb < ka) std::swap(ka, kb);
    return ka + " || " + kb;
}

}  // namespace tds::kg
