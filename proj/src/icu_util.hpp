#pragma once

#include <unicode/uchar.h>
#include <unicode/unorm2.h>
#include <unicode/ustring.h>
#include <unicode/utf16.h>

#include <string>
#include <string_view>

#include "tds/common.hpp"

namespace tds::icu {

inline std::u16string to_utf16(std::string_view utf8) {
    std::u16string out(utf8.size() + 1, u'\0');
    UErrorCode status = U_ZERO_ERROR;
    int32_t len = 0;
    u_strFromUTF8(reinterpret_cast<UChar*>(out.data()), static_cast<int32_t>(out.size()),
                  &len, utf8.data(), static_cast<int32_t>(utf8.size()), &status);
    if (U_FAILURE(status))
        throw Error(std::string("utf8 -> utf16 failed: ") + u_errorName(status));
    out.resize(static_cast<std::size_t>(len));
    return out;
}

inline std::string to_utf8(const std::u16string& utf16) {
    std::string out(utf16.size() * 4 + 1, '\0');
    UErrorCode status = U_ZERO_ERROR;
    int32_t len = 0;
    u_strToUTF8(out.data(), static_cast<int32_t>(out.size()), &len,
                reinterpret_cast<const UChar*>(utf16.data()),
                static_cast<int32_t>(utf16.size()), &status);
    if (U_FAILURE(status))
        throw Error(std::string("utf16 -> utf8 failed: ") + u_errorName(status));
    out.resize(static_cast<std::size_t>(len));
    return out;
}

inline std::u16string normalize(const UNormalizer2* norm, const std::u16string& in) {
    UErrorCode status = U_ZERO_ERROR;
    int32_t need = unorm2_normalize(norm, reinterpret_cast<const UChar*>(in.data()),
                                    static_cast<int32_t>(in.size()), nullptr, 0, &status);
    if (status != U_BUFFER_OVERFLOW_ERROR && U_FAILURE(status))
        throw Error(std::string("unicode normalize failed: ") + u_errorName(status));
    status = U_ZERO_ERROR;
    std::u16string out(static_cast<std::size_t>(need), u'\0');
    unorm2_normalize(norm, reinterpret_cast<const UChar*>(in.data()),
                     static_cast<int32_t>(in.size()),
                     reinterpret_cast<UChar*>(out.data()), need, &status);
    if (U_FAILURE(status))
        throw Error(std::string("unicode normalize failed: ") + u_errorName(status));
    return out;
}

inline const UNormalizer2* nfc() {
    UErrorCode status = U_ZERO_ERROR;
    const UNormalizer2* n = unorm2_getNFCInstance(&status);
    if (U_FAILURE(status)) throw Error("ICU NFC instance unavailable");
    return n;
}

inline const UNormalizer2* nfkc_casefold() {
    UErrorCode status = U_ZERO_ERROR;
    const UNormalizer2* n = unorm2_getNFKCCasefoldInstance(&status);
    if (U_FAILURE(status)) throw Error("ICU NFKC_Casefold instance unavailable");
    return n;
}

}  // namespace tds::icu
