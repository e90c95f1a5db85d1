#pragma once

#include <string>
#include <vector>

namespace tds::kg {

// Canonical comparison form of a dataset surface name: Unicode NFKC +
// casefold, punctuation and whitespace stripped, digits kept.
// "CIFAR-10" and "cifar 10" both yield key "cifar10".
// Parenthetical segments become extra alias keys, so
// "Alzheimer's Disease Neuroimaging Initiative (ADNI)" yields
// key "alzheimersdiseaseneuroimaginginitiative" plus paren key "adni".
struct TitleKey {
    std::string key;                      // may be empty if nothing alnum survives
    std::vector<std::string> paren_keys;  // normalized parenthetical aliases

    // key plus paren keys, deduplicated, empties dropped.
    std::vector<std::string> all_keys() const;
};

TitleKey normalize_title(const std::string& surface_name);

// "<key_a> || <key_b>" with the two sides sorted, so the unordered pair has
// one canonical rendering (used by judge prompts and the verdict cache).
std::string title_pair_line(const std::string& name_a, const std::string& name_b);

}  // namespace tds::kg
