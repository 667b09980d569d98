#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace cosum {

// Built-in English function-word list, already in tokenizer form
// (apostrophes removed: "dont", "isnt").
const std::vector<std::string>& default_stoplist();
std::string_view default_stoplist_version();
bool is_default_stopword(std::string_view token);

// One word per line; blank lines and lines starting with '#' are skipped.
// Entries are normalized with the tokenizer.
std::vector<std::string> read_stoplist(std::istream& in);
std::vector<std::string> read_stoplist_file(const std::string& path);

}  // namespace cosum
