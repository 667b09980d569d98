#include "cosum/stoplist.hpp"

#include <fstream>
#include <istream>

#include "cosum/error.hpp"
#include "cosum/tokenize.hpp"

namespace cosum {

namespace {

// v1: 175 entries.
constexpr std::string_view kWords[] = {
    "a",          "about",    "above",   "after",    "again",    "against",  "all",
    "also",       "am",       "an",      "and",      "any",      "are",      "arent",
    "as",         "at",       "be",      "because",  "been",     "before",   "being",
    "below",      "between",  "both",    "but",      "by",       "can",      "cannot",
    "cant",       "could",    "couldnt", "did",      "didnt",    "do",       "does",
    "doesnt",     "doing",    "dont",    "down",     "during",   "each",     "either",
    "else",       "ever",     "every",   "few",      "for",      "from",     "further",
    "had",        "hadnt",    "has",     "hasnt",    "have",     "havent",   "having",
    "he",         "hed",      "hell",    "her",      "here",     "heres",    "hers",
    "herself",    "hes",      "him",     "himself",  "his",      "how",      "hows",
    "however",    "i",        "id",      "if",       "ill",      "im",       "in",
    "into",       "is",       "isnt",    "it",       "its",      "itself",   "ive",
    "just",       "lets",     "may",     "me",       "might",    "more",     "most",
    "must",       "mustnt",   "my",      "myself",   "neither",  "no",       "nor",
    "not",        "now",      "of",      "off",      "on",       "once",     "only",
    "or",         "other",    "ought",   "our",      "ours",     "ourselves", "out",
    "over",       "own",      "same",    "shall",    "she",      "shed",     "shes",
    "should",     "shouldnt", "so",      "some",     "such",     "than",     "that",
    "thats",      "the",      "their",   "theirs",   "them",     "themselves", "then",
    "there",      "theres",   "these",   "they",     "theyd",    "theyll",   "theyre",
    "theyve",     "this",     "those",   "through",  "to",       "too",      "under",
    "until",      "up",       "upon",    "us",       "very",     "was",      "wasnt",
    "we",         "wed",      "well",    "were",     "werent",   "weve",     "what",
    "whats",      "when",     "where",   "which",    "while",    "who",      "whom",
    "whose",      "why",      "will",    "with",     "wont",     "would",    "wouldnt",
};

}  // namespace

const std::vector<std::string>& default_stoplist() {
  static const std::vector<std::string> words(std::begin(kWords), std::end(kWords));
  return words;
}

std::string_view default_stoplist_version() { return "en-function-words-v1"; }

bool is_default_stopword(std::string_view token) {
  static const std::unordered_set<std::string_view> set(std::begin(kWords), std::end(kWords));
  return set.count(token) > 0;
}

std::vector<std::string> read_stoplist(std::istream& in) {
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::string word = normalize_phrase(line);
    if (!word.empty()) out.push_back(std::move(word));
  }
  return out;
}

std::vector<std::string> read_stoplist_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("io_error", "cannot open stoplist '" + path + "'");
  return read_stoplist(in);
}

}  // namespace cosum
