#include "cosum/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "cosum/error.hpp"
#include "cosum/hash.hpp"

namespace cosum {
namespace {

using namespace std::chrono;

bool read_int(std::string_view text, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > text.size()) return false;
  for (std::size_t i = pos; i < pos + len; ++i) {
    if (!std::isdigit(static_cast<unsigned char>(text[i]))) return false;
  }
  auto res = std::from_chars(text.data() + pos, text.data() + pos + len, out);
  return res.ec == std::errc();
}

std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
  };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

}  // namespace

std::optional<TimePoint> parse_iso8601(std::string_view text) {
  text = trim(text);
  int y = 0, mo = 0, d = 0;
  if (!read_int(text, 0, 4, y) || text.size() < 10 || text[4] != '-' ||
      !read_int(text, 5, 2, mo) || text[7] != '-' || !read_int(text, 8, 2, d)) {
    return std::nullopt;
  }
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                           day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  TimePoint t = sys_days{ymd};
  if (text.size() == 10) return t;

  if (text[10] != 'T' && text[10] != 't' && text[10] != ' ') return std::nullopt;
  int hh = 0, mm = 0, ss = 0;
  if (!read_int(text, 11, 2, hh) || text.size() < 16 || text[13] != ':' ||
      !read_int(text, 14, 2, mm)) {
    return std::nullopt;
  }
  std::size_t pos = 16;
  if (pos < text.size() && text[pos] == ':') {
    if (!read_int(text, pos + 1, 2, ss)) return std::nullopt;
    pos += 3;
    if (pos < text.size() && (text[pos] == '.' || text[pos] == ',')) {
      ++pos;
      const std::size_t start = pos;
      while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
      if (pos == start) return std::nullopt;
    }
  }
  if (hh > 23 || mm > 59 || ss > 60) return std::nullopt;
  t += hours{hh} + minutes{mm} + seconds{ss};

  if (pos == text.size()) return t;
  if ((text[pos] == 'Z' || text[pos] == 'z') && pos + 1 == text.size()) return t;
  if (text[pos] == '+' || text[pos] == '-') {
    const int sign = text[pos] == '+' ? 1 : -1;
    int oh = 0, om = 0;
    if (!read_int(text, pos + 1, 2, oh)) return std::nullopt;
    std::size_t p = pos + 3;
    if (p < text.size() && text[p] == ':') ++p;
    if (p < text.size()) {
      if (!read_int(text, p, 2, om)) return std::nullopt;
      p += 2;
    }
    if (p != text.size() || oh > 23 || om > 59) return std::nullopt;
    return t - sign * (hours{oh} + minutes{om});
  }
  return std::nullopt;
}

std::string format_iso8601(TimePoint t) {
  const auto day_point = floor<days>(t);
  const year_month_day ymd{day_point};
  const hh_mm_ss<seconds> tod{t - day_point};
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02ldZ",
                static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()), static_cast<long>(tod.hours().count()),
                static_cast<long>(tod.minutes().count()),
                static_cast<long>(tod.seconds().count()));
  return buf;
}

std::string_view to_string(UnitKind kind) {
  switch (kind) {
    case UnitKind::article: return "article";
    case UnitKind::paragraph: return "paragraph";
    case UnitKind::headline: return "headline";
  }
  return "article";
}

UnitKind parse_unit_kind(std::string_view text) {
  if (text == "article") return UnitKind::article;
  if (text == "paragraph") return UnitKind::paragraph;
  if (text == "headline") return UnitKind::headline;
  throw Error("invalid_argument", "unknown unit kind '" + std::string(text) + "'");
}

Corpus::Corpus(std::string name, std::vector<Document> documents, nlohmann::json provenance)
    : name_(std::move(name)), documents_(std::move(documents)),
      provenance_(std::move(provenance)) {
  index_.reserve(documents_.size());
  for (std::size_t i = 0; i < documents_.size(); ++i) {
    const Document& doc = documents_[i];
    if (!index_.emplace(doc.id, i).second) {
      throw Error("duplicate_id", "duplicate document id '" + doc.id + "'");
    }
    if (doc.body.empty() && (!doc.title || doc.title->empty())) {
      throw Error("invalid_document", "document '" + doc.id + "' has neither body nor title");
    }
  }
}

std::optional<std::size_t> Corpus::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::string Corpus::content_hash() const {
  ContentHasher h;
  h.field(std::uint64_t{documents_.size()});
  for (const Document& doc : documents_) {
    h.field(doc.id).field(doc.source);
    h.field(doc.published_at ? format_iso8601(*doc.published_at) : std::string("-"));
    h.field(std::uint64_t{doc.title.has_value()});
    h.field(doc.title.value_or(""));
    h.field(doc.body);
  }
  return h.hex_digest();
}

namespace {

Document parse_record(const nlohmann::json& rec) {
  if (!rec.is_object()) throw std::invalid_argument("record is not a JSON object");
  Document doc;
  auto id = rec.find("id");
  if (id == rec.end() || !id->is_string() || id->get_ref<const std::string&>().empty()) {
    throw std::invalid_argument("missing or non-string 'id'");
  }
  doc.id = id->get<std::string>();
  for (const auto& [key, value] : rec.items()) {
    if (key == "id") continue;
    if (key == "body" || key == "title" || key == "source" || key == "published_at") {
      if (value.is_null()) continue;
      if (!value.is_string()) throw std::invalid_argument("field '" + key + "' must be a string");
      const auto& s = value.get_ref<const std::string&>();
      if (key == "body") {
        doc.body = s;
      } else if (key == "title") {
        doc.title = s;
      } else if (key == "source") {
        doc.source = s;
      } else {
        doc.published_at = parse_iso8601(s);
        if (!doc.published_at) throw std::invalid_argument("unparseable published_at '" + s + "'");
      }
    } else {
      doc.extra[key] = value;
    }
  }
  if (doc.body.empty() && (!doc.title || doc.title->empty())) {
    throw std::invalid_argument("record has neither body nor title");
  }
  return doc;
}

}  // namespace

Corpus ingest_jsonl(std::istream& in, const IngestOptions& options, IngestReport* report) {
  IngestReport local;
  IngestReport& rep = report ? *report : local;
  rep = IngestReport{};

  std::vector<Document> docs;
  std::unordered_map<std::string, std::size_t> seen;
  nlohmann::json unknown_fields = nlohmann::json::array();

  auto fail = [&](std::size_t line_no, std::string message) {
    if (options.fail_fast) {
      throw Error("ingest_error", "line " + std::to_string(line_no) + ": " + message);
    }
    rep.issues.push_back({line_no, std::move(message)});
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    ++rep.lines_read;
    Document doc;
    try {
      doc = parse_record(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      fail(line_no, std::string("malformed JSON: ") + e.what());
      continue;
    } catch (const std::invalid_argument& e) {
      fail(line_no, e.what());
      continue;
    }
    if (seen.count(doc.id)) {
      fail(line_no, "duplicate id '" + doc.id + "' (first seen on line " +
                        std::to_string(seen[doc.id]) + ")");
      continue;
    }
    seen.emplace(doc.id, line_no);
    for (const auto& [key, _] : doc.extra.items()) {
      if (std::find(unknown_fields.begin(), unknown_fields.end(), key) == unknown_fields.end()) {
        unknown_fields.push_back(key);
      }
    }
    docs.push_back(std::move(doc));
  }
  rep.accepted = docs.size();
  if (docs.empty()) throw Error("empty_corpus", "empty corpus");

  nlohmann::json provenance = {
      {"source_path", options.source_path},
      {"document_count", docs.size()},
      {"lines_read", rep.lines_read},
      {"rejected_lines", rep.issues.size()},
      {"unknown_fields", unknown_fields},
  };
  return Corpus(options.name, std::move(docs), std::move(provenance));
}

Corpus ingest_jsonl_file(const std::string& path, IngestOptions options, IngestReport* report) {
  std::ifstream in(path);
  if (!in) throw Error("io_error", "cannot open '" + path + "'");
  if (options.source_path.empty()) options.source_path = path;
  return ingest_jsonl(in, options, report);
}

nlohmann::json document_to_json(const Document& doc) {
  nlohmann::json rec = nlohmann::json::object();
  rec["id"] = doc.id;
  if (doc.title) rec["title"] = *doc.title;
  rec["body"] = doc.body;
  if (!doc.source.empty()) rec["source"] = doc.source;
  if (doc.published_at) rec["published_at"] = format_iso8601(*doc.published_at);
  for (const auto& [key, value] : doc.extra.items()) rec[key] = value;
  return rec;
}

void write_jsonl(std::ostream& out, const Corpus& corpus) {
  for (const Document& doc : corpus.documents()) out << document_to_json(doc).dump() << '\n';
}

std::vector<std::string> split_paragraphs(std::string_view body) {
  std::vector<std::string> out;
  std::size_t start = 0;
  std::size_t pos = 0;
  auto flush = [&](std::size_t end) {
    auto para = trim(body.substr(start, end - start));
    if (!para.empty()) out.emplace_back(para);
  };
  while (pos < body.size()) {
    if (body[pos] != '\n') {
      ++pos;
      continue;
    }
    // A paragraph break is a newline followed by an otherwise blank line.
    std::size_t q = pos + 1;
    bool blank_line = false;
    while (q < body.size()) {
      const char c = body[q];
      if (c == '\n') {
        blank_line = true;
        break;
      }
      if (c != ' ' && c != '\t' && c != '\r') break;
      ++q;
    }
    if (!blank_line) {
      pos = q;
      continue;
    }
    flush(pos);
    // Swallow any further blank lines.
    std::size_t next = q;
    while (next < body.size() &&
           (body[next] == '\n' || body[next] == ' ' || body[next] == '\t' || body[next] == '\r')) {
      ++next;
    }
    start = pos = next;
  }
  if (start < body.size()) flush(body.size());
  return out;
}

std::vector<DocumentUnit> segment(const Corpus& corpus, UnitKind kind) {
  if (corpus.empty()) throw Error("empty_corpus", "empty corpus");
  std::vector<DocumentUnit> units;
  units.reserve(corpus.size());

  if (kind == UnitKind::headline) {
    std::vector<std::string> missing;
    for (const Document& doc : corpus.documents()) {
      if (!doc.title || doc.title->empty()) missing.push_back(doc.id);
    }
    if (!missing.empty()) {
      std::string msg = "documents without a title: ";
      for (std::size_t i = 0; i < missing.size() && i < 20; ++i) {
        if (i) msg += ", ";
        msg += missing[i];
      }
      if (missing.size() > 20) msg += ", ... (" + std::to_string(missing.size()) + " total)";
      throw Error("missing_title", msg);
    }
  }

  const auto& docs = corpus.documents();
  for (std::size_t d = 0; d < docs.size(); ++d) {
    const Document& doc = docs[d];
    switch (kind) {
      case UnitKind::article:
        units.push_back({doc.id, doc.id, d, kind, 0, doc.body});
        break;
      case UnitKind::headline:
        units.push_back({doc.id + "#h", doc.id, d, kind, 0, *doc.title});
        break;
      case UnitKind::paragraph: {
        auto paras = split_paragraphs(doc.body);
        for (std::size_t k = 0; k < paras.size(); ++k) {
          units.push_back({doc.id + "#p" + std::to_string(k), doc.id, d, kind, k,
                           std::move(paras[k])});
        }
        break;
      }
    }
  }
  return units;
}

std::vector<std::size_t> window_indices(const std::vector<DocumentUnit>& units,
                                        const Corpus& corpus, TimePoint start, TimePoint end) {
  if (!(start < end)) throw Error("invalid_window", "window start must precede end");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < units.size(); ++i) {
    const Document& parent = corpus.document(units[i].parent_index);
    if (!parent.published_at) {
      throw Error("missing_date", "document '" + parent.id + "' has no published_at");
    }
    const TimePoint t = *parent.published_at;
    if (start <= t && t < end) out.push_back(i);
  }
  return out;
}

std::vector<DocumentUnit> filter_window(const std::vector<DocumentUnit>& units,
                                        const Corpus& corpus, TimePoint start, TimePoint end) {
  std::vector<DocumentUnit> out;
  for (std::size_t i : window_indices(units, corpus, start, end)) out.push_back(units[i]);
  return out;
}

}  // namespace cosum
