#include "cosum/matrix_cache.hpp"

#include <cstdint>
#include <fstream>
#include <functional>
#include <thread>
#include <type_traits>

#include "cosum/error.hpp"
#include "cosum/hash.hpp"

namespace cosum {
namespace {

constexpr char kMagic[8] = {'C', 'O', 'S', 'U', 'M', 'M', 'X', '1'};

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}
  void u64(std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out_.write(reinterpret_cast<const char*>(b), 8);
  }
  void str(const std::string& s) {
    u64(s.size());
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  template <typename T>
  void vec(const std::vector<T>& v) {
    u64(v.size());
    for (const T& x : v) u64(static_cast<std::uint64_t>(x));
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}
  std::uint64_t u64() {
    unsigned char b[8];
    if (!in_.read(reinterpret_cast<char*>(b), 8)) throw Error("cache_corrupt", "truncated cache file");
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }
  std::string str() {
    const auto n = u64();
    std::string s(n, '\0');
    if (!in_.read(s.data(), static_cast<std::streamsize>(n))) {
      throw Error("cache_corrupt", "truncated cache file");
    }
    return s;
  }
  template <typename T>
  std::vector<T> vec() {
    const auto n = u64();
    std::vector<T> v;
    v.reserve(n);
    for (std::uint64_t k = 0; k < n; ++k) v.push_back(static_cast<T>(u64()));
    return v;
  }

 private:
  std::istream& in_;
};

}  // namespace

std::string matrix_cache_key(std::span<const DocumentUnit> units, const VocabularyParams& params) {
  ContentHasher h;
  h.field(std::string_view("matrix-v1"));
  h.field(std::uint64_t{params.ngram.min_n}).field(std::uint64_t{params.ngram.max_n});
  h.field(std::uint64_t{params.min_df});
  h.field(std::uint64_t{units.size()});
  for (const DocumentUnit& u : units) h.field(u.text);
  return h.hex_digest();
}

void save_matrix(const std::filesystem::path& path, const PhraseVocabulary& vocab,
                 const CountMatrix& counts) {
  const auto tmp = std::filesystem::path(
      path.string() + "." + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())) +
      ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("io_error", "cannot write '" + tmp.string() + "'");
    out.write(kMagic, sizeof kMagic);
    Writer w(out);
    const auto& p = vocab.params();
    w.u64(p.ngram.min_n);
    w.u64(p.ngram.max_n);
    w.u64(p.min_df);
    w.u64(vocab.size());
    for (const auto& phrase : vocab.phrases()) w.str(phrase);
    w.vec(vocab.doc_freq());
    w.vec(vocab.total_count());
    w.u64(counts.rows());
    w.u64(counts.cols());
    w.vec(counts.row_ptr());
    w.vec(counts.col_idx());
    w.vec(counts.counts());
    if (!out) throw Error("io_error", "write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

BuiltMatrix load_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io_error", "cannot open '" + path.string() + "'");
  char magic[sizeof kMagic];
  if (!in.read(magic, sizeof magic) || !std::equal(magic, magic + sizeof magic, kMagic)) {
    throw Error("cache_corrupt", "not a matrix cache file: '" + path.string() + "'");
  }
  Reader r(in);
  VocabularyParams params;
  params.ngram.min_n = r.u64();
  params.ngram.max_n = r.u64();
  params.min_df = r.u64();
  const auto p = r.u64();
  std::vector<std::string> phrases;
  phrases.reserve(p);
  for (std::uint64_t j = 0; j < p; ++j) phrases.push_back(r.str());
  auto df = r.vec<std::size_t>();
  auto total = r.vec<std::size_t>();
  const auto rows = r.u64();
  const auto cols = r.u64();
  auto ptr = r.vec<std::size_t>();
  auto idx = r.vec<std::uint32_t>();
  auto val = r.vec<std::uint32_t>();
  return BuiltMatrix{PhraseVocabulary(std::move(phrases), std::move(df), std::move(total), params),
                     CountMatrix(rows, cols, std::move(ptr), std::move(idx), std::move(val)),
                     true};
}

BuiltMatrix build_matrix(std::span<const DocumentUnit> units, const VocabularyParams& params) {
  PhraseVocabulary vocab = build_vocabulary(units, params);
  CountMatrix counts = build_count_matrix(units, vocab);
  return BuiltMatrix{std::move(vocab), std::move(counts), false};
}

BuiltMatrix MatrixCache::get_or_build(std::span<const DocumentUnit> units,
                                      const VocabularyParams& params) const {
  if (dir_.empty()) return build_matrix(units, params);
  const auto path = dir_ / (matrix_cache_key(units, params) + ".bin");
  if (std::filesystem::exists(path)) return load_matrix(path);
  BuiltMatrix built = build_matrix(units, params);
  std::filesystem::create_directories(dir_);
  save_matrix(path, built.vocab, built.counts);
  return built;
}

}  // namespace cosum
