#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "cosum/cli.hpp"
#include "cosum/synthetic.hpp"

using namespace cosum;
using nlohmann::json;

namespace {

struct Result {
  int status;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "cosum");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int status = cli_dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  return {status, out.str(), err.str()};
}

struct Workspace {
  std::filesystem::path dir;
  std::string corpus;

  Workspace() {
    dir = std::filesystem::temp_directory_path() /
          ("cosum-cli-test-" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(dir);
    SyntheticParams p;
    p.n_units = 150;
    p.vocab_size = 300;
    p.n_planted = 3;
    p.planted_rate_pos = 0.03;
    p.unit_length = 50;
    p.seed = 91;
    p.label_sources = std::make_pair(std::string("alpha"), std::string("beta"));
    corpus = (dir / "demo.jsonl").string();
    std::ofstream out(corpus);
    write_jsonl(out, synthetic_corpus(p).corpus);
  }
  ~Workspace() { std::filesystem::remove_all(dir); }

  std::string file(const std::string& name, const std::string& text) const {
    const auto path = dir / name;
    std::ofstream(path) << text;
    return path.string();
  }
};

json last_error(const std::string& err) {
  std::istringstream in(err);
  std::string line, last;
  while (std::getline(in, line)) {
    if (!line.empty()) last = line;
  }
  return json::parse(last);
}

}  // namespace

TEST_CASE("summarize uses the recommended defaults") {
  Workspace w;
  const Result r = run({"summarize", "--corpus", w.corpus, "--terms", "qtopic", "--format", "json"});
  REQUIRE(r.status == 0);
  const json s = json::parse(r.out);
  CHECK(s["method"] == "lasso");
  CHECK(s["scheme"] == "l2");
  CHECK(s["unit"] == "article");
  CHECK(s["rule"] == "count:1");
  CHECK(s["phrases"].size() <= 15);
  CHECK(s["phrases"].size() > 0);

  const Result csv = run({"summarize", "--corpus", w.corpus, "--terms", "qtopic", "--k", "3",
                          "--method", "correlation", "--format", "csv"});
  REQUIRE(csv.status == 0);
  CHECK(csv.out.rfind("rank,phrase,score,lambda,method\n", 0) == 0);
  const Result table = run({"summarize", "--corpus", w.corpus, "--terms", "qtopic", "--k", "3"});
  REQUIRE(table.status == 0);
  CHECK_FALSE(table.out.empty());
}

TEST_CASE("alphabetical display order") {
  Workspace w;
  const Result by_score = run({"summarize", "--corpus", w.corpus, "--terms", "qtopic", "--format", "json"});
  const Result alpha = run({"summarize", "--corpus", w.corpus, "--terms", "qtopic", "--format", "json",
                            "--order", "alpha"});
  REQUIRE(by_score.status == 0);
  REQUIRE(alpha.status == 0);
  std::vector<std::string> a, b;
  for (const auto& p : json::parse(by_score.out)["phrases"]) a.push_back(p["phrase"]);
  for (const auto& p : json::parse(alpha.out)["phrases"]) b.push_back(p["phrase"]);
  CHECK(std::is_sorted(b.begin(), b.end()));
  std::sort(a.begin(), a.end());
  CHECK(a == b);
  CHECK(run({"summarize", "--corpus", w.corpus, "--terms", "qtopic", "--order", "random"}).status == 1);
}

TEST_CASE("config files and flags combine") {
  Workspace w;
  const std::string cfg = w.file("cfg.json", R"({"terms": ["qtopic"], "k": 4, "method": "cooccurrence"})");
  const Result r = run({"summarize", "--corpus", w.corpus, "--config", cfg, "--format", "json"});
  REQUIRE(r.status == 0);
  const json s = json::parse(r.out);
  CHECK(s["method"] == "cooccurrence");
  CHECK(s["phrases"].size() <= 4);
  const Result o = run({"summarize", "--corpus", w.corpus, "--config", cfg, "--k", "2", "--format", "json"});
  REQUIRE(o.status == 0);
  CHECK(json::parse(o.out)["phrases"].size() <= 2);
}

TEST_CASE("usage errors exit 2 with usage text and a JSON error line") {
  const Result r = run({"summarize", "--corpus", "x.jsonl", "--terms", "a", "--bogus"});
  CHECK(r.status == 2);
  CHECK(r.out.find("--terms") != std::string::npos);
  CHECK(last_error(r.err)["error"]["code"] == "usage");
  CHECK(run({"frobnicate"}).status == 2);
  CHECK(run({"summarize", "--terms", "a"}).status == 2);
  const Result help = run({"--help"});
  CHECK(help.status == 0);
  CHECK(help.out.find("summarize") != std::string::npos);
}

TEST_CASE("runtime errors exit 1 with a single JSON line") {
  Workspace w;
  const Result missing = run({"summarize", "--corpus", (w.dir / "absent.jsonl").string(), "--terms", "x"});
  CHECK(missing.status == 1);
  CHECK(missing.err.find('\n') == missing.err.size() - 1);
  CHECK(json::parse(missing.err)["error"].contains("code"));
  const Result degenerate = run({"summarize", "--corpus", w.corpus, "--terms", "neverseen"});
  CHECK(degenerate.status == 1);
  CHECK(last_error(degenerate.err)["error"]["code"] == "degenerate_labeling");
  const Result bad_method = run({"summarize", "--corpus", w.corpus, "--terms", "qtopic", "--method", "svm"});
  CHECK(bad_method.status == 1);
}

TEST_CASE("ingest, store-backed runs and replay") {
  Workspace w;
  const std::string store = (w.dir / "store").string();
  const Result ingest = run({"ingest", w.corpus, "--name", "demo", "--store", store});
  REQUIRE(ingest.status == 0);
  const json info = json::parse(ingest.out);
  CHECK(info["documents"] == 150);
  const std::string id = info["id"];

  const Result first = run({"summarize", "--corpus", id, "--store", store, "--terms", "qtopic", "--format", "json"});
  REQUIRE(first.status == 0);
  const std::string run_id = json::parse(first.out)["run_id"];
  const Result second = run({"summarize", "--corpus", "demo", "--store", store, "--terms", "qtopic", "--format", "json"});
  REQUIRE(second.status == 0);
  CHECK(json::parse(second.out)["run_id"] == run_id);

  const Result list = run({"runs", "list", "--store", store});
  REQUIRE(list.status == 0);
  CHECK(list.out.find(run_id) != std::string::npos);
  const Result show = run({"runs", "show", run_id, "--store", store});
  REQUIRE(show.status == 0);
  CHECK(json::parse(show.out)["run_id"] == run_id);
  const Result replay = run({"runs", "replay", run_id, "--store", store});
  CHECK(replay.status == 0);
  CHECK(run({"runs", "show", "nope", "--store", store}).status == 1);
}

TEST_CASE("snapshot, compare, kwic, dupes and stoplist commands") {
  Workspace w;
  const std::string spec = w.file("spec.json", R"({"terms": ["qtopic"], "k": 5, "windows": [
      {"name": "h1", "start": "2020-01-01", "end": "2020-07-01"},
      {"name": "h2", "start": "2020-07-01", "end": "2021-01-01"}]})");
  const Result snap = run({"snapshot", "--corpus", w.corpus, "--spec", spec});
  REQUIRE(snap.status == 0);
  CHECK(json::parse(snap.out)["windows"].size() == 2);
  const Result grid = run({"snapshot", "--corpus", w.corpus, "--spec", spec, "--format", "csv", "--workers", "2"});
  REQUIRE(grid.status == 0);
  CHECK(grid.out.rfind("phrase,h1,h2", 0) == 0);

  const Result between = run({"compare", "--corpus", w.corpus, "--mode", "between", "--source-a", "alpha",
                              "--source-b", "beta", "--format", "json"});
  REQUIRE(between.status == 0);
  CHECK(json::parse(between.out)["rule"] == "source:alpha/beta");
  const Result same = run({"compare", "--corpus", w.corpus, "--mode", "between", "--source-a", "alpha",
                           "--source-b", "alpha"});
  CHECK(same.status == 1);

  const Result k = run({"kwic", "--corpus", w.corpus, "--phrase", "qtopic", "--limit", "2", "--format", "json"});
  REQUIRE(k.status == 0);
  CHECK(json::parse(k.out).size() == 2);
  const Result d = run({"dupes", "--corpus", w.corpus, "--threshold", "0.95", "--format", "json"});
  REQUIRE(d.status == 0);
  CHECK(run({"dupes", "--corpus", w.corpus, "--threshold", "0"}).status != 0);

  const Result stop = run({"stoplist", "print"});
  REQUIRE(stop.status == 0);
  CHECK(stop.out.find("\nthe\n") != std::string::npos);
}
