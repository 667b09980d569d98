#include "cosum/service.hpp"

#include <map>
#include <mutex>
#include <semaphore>
#include <sstream>

#include <httplib.h>

#include "cosum/error.hpp"

namespace cosum {

using nlohmann::json;

int http_status_for(const std::string& code) {
  if (code == "not_found") return 404;
  if (code == "ambiguous_corpus") return 409;
  if (code == "internal") return 500;
  if (code.rfind("invalid_", 0) == 0 || code == "bad_request" || code == "empty_corpus" ||
      code == "missing_title" || code == "missing_date") {
    return 400;
  }
  return 422;
}

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json; charset=utf-8");
}

void send_error(httplib::Response& res, const std::string& code, const std::string& message) {
  send_json(res, http_status_for(code), {{"error", {{"code", code}, {"message", message}}}});
}

json parse_body(const httplib::Request& req) {
  try {
    return json::parse(req.body);
  } catch (const json::exception& e) {
    throw Error("invalid_json", std::string("request body is not valid JSON: ") + e.what());
  }
}

template <typename T>
T query_number(const httplib::Request& req, const char* key, T fallback) {
  if (!req.has_param(key)) return fallback;
  const std::string text = req.get_param_value(key);
  std::istringstream in(text);
  T value{};
  in >> value;
  if (in.fail() || !in.eof()) {
    throw Error("invalid_argument", std::string("query parameter '") + key + "' is not a number");
  }
  return value;
}

UnitKind query_unit(const httplib::Request& req) {
  return req.has_param("unit") ? parse_unit_kind(req.get_param_value("unit")) : UnitKind::article;
}

json corpus_stats(const CorpusInfo& info, const Corpus& corpus) {
  std::map<std::string, std::size_t> sources;
  std::size_t dated = 0, titled = 0;
  std::optional<TimePoint> first, last;
  for (const auto& d : corpus.documents()) {
    ++sources[d.source];
    if (d.title) ++titled;
    if (d.published_at) {
      ++dated;
      if (!first || *d.published_at < *first) first = d.published_at;
      if (!last || *d.published_at > *last) last = d.published_at;
    }
  }
  std::size_t paragraphs = 0;
  for (const auto& d : corpus.documents()) paragraphs += split_paragraphs(d.body).size();
  json j = corpus_info_to_json(info);
  j["sources"] = sources;
  j["dated_documents"] = dated;
  j["first_published"] = first ? json(format_iso8601(*first)) : json(nullptr);
  j["last_published"] = last ? json(format_iso8601(*last)) : json(nullptr);
  j["units"] = {{"article", corpus.size()}, {"paragraph", paragraphs}, {"headline", titled}};
  return j;
}

}  // namespace

struct Service::Impl {
  RunStore& store;
  ServiceOptions options;
  httplib::Server server;
  std::counting_semaphore<1024> jobs;
  bool bound = false;
  std::mutex lifecycle;
  bool started = false;
  bool stopped = false;

  Impl(RunStore& s, ServiceOptions o)
      : store(s), options(std::move(o)),
        jobs(static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(options.workers, 1, 1024))) {
    const std::size_t threads = std::max<std::size_t>(2, options.http_threads);
    server.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
    // httplib's default also sets SO_REUSEPORT, which would let a second
    // server share a port that is already taken.
    server.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    });
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
    server.set_exception_handler([](const httplib::Request&, httplib::Response& res,
                                    std::exception_ptr ep) {
      try {
        std::rethrow_exception(ep);
      } catch (const Error& e) {
        send_error(res, e.code(), e.what());
      } catch (const std::exception& e) {
        send_error(res, "internal", e.what());
      } catch (...) {
        send_error(res, "internal", "unknown failure");
      }
    });
    routes();
  }

  template <typename Fn>
  auto guarded(Fn&& fn) {
    jobs.acquire();
    struct Release {
      std::counting_semaphore<1024>& s;
      ~Release() { s.release(); }
    } release{jobs};
    return fn();
  }

  void submit(const httplib::Request& req, httplib::Response& res, RunKind kind) {
    const std::string id = req.path_params.at("id");
    const json body = parse_body(req);
    if (!store.find_corpus(id)) throw Error("not_found", "unknown corpus: " + id);
    auto [record, created] = guarded([&] { return store.submit(id, kind, body); });
    json out = run_to_json(record);
    out["cache_hit"] = !created;
    send_json(res, created ? 201 : 200, out);
  }

  void routes() {
    server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
      res.status = 204;
    });

    server.Get("/corpora", [this](const httplib::Request&, httplib::Response& res) {
      json out = json::array();
      for (const auto& info : store.list_corpora()) out.push_back(corpus_info_to_json(info));
      send_json(res, 200, {{"corpora", out}});
    });

    server.Post("/corpora", [this](const httplib::Request& req, httplib::Response& res) {
      IngestOptions opts;
      opts.name = req.has_param("name") ? req.get_param_value("name") : "corpus";
      opts.source_path = "upload";
      std::istringstream in(req.body);
      IngestReport report;
      const Corpus corpus = ingest_jsonl(in, opts, &report);
      const CorpusInfo info = store.add_corpus(corpus);
      json issues = json::array();
      for (const auto& i : report.issues) issues.push_back({{"line", i.line}, {"message", i.message}});
      json out = corpus_info_to_json(info);
      out["ingest"] = {{"lines_read", report.lines_read}, {"accepted", report.accepted},
                       {"issues", issues}};
      send_json(res, 201, out);
    });

    server.Get("/corpora/:id/stats", [this](const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.path_params.at("id");
      const auto info = store.find_corpus(id);
      if (!info) throw Error("not_found", "unknown corpus: " + id);
      send_json(res, 200, corpus_stats(*info, *store.load_corpus(info->id)));
    });

    server.Post("/corpora/:id/summaries", [this](const httplib::Request& req, httplib::Response& res) {
      submit(req, res, RunKind::summary);
    });
    server.Post("/corpora/:id/snapshots", [this](const httplib::Request& req, httplib::Response& res) {
      submit(req, res, RunKind::snapshot);
    });
    server.Post("/corpora/:id/comparisons",
                [this](const httplib::Request& req, httplib::Response& res) {
                  submit(req, res, RunKind::comparison);
                });

    server.Get("/corpora/:id/kwic", [this](const httplib::Request& req, httplib::Response& res) {
      const auto corpus = store.load_corpus(req.path_params.at("id"));
      const std::string phrase = req.get_param_value("phrase");
      if (phrase.empty()) throw Error("invalid_argument", "query parameter 'phrase' is required");
      const auto limit = query_number<std::size_t>(req, "limit", 10);
      const auto seed = query_number<std::uint64_t>(req, "seed", 0);
      const auto window = query_number<std::size_t>(req, "window", 8);
      const auto units = segment(*corpus, query_unit(req));
      const auto snippets = guarded([&] { return kwic(units, phrase, limit, window, seed); });
      send_json(res, 200, {{"phrase", phrase}, {"seed", seed}, {"snippets", kwic_to_json(snippets)}});
    });

    server.Get("/corpora/:id/dupes", [this](const httplib::Request& req, httplib::Response& res) {
      const auto corpus = store.load_corpus(req.path_params.at("id"));
      const double threshold = query_number<double>(req, "threshold", 0.95);
      if (!(threshold > 0.0 && threshold <= 1.0)) {
        throw Error("invalid_argument", "threshold must lie in (0, 1]");
      }
      const UnitKind unit = query_unit(req);
      json out = guarded([&] {
        const auto units = segment(*corpus, unit);
        const BuiltMatrix m = store.matrix_cache().get_or_build(units, duplicate_vocab_params());
        const auto pairs = near_duplicates(m.counts, threshold);
        json list = json::array();
        for (const auto& p : pairs) {
          list.push_back({{"first", units[p.first].unit_id},
                          {"second", units[p.second].unit_id},
                          {"cosine", p.cosine}});
        }
        return json{{"threshold", threshold},
                    {"unit", std::string(to_string(unit))},
                    {"rows", units.size()},
                    {"duplicate_fraction", duplicate_fraction(pairs, units.size())},
                    {"pairs", list}};
      });
      send_json(res, 200, out);
    });

    server.Get("/runs", [this](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, {{"runs", store.list_runs()}});
    });

    server.Get("/runs/:id", [this](const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.path_params.at("id");
      const auto record = store.find_run(id);
      if (!record) throw Error("not_found", "unknown run: " + id);
      send_json(res, 200, run_to_json(*record));
    });

    server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
      if (!res.body.empty()) return;
      if (res.status == 404) send_error(res, "not_found", "no route for " + req.method + " " + req.path);
      else if (res.status == 400) send_error(res, "bad_request", "malformed request");
    });
  }
};

Service::Service(RunStore& store, ServiceOptions options)
    : impl_(std::make_unique<Impl>(store, std::move(options))) {}

Service::~Service() { stop(); }

int Service::bind() {
  auto& s = impl_->server;
  int port = impl_->options.port;
  if (port == 0) {
    port = s.bind_to_any_port(impl_->options.host);
    if (port < 0) throw Error("port_in_use", "cannot bind any port on " + impl_->options.host);
  } else if (!s.bind_to_port(impl_->options.host, port)) {
    throw Error("port_in_use",
                "cannot bind " + impl_->options.host + ":" + std::to_string(port) + " (in use?)");
  }
  impl_->bound = true;
  return port;
}

void Service::run() {
  if (!impl_->bound) throw Error("invalid_argument", "Service::run called before bind");
  {
    std::lock_guard lock(impl_->lifecycle);
    if (impl_->stopped) return;
    impl_->started = true;
  }
  impl_->server.listen_after_bind();
}

void Service::stop() {
  if (!impl_) return;
  bool started = false;
  {
    std::lock_guard lock(impl_->lifecycle);
    impl_->stopped = true;
    started = impl_->started;
  }
  if (started) {
    impl_->server.wait_until_ready();
    impl_->server.stop();
  }
}

}  // namespace cosum
