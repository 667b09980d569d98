#pragma once

#include <cstddef>
#include <memory>
#include <string>

#include "cosum/run_store.hpp"

namespace cosum {

struct ServiceOptions {
  std::string host = "127.0.0.1";
  int port = 8080;          // 0 picks a free port
  std::size_t workers = 2;  // concurrent analysis jobs
  std::size_t http_threads = 8;
};

// HTTP/JSON front end over a RunStore:
//   GET  /corpora                      POST /corpora (JSONL body, ?name=)
//   GET  /corpora/{id}/stats
//   POST /corpora/{id}/summaries       POST /corpora/{id}/snapshots
//   POST /corpora/{id}/comparisons
//   GET  /corpora/{id}/kwic?phrase=&limit=&seed=&window=&unit=
//   GET  /corpora/{id}/dupes?threshold=&unit=
//   GET  /runs                         GET  /runs/{id}
// Errors are {"error": {"code", "message"}}.
class Service {
 public:
  Service(RunStore& store, ServiceOptions options);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Binds the listening socket and returns the bound port. Throws
  // Error{"port_in_use"} if the port cannot be bound.
  int bind();
  // Serves until stop(); requires a prior bind().
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// HTTP status for an error code.
int http_status_for(const std::string& code);

}  // namespace cosum
